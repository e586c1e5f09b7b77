#include "offpolicy/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "offpolicy/estimators.hpp"
#include "offpolicy/math.hpp"

namespace offpolicy {

std::vector<Context> MulticlassDataset::contexts() const {
  std::vector<Context> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i)
    out.push_back({features[i], labels[i]});
  return out;
}

namespace {

void check_multiclass(const MulticlassDataset& mc) {
  if (mc.labels.size() != mc.features.size())
    throw std::invalid_argument("multiclass dataset: row count mismatch");
  if (mc.size() == 0)
    throw std::invalid_argument("multiclass dataset: empty");
  for (std::size_t i = 0; i < mc.size(); ++i) {
    if (mc.labels[i] < 0 || mc.labels[i] >= mc.class_count)
      throw std::invalid_argument("multiclass dataset: label out of range at row " +
                                  std::to_string(i));
    if (static_cast<int>(mc.features[i].size()) != mc.feature_dim)
      throw std::invalid_argument(
          "multiclass dataset: inconsistent feature dim at row " +
          std::to_string(i));
  }
}

// Peak-at-one-label softmax with all non-peak actions symmetric. Stable for
// tiny tau via the e^{-1/tau} form.
class LabelPeakPolicy : public Policy {
 public:
  LabelPeakPolicy(int action_count, double tau, std::vector<int> peak_of_label)
      : k_(action_count), peak_of_label_(std::move(peak_of_label)) {
    if (!(tau > 0.0))
      throw std::invalid_argument("label policy: tau must be > 0");
    const double off = std::exp(-1.0 / tau);
    const double z = 1.0 + (k_ - 1) * off;
    peak_prob_ = 1.0 / z;
    off_prob_ = off / z;
  }

  int action_count() const override { return k_; }

  double prob(const Context& x, int action) const override {
    return action == peak(x) ? peak_prob_ : off_prob_;
  }

  std::vector<double> full_probs(const Context& x) const override {
    std::vector<double> probs(k_, off_prob_);
    probs[peak(x)] = peak_prob_;
    return probs;
  }

 private:
  int peak(const Context& x) const {
    if (x.label < 0 || x.label >= k_)
      throw std::invalid_argument("label policy: context missing a valid label");
    return peak_of_label_[x.label];
  }

  int k_;
  std::vector<int> peak_of_label_;
  double peak_prob_;
  double off_prob_;
};

class LinearSoftmaxPolicy : public Policy {
 public:
  LinearSoftmaxPolicy(std::vector<double> theta, int action_count,
                      int feature_dim, double scale)
      : theta_(std::move(theta)),
        k_(action_count),
        p_(feature_dim),
        scale_(scale) {
    if (static_cast<int>(theta_.size()) != k_ * p_)
      throw std::invalid_argument("linear softmax: theta size != K*p");
  }

  int action_count() const override { return k_; }

  double prob(const Context& x, int action) const override {
    return full_probs(x)[action];
  }

  std::vector<double> full_probs(const Context& x) const override {
    if (static_cast<int>(x.features.size()) != p_)
      throw std::invalid_argument("linear softmax: context dim mismatch");
    std::vector<double> scores(k_);
    for (int a = 0; a < k_; ++a) {
      double s = 0.0;
      for (int j = 0; j < p_; ++j) s += theta_[a * p_ + j] * x.features[j];
      scores[a] = scale_ * s;
    }
    const double max_s = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (int a = 0; a < k_; ++a) {
      scores[a] = std::exp(scores[a] - max_s);
      z += scores[a];
    }
    for (int a = 0; a < k_; ++a) scores[a] /= z;
    return scores;
  }

 private:
  std::vector<double> theta_;
  int k_;
  int p_;
  double scale_;
};

}  // namespace

std::shared_ptr<const Policy> ideal_policy(int action_count, double tau) {
  std::vector<int> identity(action_count);
  std::iota(identity.begin(), identity.end(), 0);
  return std::make_shared<LabelPeakPolicy>(action_count, tau,
                                           std::move(identity));
}

std::shared_ptr<const Policy> faulty_policy(
    int action_count, double tau, const std::vector<int>& fault_labels,
    const std::vector<int>& shift_map) {
  // An empty fault set needs no shift map (the policy is exactly ideal).
  if (!fault_labels.empty() &&
      shift_map.size() != static_cast<std::size_t>(action_count))
    throw std::invalid_argument("faulty policy: shift map must cover [0, K)");
  std::vector<int> peak(action_count);
  std::iota(peak.begin(), peak.end(), 0);
  for (int label : fault_labels) {
    if (label < 0 || label >= action_count)
      throw std::invalid_argument("faulty policy: fault label out of range");
    const int target = shift_map[label];
    if (target < 0 || target >= action_count)
      throw std::invalid_argument("faulty policy: shift target out of range");
    if (target == label)
      throw std::invalid_argument("faulty policy: shift maps a label onto itself");
    peak[label] = target;
  }
  return std::make_shared<LabelPeakPolicy>(action_count, tau, std::move(peak));
}

std::shared_ptr<const Policy> default_faulty_policy(int action_count,
                                                    double tau) {
  const int fault_count = (action_count + 1) / 2;
  std::vector<int> faults(fault_count);
  std::iota(faults.begin(), faults.end(), 0);
  std::vector<int> shift(action_count);
  for (int a = 0; a < action_count; ++a) shift[a] = (a + 1) % action_count;
  return faulty_policy(action_count, tau, faults, shift);
}

std::shared_ptr<const Policy> linear_softmax_policy(std::vector<double> theta,
                                                    int action_count,
                                                    int feature_dim,
                                                    double scale) {
  return std::make_shared<LinearSoftmaxPolicy>(std::move(theta), action_count,
                                               feature_dim, scale);
}

namespace {

std::vector<double> softmax_scores(const std::vector<double>& theta, int k,
                                   int p, double inv_tau,
                                   const std::vector<double>& x) {
  std::vector<double> probs(k);
  for (int a = 0; a < k; ++a) {
    double s = 0.0;
    for (int j = 0; j < p; ++j) s += theta[a * p + j] * x[j];
    probs[a] = inv_tau * s;
  }
  const double max_s = *std::max_element(probs.begin(), probs.end());
  double z = 0.0;
  for (int a = 0; a < k; ++a) {
    probs[a] = std::exp(probs[a] - max_s);
    z += probs[a];
  }
  for (int a = 0; a < k; ++a) probs[a] /= z;
  return probs;
}

}  // namespace

std::shared_ptr<const Policy> learned_softmax_policy(
    const LoggedDataset& data, TrainingObjective objective, double tau,
    int epochs, double learning_rate) {
  if (!(tau > 0.0))
    throw std::invalid_argument("learned softmax: tau must be > 0");
  const int k = data.action_count();
  const int p = data.feature_dim();
  const double inv_tau = 1.0 / tau;
  const std::size_t n = data.size();
  std::vector<double> theta(static_cast<std::size_t>(k) * p, 0.0);
  AdamOptimizer adam(learning_rate);
  std::vector<double> grad(theta.size());
  std::vector<double> grad_d;  // SN denominator part
  if (objective == TrainingObjective::Sn) grad_d.resize(theta.size());

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    if (objective == TrainingObjective::Sn)
      std::fill(grad_d.begin(), grad_d.end(), 0.0);
    double numer = 0.0;  // sum pi c / q
    double denom = 0.0;  // sum pi / q
    for (std::size_t i = 0; i < n; ++i) {
      const LoggedRecord& r = data.records()[i];
      const std::vector<double> probs =
          softmax_scores(theta, k, p, inv_tau, r.context.features);
      const double pi_i = probs[r.action];
      const double cw = r.cost / r.propensity;
      numer += pi_i * cw;
      denom += pi_i / r.propensity;
      // d pi_i / d s_a = pi_i (1[a = a_i] - probs[a]); s_a = inv_tau x^T th_a
      for (int a = 0; a < k; ++a) {
        const double dpi =
            pi_i * ((a == r.action ? 1.0 : 0.0) - probs[a]) * inv_tau;
        const double coeff_n = dpi * cw;
        const double coeff_d = dpi / r.propensity;
        for (int j = 0; j < p; ++j) {
          grad[a * p + j] += coeff_n * r.context.features[j];
          if (objective == TrainingObjective::Sn)
            grad_d[a * p + j] += coeff_d * r.context.features[j];
        }
      }
    }
    double loss;
    if (objective == TrainingObjective::Ips) {
      loss = numer / static_cast<double>(n);
      for (double& g : grad) g /= static_cast<double>(n);
    } else {
      if (!(denom > 0.0))
        throw std::invalid_argument("degenerate SN denominator");
      loss = numer / denom;
      // quotient rule on (numer / denom)
      for (std::size_t idx = 0; idx < grad.size(); ++idx)
        grad[idx] = (grad[idx] * denom - numer * grad_d[idx]) / (denom * denom);
    }
    if (!std::isfinite(loss))
      throw std::runtime_error("learned softmax: non-finite loss at epoch " +
                               std::to_string(epoch));
    adam.step(theta, grad);
  }
  return linear_softmax_policy(std::move(theta), k, p, inv_tau);
}

std::vector<double> fit_supervised_softmax(const MulticlassDataset& mc,
                                           double l2, double learning_rate,
                                           int epochs) {
  check_multiclass(mc);
  const int k = mc.class_count;
  const int p = mc.feature_dim;
  const std::size_t n = mc.size();
  std::vector<double> theta(static_cast<std::size_t>(k) * p, 0.0);
  AdamOptimizer adam(learning_rate);
  std::vector<double> grad(theta.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> probs =
          softmax_scores(theta, k, p, 1.0, mc.features[i]);
      for (int a = 0; a < k; ++a) {
        const double coeff =
            (probs[a] - (a == mc.labels[i] ? 1.0 : 0.0)) / static_cast<double>(n);
        for (int j = 0; j < p; ++j)
          grad[a * p + j] += coeff * mc.features[i][j];
      }
    }
    for (std::size_t idx = 0; idx < theta.size(); ++idx)
      grad[idx] += 2.0 * l2 * theta[idx];
    adam.step(theta, grad);
  }
  return theta;
}

LoggedDataset bandit_feedback(const MulticlassDataset& mc,
                              const Policy& behavior, double epsilon,
                              std::uint64_t seed) {
  check_multiclass(mc);
  if (!(epsilon >= 0.0 && epsilon <= 0.5))
    throw std::invalid_argument("bandit_feedback: epsilon outside [0, 0.5]");
  CounterRng rng = CounterRng::from_parts({0x666565646261636bULL, seed});
  std::vector<LoggedRecord> records;
  records.reserve(mc.size());
  for (std::size_t i = 0; i < mc.size(); ++i) {
    Context x{mc.features[i], mc.labels[i]};
    const int a = behavior.sample(x, rng);
    const double p_reward =
        epsilon + (a == mc.labels[i] ? 1.0 - 2.0 * epsilon : 0.0);
    const double cost = rng.next_double() < p_reward ? -1.0 : 0.0;
    const double propensity = behavior.prob(x, a);
    records.push_back({std::move(x), a, cost, propensity});
  }
  return LoggedDataset(std::move(records), mc.class_count);
}

Environment make_environment(const MulticlassDataset& mc, double epsilon,
                             std::shared_ptr<const Policy> behavior) {
  check_multiclass(mc);
  return Environment(mc.contexts(), mc.class_count, epsilon,
                     std::move(behavior));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim spaces and stray carriage returns
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos
                         ? std::string()
                         : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

MulticlassDataset load_multiclass_csv(const std::string& path,
                                      const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty csv: " + path);
  const std::vector<std::string> header = split_csv_line(line);
  int label_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == label_column) label_idx = static_cast<int>(j);
  if (label_idx < 0)
    throw std::runtime_error("missing label column '" + label_column +
                             "' in " + path);

  std::vector<std::vector<double>> rows;
  std::vector<double> raw_labels;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("csv parse failure at row " +
                               std::to_string(row_no) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    std::vector<double> feats;
    feats.reserve(header.size() - 1);
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double value;
      try {
        std::size_t used = 0;
        value = std::stod(fields[j], &used);
        if (used != fields[j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::runtime_error("non-numeric field '" + fields[j] +
                                 "' at row " + std::to_string(row_no) +
                                 ", column '" + header[j] + "'");
      }
      if (static_cast<int>(j) == label_idx)
        raw_labels.push_back(value);
      else
        feats.push_back(value);
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw std::runtime_error("csv has no data rows: " + path);

  // Reindex labels to [0, K) in sorted order of distinct raw values.
  std::map<double, int> label_index;
  for (double v : raw_labels) label_index.emplace(v, 0);
  int next = 0;
  for (auto& [value, index] : label_index) index = next++;

  MulticlassDataset mc;
  mc.class_count = next;
  mc.feature_dim = static_cast<int>(rows.front().size());
  mc.features = std::move(rows);
  mc.labels.reserve(raw_labels.size());
  for (double v : raw_labels) mc.labels.push_back(label_index.at(v));

  // Standardize each feature column; constant columns become all-zeros.
  for (int j = 0; j < mc.feature_dim; ++j) {
    double mean = 0.0;
    for (const auto& r : mc.features) mean += r[j];
    mean /= static_cast<double>(mc.size());
    double var = 0.0;
    for (const auto& r : mc.features) var += (r[j] - mean) * (r[j] - mean);
    var /= static_cast<double>(mc.size());
    const double sigma = std::max(std::sqrt(var), 1e-12);
    for (auto& r : mc.features) r[j] = (r[j] - mean) / sigma;
  }
  check_multiclass(mc);
  return mc;
}

std::array<MulticlassDataset, 3> split(const MulticlassDataset& mc,
                                       const std::array<double, 3>& fractions,
                                       std::uint64_t seed) {
  check_multiclass(mc);
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split: negative fraction");
    total += f;
  }
  if (total > 1.0 + 1e-9)
    throw std::invalid_argument("split: fractions sum above 1");

  std::vector<std::size_t> order(mc.size());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng = CounterRng::from_parts({0x73706c6974ULL, seed});
  shuffle_inplace(order, rng);

  const double n = static_cast<double>(mc.size());
  std::array<std::size_t, 4> bounds{0, 0, 0, 0};
  double cum = 0.0;
  for (int s = 0; s < 3; ++s) {
    cum += fractions[s];
    bounds[s + 1] = static_cast<std::size_t>(std::llround(cum * n));
  }
  std::array<MulticlassDataset, 3> out;
  for (int s = 0; s < 3; ++s) {
    if (bounds[s + 1] <= bounds[s])
      throw std::invalid_argument("split: split " + std::to_string(s) +
                                  " receives 0 rows");
    MulticlassDataset part;
    part.class_count = mc.class_count;
    part.feature_dim = mc.feature_dim;
    for (std::size_t i = bounds[s]; i < bounds[s + 1]; ++i) {
      part.features.push_back(mc.features[order[i]]);
      part.labels.push_back(mc.labels[order[i]]);
    }
    out[s] = std::move(part);
  }
  return out;
}

MulticlassDataset make_blobs(std::size_t n, int class_count, int feature_dim,
                             double separation, std::uint64_t seed) {
  if (n == 0 || class_count < 2 || feature_dim < 1)
    throw std::invalid_argument("make_blobs: degenerate shape");
  CounterRng rng = CounterRng::from_parts({0x626c6f6273ULL, seed});
  std::vector<std::vector<double>> means(class_count,
                                         std::vector<double>(feature_dim));
  for (auto& m : means)
    for (double& v : m) v = separation * rng.next_gaussian();

  MulticlassDataset mc;
  mc.class_count = class_count;
  mc.feature_dim = feature_dim;
  mc.features.reserve(n);
  mc.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % class_count);
    std::vector<double> x(feature_dim);
    for (int j = 0; j < feature_dim; ++j)
      x[j] = means[label][j] + rng.next_gaussian();
    mc.features.push_back(std::move(x));
    mc.labels.push_back(label);
  }
  // Shuffle rows so splits do not stripe by label.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle_inplace(order, rng);
  MulticlassDataset shuffled;
  shuffled.class_count = class_count;
  shuffled.feature_dim = feature_dim;
  shuffled.features.reserve(n);
  shuffled.labels.reserve(n);
  for (std::size_t i : order) {
    shuffled.features.push_back(std::move(mc.features[i]));
    shuffled.labels.push_back(mc.labels[i]);
  }
  // Standardize like the CSV path so downstream behavior matches.
  for (int j = 0; j < feature_dim; ++j) {
    double mean = 0.0;
    for (const auto& r : shuffled.features) mean += r[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& r : shuffled.features)
      var += (r[j] - mean) * (r[j] - mean);
    var /= static_cast<double>(n);
    const double sigma = std::max(std::sqrt(var), 1e-12);
    for (auto& r : shuffled.features) r[j] = (r[j] - mean) / sigma;
  }
  return shuffled;
}

}  // namespace offpolicy
