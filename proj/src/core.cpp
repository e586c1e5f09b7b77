#include "offpolicy/core.hpp"

#include <cmath>
#include <stdexcept>

#include "offpolicy/math.hpp"

namespace offpolicy {

std::vector<double> Policy::full_probs(const Context& x) const {
  std::vector<double> probs(action_count());
  for (int a = 0; a < action_count(); ++a) probs[a] = prob(x, a);
  return probs;
}

int Policy::sample(const Context& x, CounterRng& rng) const {
  return rng.next_categorical(full_probs(x));
}

UniformPolicy::UniformPolicy(int action_count) : k_(action_count) {
  if (k_ < 1) throw std::invalid_argument("UniformPolicy: action count < 1");
}

std::vector<double> UniformPolicy::full_probs(const Context&) const {
  return std::vector<double>(k_, 1.0 / k_);
}

LoggedDataset::LoggedDataset(std::vector<LoggedRecord> records,
                             int action_count)
    : records_(std::move(records)), action_count_(action_count) {
  if (records_.empty())
    throw std::invalid_argument("LoggedDataset: empty dataset");
  if (action_count_ < 1)
    throw std::invalid_argument("LoggedDataset: action count < 1");
  feature_dim_ = static_cast<int>(records_.front().context.features.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const LoggedRecord& r = records_[i];
    if (static_cast<int>(r.context.features.size()) != feature_dim_)
      throw std::invalid_argument("LoggedDataset: inconsistent feature_dim at record " +
                                  std::to_string(i));
    for (double f : r.context.features)
      if (!std::isfinite(f))
        throw std::invalid_argument("LoggedDataset: non-finite feature at record " +
                                    std::to_string(i));
    if (r.action < 0 || r.action >= action_count_)
      throw std::invalid_argument("LoggedDataset: action out of range at record " +
                                  std::to_string(i));
    if (!(r.cost >= -1.0 && r.cost <= 0.0))
      throw std::invalid_argument("LoggedDataset: cost outside [-1, 0] at record " +
                                  std::to_string(i));
    if (!(r.propensity > 0.0 && r.propensity <= 1.0))
      throw std::invalid_argument("LoggedDataset: propensity outside (0, 1] at record " +
                                  std::to_string(i));
  }
}

Environment::Environment(std::vector<Context> contexts, int action_count,
                         double epsilon,
                         std::shared_ptr<const Policy> behavior)
    : contexts_(std::move(contexts)),
      action_count_(action_count),
      epsilon_(epsilon),
      behavior_(std::move(behavior)) {
  if (contexts_.empty()) throw std::invalid_argument("empty environment");
  if (action_count_ < 1)
    throw std::invalid_argument("Environment: action count < 1");
  if (!(epsilon_ >= 0.0 && epsilon_ <= 0.5))
    throw std::invalid_argument("Environment: epsilon outside [0, 0.5]");
  for (const Context& x : contexts_)
    if (x.label < 0 || x.label >= action_count_)
      throw std::invalid_argument("Environment: context missing a valid label");
}

const Policy& Environment::behavior() const {
  if (!behavior_)
    throw std::logic_error("environment lacks a behavior policy");
  return *behavior_;
}

double Environment::expected_cost(const Context& x, int action) const {
  const double p_reward =
      epsilon_ + (action == x.label ? 1.0 - 2.0 * epsilon_ : 0.0);
  return -p_reward;
}

LoggedDataset Environment::sample_feedback(std::size_t n,
                                           CounterRng& rng) const {
  const Policy& pi0 = behavior();
  std::vector<LoggedRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Context& x = contexts_[rng.next_index(contexts_.size())];
    const int a = pi0.sample(x, rng);
    const double p_reward = -expected_cost(x, a);
    const double cost = rng.next_double() < p_reward ? -1.0 : 0.0;
    records.push_back({x, a, cost, pi0.prob(x, a)});
  }
  return LoggedDataset(std::move(records), action_count_);
}

double true_risk(const Policy& policy, const Environment& env) {
  std::vector<double> per_context(env.contexts().size());
  for (std::size_t i = 0; i < env.contexts().size(); ++i) {
    const Context& x = env.contexts()[i];
    const std::vector<double> probs = policy.full_probs(x);
    double acc = 0.0;
    for (int a = 0; a < env.action_count(); ++a)
      acc += probs[a] * env.expected_cost(x, a);
    per_context[i] = acc;
  }
  return pairwise_mean(per_context);
}

double importance_weight(const LoggedRecord& record, const Policy& policy) {
  if (!(record.propensity > 0.0))
    throw std::invalid_argument("zero propensity");
  return policy.prob(record.context, record.action) / record.propensity;
}

}  // namespace offpolicy
