#include "offpolicy/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "offpolicy/bounds.hpp"
#include "offpolicy/data_gen.hpp"
#include "offpolicy/estimators.hpp"
#include "offpolicy/math.hpp"
#include "offpolicy/pac_learn.hpp"
#include "offpolicy/rng.hpp"
#include "offpolicy/selection.hpp"

namespace offpolicy {

double relative_radius(double upper, double true_risk) {
  if (true_risk == 0.0) throw std::invalid_argument("undefined radius");
  return std::abs(upper / true_risk - 1.0);
}

void run_cells(std::size_t count, int threads,
               const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count;
           i = next.fetch_add(1))
        fn(i);
    });
  for (std::thread& t : pool) t.join();
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::uint64_t derived_seed(const ScenarioMatrix& m, std::size_t cell_index,
                           std::uint64_t user_seed, std::uint64_t tag) {
  CounterRng rng = CounterRng::from_parts({m.seed, cell_index, user_seed, tag});
  return rng.next_u64();
}

MulticlassDataset load_pool(const DatasetSpec& ds, std::uint64_t seed) {
  if (!ds.csv_path.empty())
    return load_multiclass_csv(ds.csv_path, ds.label_column);
  return make_blobs(ds.rows, ds.class_count, ds.feature_dim, ds.separation,
                    seed);
}

struct Cell {
  std::size_t index = 0;
  const DatasetSpec* ds = nullptr;
  std::size_t n = 0;
  double eps = 0.0;
  double tau0 = 0.0;
  double tau = 0.0;
  double alpha = 1.0;
  std::uint64_t user_seed = 0;
  std::string id;
};

void check_common(const ScenarioMatrix& m) {
  if (m.datasets.empty())
    throw std::invalid_argument("scenario matrix: no datasets");
  if (m.seeds.empty()) throw std::invalid_argument("scenario matrix: no seeds");
  if (!(m.delta > 0.0 && m.delta <= 1.0))
    throw std::invalid_argument("scenario matrix: delta must lie in (0, 1]");
}

std::vector<Cell> tightness_cells(const ScenarioMatrix& m) {
  std::vector<Cell> cells;
  for (const DatasetSpec& ds : m.datasets)
    for (std::size_t n : m.sample_sizes)
      for (double eps : m.epsilons)
        for (double tau0 : m.tau0s)
          for (double tau : m.taus)
            for (std::uint64_t s : m.seeds) {
              Cell c;
              c.index = cells.size();
              c.ds = &ds;
              c.n = n;
              c.eps = eps;
              c.tau0 = tau0;
              c.tau = tau;
              c.user_seed = s;
              c.id = m.name + "|" + ds.name + "|n=" + std::to_string(n) +
                     "|eps=" + fmtg(eps) + "|tau0=" + fmtg(tau0) +
                     "|tau=" + fmtg(tau) + "|seed=" + std::to_string(s);
              cells.push_back(std::move(c));
            }
  return cells;
}

std::vector<Cell> selection_cells(const ScenarioMatrix& m) {
  std::vector<Cell> cells;
  for (const DatasetSpec& ds : m.datasets)
    for (double eps : m.epsilons)
      for (double tau0 : m.tau0s)
        for (double tau : m.taus)
          for (std::uint64_t s : m.seeds) {
            Cell c;
            c.index = cells.size();
            c.ds = &ds;
            c.eps = eps;
            c.tau0 = tau0;
            c.tau = tau;
            c.user_seed = s;
            c.id = m.name + "|" + ds.name + "|eps=" + fmtg(eps) +
                   "|tau0=" + fmtg(tau0) + "|tau=" + fmtg(tau) +
                   "|seed=" + std::to_string(s);
            cells.push_back(std::move(c));
          }
  return cells;
}

std::vector<Cell> learning_cells(const ScenarioMatrix& m) {
  std::vector<Cell> cells;
  for (const DatasetSpec& ds : m.datasets)
    for (double eps : m.epsilons)
      for (double alpha : m.alphas)
        for (std::uint64_t s : m.seeds) {
          Cell c;
          c.index = cells.size();
          c.ds = &ds;
          c.eps = eps;
          c.alpha = alpha;
          c.user_seed = s;
          c.id = m.name + "|" + ds.name + "|eps=" + fmtg(eps) +
                 "|alpha=" + fmtg(alpha) + "|seed=" + std::to_string(s);
          cells.push_back(std::move(c));
        }
  return cells;
}

double bound_upper_for(const std::string& method,
                       std::span<const SampleTriple> triples, double lambda,
                       double delta, double clip_m) {
  BoundConfig cfg{lambda, delta, 1};
  if (method == "LS") return ls_bound(triples, cfg).upper;
  if (method == "IX") return ix_bound(triples, cfg).upper;
  if (method == "cIPS-L=1") return second_moment_bound(triples, cfg).upper;
  if (method == "cIPS-EB")
    return empirical_bernstein_bound(triples, clip_m, delta).upper;
  throw std::invalid_argument("unknown bound method: " + method);
}

SelectionMethod parse_selection_method(const std::string& s) {
  if (s == "IPS") return SelectionMethod::Ips;
  if (s == "SN") return SelectionMethod::Sn;
  if (s == "cIPS-EB") return SelectionMethod::CipsEb;
  if (s == "IX") return SelectionMethod::Ix;
  if (s == "cIPS-L=1") return SelectionMethod::CipsL1;
  if (s == "LS") return SelectionMethod::Ls;
  throw std::invalid_argument("unknown selection method: " + s);
}

std::vector<double> log_spaced_grid(int size) {
  if (size < 1) throw std::invalid_argument("lambda grid size must be >= 1");
  if (size == 100) return default_lambda_grid();
  std::vector<double> grid(size);
  if (size == 1) {
    grid[0] = 1e-2;
    return grid;
  }
  for (int i = 0; i < size; ++i)
    grid[i] = std::pow(10.0, -4.0 + 4.0 * i / (size - 1.0));
  grid.back() = 1.0;
  return grid;
}

// Shared matrix driver: evaluate cells on the pool, collect rows in
// cell-index order, flag failures without aborting.
StudyResult run_matrix(
    const ScenarioMatrix& m, const std::vector<Cell>& cells,
    const std::function<std::vector<MetricRow>(const Cell&)>& eval_cell) {
  std::vector<std::vector<MetricRow>> per_cell(cells.size());
  std::vector<std::string> errors(cells.size());
  run_cells(cells.size(), m.threads, [&](std::size_t i) {
    try {
      per_cell[i] = eval_cell(cells[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    } catch (...) {
      errors[i] = "unknown error";
    }
  });
  StudyResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i].empty()) {
      result.failures.push_back(cells[i].id + ": " + errors[i]);
      continue;
    }
    result.rows.insert(result.rows.end(), per_cell[i].begin(),
                       per_cell[i].end());
  }
  return result;
}

}  // namespace

StudyResult run_tightness(const ScenarioMatrix& matrix) {
  check_common(matrix);
  if (matrix.sample_sizes.empty())
    throw std::invalid_argument("tightness study: no sample sizes");
  const std::vector<std::string> methods =
      matrix.methods.empty()
          ? std::vector<std::string>{"LS", "IX", "cIPS-L=1", "cIPS-EB"}
          : matrix.methods;
  for (const std::string& s : methods)
    if (s != "LS" && s != "IX" && s != "cIPS-L=1" && s != "cIPS-EB")
      throw std::invalid_argument("unknown bound method: " + s);

  const std::vector<Cell> cells = tightness_cells(matrix);
  return run_matrix(matrix, cells, [&](const Cell& c) {
    const MulticlassDataset pool =
        load_pool(*c.ds, derived_seed(matrix, c.index, c.user_seed, 1));
    const auto behavior = default_faulty_policy(pool.class_count, c.tau0);
    const Environment env = make_environment(pool, c.eps, behavior);
    const auto target = ideal_policy(pool.class_count, c.tau);
    const double risk = true_risk(*target, env);

    CounterRng rng = CounterRng::from_parts(
        {matrix.seed, c.index, c.user_seed, 2});
    const LoggedDataset data = env.sample_feedback(c.n, rng);
    const std::vector<SampleTriple> triples = extract_triples(data, *target);

    // lambda = 1/sqrt(n) everywhere; the empirical-Bernstein clip level is
    // 1/lambda = sqrt(n) (clipping at 1/sqrt(n) itself would pin the EB
    // estimate inside [-1/sqrt(n), 0] and freeze its radius near 1).
    const double lambda = 1.0 / std::sqrt(static_cast<double>(c.n));
    std::vector<MetricRow> rows;
    rows.reserve(methods.size());
    for (const std::string& method : methods) {
      const double upper =
          bound_upper_for(method, triples, lambda, matrix.delta, 1.0 / lambda);
      rows.push_back({c.id, c.ds->name, method, "relative_radius",
                      relative_radius(upper, risk), 0.0});
      if (matrix.emit_bound_values)
        rows.push_back({c.id, c.ds->name, method, "bound_upper", upper, 0.0});
    }
    return rows;
  });
}

StudyResult run_coverage(const Environment& env, const Policy& policy,
                         const std::vector<std::string>& bound_set,
                         std::size_t n, int replications, double delta,
                         std::uint64_t seed, int threads) {
  if (bound_set.empty())
    throw std::invalid_argument("coverage study: empty bound set");
  if (replications < 1)
    throw std::invalid_argument("coverage study: replications must be >= 1");
  if (n < 2) throw std::invalid_argument("coverage study: n must be >= 2");
  for (const std::string& s : bound_set)
    if (s != "LS" && s != "IX" && s != "cIPS-L=1" && s != "cIPS-EB" &&
        s != "subgaussian")
      throw std::invalid_argument("unknown bound method: " + s);

  const double risk = true_risk(policy, env);
  const double lambda = 1.0 / std::sqrt(static_cast<double>(n));
  const double clip_m = 1.0 / lambda;
  const bool wants_subgaussian =
      std::find(bound_set.begin(), bound_set.end(), "subgaussian") !=
      bound_set.end();
  const double s_lambda =
      wants_subgaussian ? s_lambda_oracle(policy, env, lambda) : 0.0;

  const std::size_t b = bound_set.size();
  std::vector<std::uint8_t> covered(static_cast<std::size_t>(replications) *
                                    b);
  std::vector<std::string> errors(replications);
  run_cells(static_cast<std::size_t>(replications), threads,
            [&](std::size_t rep) {
              try {
                CounterRng rng =
                    CounterRng::from_parts({seed, 0x636f766572ull, rep});
                const LoggedDataset data = env.sample_feedback(n, rng);
                const std::vector<SampleTriple> triples =
                    extract_triples(data, policy);
                for (std::size_t j = 0; j < b; ++j) {
                  bool ok;
                  if (bound_set[j] == "subgaussian") {
                    const RiskInterval iv =
                        subgaussian_interval(triples, lambda, delta, s_lambda);
                    ok = iv.lower <= risk && risk <= iv.upper;
                  } else {
                    ok = risk <= bound_upper_for(bound_set[j], triples, lambda,
                                                 delta, clip_m);
                  }
                  covered[rep * b + j] = ok ? 1 : 0;
                }
              } catch (const std::exception& e) {
                errors[rep] = e.what();
              }
            });

  StudyResult result;
  for (int rep = 0; rep < replications; ++rep)
    if (!errors[rep].empty())
      result.failures.push_back("coverage rep " + std::to_string(rep) + ": " +
                                errors[rep]);
  const std::string id = "coverage|n=" + std::to_string(n) +
                         "|delta=" + fmtg(delta) +
                         "|reps=" + std::to_string(replications);
  for (std::size_t j = 0; j < b; ++j) {
    std::size_t hits = 0;
    for (int rep = 0; rep < replications; ++rep)
      hits += covered[static_cast<std::size_t>(rep) * b + j];
    const double rate = static_cast<double>(hits) / replications;
    const double se = std::sqrt(rate * (1.0 - rate) / replications);
    result.rows.push_back({id, "toy", bound_set[j], "coverage_rate", rate, se});
  }
  return result;
}

StudyResult run_selection_study(const ScenarioMatrix& matrix) {
  check_common(matrix);
  const std::vector<std::string> methods =
      matrix.methods.empty()
          ? std::vector<std::string>{"IPS", "SN", "cIPS-EB",
                                     "IX", "cIPS-L=1", "LS"}
          : matrix.methods;
  for (const std::string& s : methods) parse_selection_method(s);

  const std::vector<Cell> cells = selection_cells(matrix);
  return run_matrix(matrix, cells, [&](const Cell& c) {
    const MulticlassDataset pool =
        load_pool(*c.ds, derived_seed(matrix, c.index, c.user_seed, 1));
    const auto parts = split(pool, matrix.select_splits,
                             derived_seed(matrix, c.index, c.user_seed, 2));
    const int k = pool.class_count;
    const auto behavior = default_faulty_policy(k, c.tau0);

    const LoggedDataset fb_select = bandit_feedback(
        parts[1], *behavior, c.eps,
        derived_seed(matrix, c.index, c.user_seed, 3));
    const LoggedDataset fb_train =
        c.ds->train_on_selection
            ? fb_select
            : bandit_feedback(parts[0], *behavior, c.eps,
                              derived_seed(matrix, c.index, c.user_seed, 4));

    CandidateSet candidates;
    candidates.push_back({"pi0", behavior});
    candidates.push_back({"ideal", ideal_policy(k, c.tau)});
    candidates.push_back(
        {"theta-ips",
         learned_softmax_policy(fb_train, TrainingObjective::Ips, c.tau)});
    candidates.push_back(
        {"theta-sn",
         learned_softmax_policy(fb_train, TrainingObjective::Sn, c.tau)});

    const Environment env_test = make_environment(parts[2], c.eps, behavior);
    const double lambda_override =
        matrix.sqrt_n_lambda
            ? 1.0 / std::sqrt(static_cast<double>(fb_select.size()))
            : 0.0;

    std::vector<MetricRow> rows;
    rows.reserve(methods.size());
    for (const std::string& method : methods) {
      const SelectionResult res =
          select_with_method(fb_select, candidates,
                             parse_selection_method(method), matrix.delta,
                             lambda_override);
      const SelectionOutcome oc =
          classify_outcome(res, candidates, env_test, "pi0");
      double value = kOutcomeBetter;
      if (oc == SelectionOutcome::Worse) value = kOutcomeWorse;
      if (oc == SelectionOutcome::Best) value = kOutcomeBest;
      rows.push_back({c.id, c.ds->name, method, "outcome", value, 0.0});
    }
    return rows;
  });
}

StudyResult run_learning_study(const ScenarioMatrix& matrix) {
  check_common(matrix);
  if (matrix.epochs < 1)
    throw std::invalid_argument("learning study: epochs must be >= 1");
  const std::vector<std::string> methods =
      matrix.methods.empty() ? std::vector<std::string>{"LS-LIN", "IX"}
                             : matrix.methods;
  for (const std::string& s : methods)
    if (s != "LS-LIN" && s != "IX")
      throw std::invalid_argument("unknown learning method: " + s);
  const std::vector<double> grid = log_spaced_grid(matrix.lambda_grid_size);

  const std::vector<Cell> cells = learning_cells(matrix);
  return run_matrix(matrix, cells, [&](const Cell& c) {
    const MulticlassDataset pool =
        load_pool(*c.ds, derived_seed(matrix, c.index, c.user_seed, 1));
    const auto parts = split(pool, matrix.learn_splits,
                             derived_seed(matrix, c.index, c.user_seed, 2));
    const int k = pool.class_count;
    const int p = pool.feature_dim;

    const std::vector<double> theta =
        fit_supervised_softmax(parts[0], 1e-4, 0.1, 200);
    const auto behavior = linear_softmax_policy(theta, k, p, c.alpha);
    const LoggedDataset feedback = bandit_feedback(
        parts[1], *behavior, c.eps,
        derived_seed(matrix, c.index, c.user_seed, 3));
    const PriorFit prior = fit_lgp_prior(theta, c.alpha, parts[0]);
    const Environment env_test = make_environment(parts[2], c.eps, behavior);
    const double r0 = true_risk(*behavior, env_test);

    std::vector<MetricRow> rows;
    for (const std::string& method : methods) {
      LearnConfig cfg;
      cfg.prior = prior.prior;
      cfg.delta = matrix.delta;
      cfg.lambda_grid = grid;
      cfg.learning_rate = matrix.learning_rate;
      cfg.epochs = matrix.epochs;
      cfg.mc_samples = matrix.mc_samples;
      cfg.seed = derived_seed(matrix, c.index, c.user_seed, 5);
      cfg.objective =
          method == "LS-LIN" ? LearnObjective::LsLin : LearnObjective::Ix;
      const LearnResult res = learn(feedback, cfg);
      const LgpPolicy learned(res.posterior, PropensityMode::Quadrature);
      const double r = true_risk(learned, env_test);
      rows.push_back({c.id, c.ds->name, method, "rI_U",
                      relative_improvement(res.guaranteed_risk, r0), 0.0});
      rows.push_back({c.id, c.ds->name, method, "rI_R",
                      relative_improvement(r, r0), 0.0});
    }
    return rows;
  });
}

namespace {

DatasetSpec synth_spec(const std::string& name, std::size_t rows,
                       int class_count, int feature_dim, double separation) {
  DatasetSpec ds;
  ds.name = name;
  ds.rows = rows;
  ds.class_count = class_count;
  ds.feature_dim = feature_dim;
  ds.separation = separation;
  return ds;
}

}  // namespace

ScenarioMatrix tightness_desk_matrix() {
  ScenarioMatrix m;
  m.name = "tightness-desk";
  m.datasets = {
      synth_spec("synth-k4-p8", 2048, 4, 8, 2.0),
      synth_spec("synth-k10-p32", 2048, 10, 32, 1.5),
  };
  m.sample_sizes = {256, 512, 1024, 2048, 4096, 8192};
  m.epsilons = {0.1};
  m.tau0s = {0.25};
  m.taus = {0.1};
  m.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  m.seed = 0x7469676874ull;
  return m;
}

ScenarioMatrix ops_desk_matrix() {
  ScenarioMatrix m;
  m.name = "ops-desk";
  // 400 rows leave an 80-row training split: the learned candidates are
  // frequently worse than the behavior policy in truth while their raw
  // importance-weighted scores stay competitive, which is the regime that
  // separates point-estimate selection from the pessimistic methods.
  m.datasets = {
      synth_spec("synth-easy-k4", 2400, 4, 8, 2.0),
      synth_spec("synth-mid-k10", 2400, 10, 16, 1.5),
      synth_spec("synth-hard-k10", 1200, 10, 32, 1.0),
      synth_spec("synth-noisy-small", 400, 10, 16, 0.8),
      synth_spec("synth-k4-wide", 1600, 4, 32, 1.2),
  };
  m.epsilons = {0.2};
  m.tau0s = {0.25};
  m.taus = {0.1};
  m.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  m.seed = 0x6f70732d6465736bull;
  return m;
}

ScenarioMatrix learning_desk_matrix(const std::string& fixtures_dir) {
  ScenarioMatrix m;
  m.name = "learning-desk";
  DatasetSpec synth;
  synth.name = "synth-sep-k4";
  synth.rows = 1600;
  synth.class_count = 4;
  synth.feature_dim = 8;
  synth.separation = 2.5;
  DatasetSpec tabular;
  tabular.name = "tabular-small";
  tabular.csv_path = fixtures_dir + "/tabular_small.csv";
  tabular.label_column = "label";
  m.datasets = {synth, tabular};
  m.epsilons = {0.0};
  m.alphas = {1.0};
  m.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  m.seed = 0x6c6561726e2d64ull;
  m.epochs = 60;
  m.learning_rate = 0.05;
  return m;
}

void write_metric_csv(const std::vector<MetricRow>& rows,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "scenario_id,dataset,method,metric,value,stderr\n";
  for (const MetricRow& r : rows)
    out << r.scenario_id << ',' << r.dataset << ',' << r.method << ','
        << r.metric << ',' << fmt17(r.value) << ',' << fmt17(r.std_error)
        << '\n';
  if (!out) throw std::runtime_error("write failure: " + path);
}

std::string summary_json(const StudyResult& result) {
  nlohmann::json j;
  j["failures"] = result.failures;
  std::map<std::string, std::map<std::string, std::vector<double>>> agg;
  for (const MetricRow& r : result.rows)
    agg[r.method][r.metric].push_back(r.value);
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [method, metrics] : agg) {
    nlohmann::json entry = nlohmann::json::object();
    for (const auto& [metric, values] : metrics) {
      nlohmann::json stat;
      stat["count"] = values.size();
      stat["mean"] = pairwise_mean(values);
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t mid = sorted.size() / 2;
      stat["median"] = sorted.size() % 2 == 1
                           ? sorted[mid]
                           : 0.5 * (sorted[mid - 1] + sorted[mid]);
      if (metric == "outcome") {
        std::size_t worse = 0, better = 0, best = 0;
        for (double v : values) {
          if (v == kOutcomeWorse) ++worse;
          if (v == kOutcomeBetter) ++better;
          if (v == kOutcomeBest) ++best;
        }
        stat["worse"] = worse;
        stat["better"] = better;
        stat["best"] = best;
      }
      entry[metric] = std::move(stat);
    }
    methods[method] = std::move(entry);
  }
  j["methods"] = std::move(methods);
  return j.dump(2) + "\n";
}

}  // namespace offpolicy
