#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "offpolicy/core.hpp"

namespace offpolicy {

// One dataset recipe: synthetic Gaussian blobs by default, or a CSV with a
// named label column.
struct DatasetSpec {
  std::string name;
  std::size_t rows = 2048;
  int class_count = 4;
  int feature_dim = 8;
  double separation = 2.0;
  std::string csv_path;  // when nonempty, overrides the synthetic recipe
  std::string label_column = "label";
  // Selection-study protocol tweak for datasets too small for a spare
  // training split: learn candidate policies on the selection feedback
  // itself.
  bool train_on_selection = false;
};

// Cross-product scenario grid. Every cell is independently runnable and
// derives its RNG streams from (seed, cell index) only.
struct ScenarioMatrix {
  std::string name = "custom";
  std::vector<DatasetSpec> datasets;
  std::vector<std::size_t> sample_sizes = {1024};
  std::vector<double> epsilons = {0.1};
  std::vector<double> tau0s = {0.25};  // behavior temperature
  std::vector<double> taus = {0.1};    // target temperature
  std::vector<std::uint64_t> seeds = {1};
  std::vector<std::string> methods;  // empty = study default set
  double delta = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  // Selection only: override every method's smoothing rate with 1/sqrt(n)
  // (the tightness study always uses 1/sqrt(n), including the clip level).
  bool sqrt_n_lambda = false;
  // Tightness only: also emit raw "bound_upper" rows next to the radii, for
  // checks on the bound values themselves (a radius is |U/R - 1|, which
  // cannot recover the sign side of U).
  bool emit_bound_values = false;

  // Learning-study knobs.
  std::vector<double> alphas = {1.0};  // behavior sharpness multiplier
  int epochs = 30;
  int mc_samples = 32;
  double learning_rate = 1e-3;
  int lambda_grid_size = 100;
  std::array<double, 3> learn_splits = {0.1, 0.7, 0.2};
  std::array<double, 3> select_splits = {0.2, 0.5, 0.3};
};

struct MetricRow {
  std::string scenario_id;
  std::string dataset;
  std::string method;
  std::string metric;  // relative_radius | outcome | rI_U | rI_R |
                       // coverage_rate | suboptimality
  double value = 0.0;
  double std_error = 0.0;
};

struct StudyResult {
  std::vector<MetricRow> rows;
  std::vector<std::string> failures;  // "scenario_id: message"
  bool ok() const { return failures.empty(); }
};

// |upper / true_risk - 1|; the tightness metric.
double relative_radius(double upper, double true_risk);

// Numeric encoding of selection outcomes in metric rows.
inline constexpr double kOutcomeWorse = 0.0;
inline constexpr double kOutcomeBetter = 1.0;
inline constexpr double kOutcomeBest = 2.0;

// Per cell: generate feedback, compute each configured bound at
// lambda = 1/sqrt(n) (empirical Bernstein clipped at 1/sqrt(n)), emit
// relative radii against the exact risk. Failed cells are flagged, never
// abort the matrix.
StudyResult run_tightness(const ScenarioMatrix& matrix);

// Fraction of replications whose bound covers the exact risk, with binomial
// standard errors. bound_set from {LS, IX, cIPS-L=1, cIPS-EB, subgaussian};
// the sub-Gaussian interval counts a replication covered when the risk lands
// inside the two-sided interval.
StudyResult run_coverage(const Environment& env, const Policy& policy,
                         const std::vector<std::string>& bound_set,
                         std::size_t n, int replications, double delta,
                         std::uint64_t seed, int threads = 1);

// Candidate construction per cell: behavior (faulty), ideal, and two
// softmax policies trained on logged feedback (IPS and SN objectives); each
// method selects on the held-out feedback and the outcome is classified
// against exact risks.
StudyResult run_selection_study(const ScenarioMatrix& matrix);

// Trains LS-LIN and IX bound-minimization per cell and reports the relative
// improvement of the guaranteed and the true risk over the behavior policy.
StudyResult run_learning_study(const ScenarioMatrix& matrix);

// Desk-scale presets sized to finish in minutes on a few cores.
ScenarioMatrix tightness_desk_matrix();
ScenarioMatrix ops_desk_matrix();
ScenarioMatrix learning_desk_matrix(const std::string& fixtures_dir);

// Fixed column order (scenario_id, dataset, method, metric, value, stderr);
// doubles printed with %.17g so reruns diff bitwise.
void write_metric_csv(const std::vector<MetricRow>& rows,
                      const std::string& path);

// Per-(method, metric) aggregates: count, mean, median; outcome rows also get
// Worse/Better/Best counts. Includes the failure list.
std::string summary_json(const StudyResult& result);

// Work-stealing cell pool: atomic next-index counter, `threads` workers.
// fn must not throw; cell order of any shared output is the caller's job
// (studies merge rows in cell-index order).
void run_cells(std::size_t count, int threads,
               const std::function<void(std::size_t)>& fn);

}  // namespace offpolicy
