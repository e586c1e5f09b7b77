#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "offpolicy/core.hpp"
#include "offpolicy/data_gen.hpp"
#include "offpolicy/math.hpp"

namespace offpolicy {

// Isotropic Gaussian over linear score parameters, one score vector per
// action, shared scale. sigma is carried as rho = log sigma so optimizer
// steps stay unconstrained.
struct GaussianPosterior {
  std::vector<double> mu;  // K x p row-major
  double rho = 0.0;
  int action_count = 0;
  int feature_dim = 0;

  double sigma() const;
  int dim() const { return action_count * feature_dim; }
  static GaussianPosterior centered(int action_count, int feature_dim,
                                    double sigma = 1.0);
};

enum class PropensityMode { Quadrature, MonteCarlo };

// Gauss-Hermite evaluation of the one-dimensional argmax integral
// E_eps prod_{a' != a} Phi(eps + x^T(mu_a - mu_{a'}) / (sigma ||x||)).
std::vector<double> lgp_probs_quadrature(const GaussianPosterior& q,
                                         const Context& x,
                                         const GaussHermite& nodes);

// Same integral by Monte Carlo over a shared eps panel (common random
// numbers across the actions of one context). Unbiased per action; the
// vector sums to 1 only within the documented 5/sqrt(S) tolerance.
std::vector<double> lgp_probs_mc(const GaussianPosterior& q, const Context& x,
                                 std::span<const double> eps);

double lgp_propensity_quadrature(const GaussianPosterior& q, const Context& x,
                                 int action, const GaussHermite& nodes);
double lgp_propensity_mc(const GaussianPosterior& q, const Context& x,
                         int action, std::span<const double> eps);

// The policy induced by argmax of Gaussian-perturbed linear scores.
// Quadrature mode is deterministic and exact within 1e-6; Monte-Carlo mode
// derives its eps panel from (seed, context bits) so prob() stays a pure
// function.
class LgpPolicy : public Policy {
 public:
  explicit LgpPolicy(GaussianPosterior posterior,
                     PropensityMode mode = PropensityMode::Quadrature,
                     int mc_samples = 32, std::uint64_t seed = 0,
                     int quad_nodes = 128);

  int action_count() const override { return q_.action_count; }
  double prob(const Context& x, int action) const override;
  std::vector<double> full_probs(const Context& x) const override;
  int sample(const Context& x, CounterRng& rng) const override;

  const GaussianPosterior& posterior() const { return q_; }
  PropensityMode mode() const { return mode_; }

 private:
  std::vector<double> context_panel(const Context& x) const;

  GaussianPosterior q_;
  PropensityMode mode_;
  int mc_samples_;
  std::uint64_t seed_;
  std::shared_ptr<const GaussHermite> quad_;
};

// KL between isotropic Gaussians with shared per-distribution scale:
// d/2 (r - 1 - ln r) + ||mu_q - mu_p||^2 / (2 sigma_p^2), r = sigma_q^2/sigma_p^2.
double kl_gaussian(const GaussianPosterior& q, const GaussianPosterior& p);

enum class LearnObjective { LsLin, Ix };

struct LearnConfig {
  GaussianPosterior prior;
  double delta = 0.05;
  std::vector<double> lambda_grid;  // empty = default_lambda_grid()
  double learning_rate = 1e-3;
  int epochs = 100;
  int minibatch = 0;  // 0 = full batch
  int mc_samples = 32;
  int quad_nodes = 128;
  std::uint64_t seed = 0;
  LearnObjective objective = LearnObjective::LsLin;
  // Resume support: optional warm start and absolute epoch offset.
  std::optional<GaussianPosterior> init;
  int start_epoch = 0;
};

// 100 log-spaced values in [1e-4, 1].
std::vector<double> default_lambda_grid();

// Frozen common-random-numbers panel, n x S row-major, refreshed per epoch.
std::vector<double> make_epsilon_panel(std::uint64_t seed, int epoch,
                                       std::size_t n, int mc_samples);

// Objective of the bound-minimization strategy at fixed lambda:
// ls_lin_estimate(lambda) + KL(Q||P)/(lambda n). Propensities follow the
// policy's mode.
double pac_objective(const LoggedDataset& data, const LgpPolicy& policy,
                     const LearnConfig& cfg, double lambda);

// psi_lambda(ls_lin + (KL + ln(n_Lambda/delta))/(lambda n)); n_Lambda is the
// size of cfg.lambda_grid (union bound over the searched grid).
double pac_bound_value(const LoggedDataset& data, const LgpPolicy& policy,
                       const LearnConfig& cfg, double lambda);

// Implicit-exploration PAC-Bayes baseline: linear-in-pi estimate with
// propensity shift lambda/2 plus the same KL-inflated confidence width, no
// psi contraction. Always >= pac_bound_value.
double ix_pac_bound_value(const LoggedDataset& data, const LgpPolicy& policy,
                          const LearnConfig& cfg, double lambda);

struct ObjectiveGrad {
  double value = 0.0;
  std::vector<double> grad_mu;
  double grad_rho = 0.0;
};

// Deterministic objective + analytic gradient at a frozen eps panel.
// The value equals the Monte-Carlo pac objective with the same panel, so
// central finite differences of it validate the gradient exactly.
ObjectiveGrad pac_objective_with_grad(const LoggedDataset& data,
                                      const GaussianPosterior& q,
                                      const GaussianPosterior& prior,
                                      double lambda,
                                      std::span<const double> eps_panel,
                                      int mc_samples,
                                      LearnObjective objective);
double pac_objective_mc(const LoggedDataset& data, const GaussianPosterior& q,
                        const GaussianPosterior& prior, double lambda,
                        std::span<const double> eps_panel, int mc_samples,
                        LearnObjective objective);

struct TraceRow {
  int epoch = 0;
  double lambda = 0.0;
  double objective = 0.0;
  double bound = 0.0;
};

struct LearnResult {
  GaussianPosterior posterior;
  double guaranteed_risk = 0.0;
  double best_lambda = 0.0;
  std::vector<TraceRow> trace;
};

// Bound-minimization learning: start at the prior (or cfg.init), each epoch
// pick the grid lambda minimizing the estimated bound, Adam-step the
// objective at that lambda; final guaranteed risk re-evaluated in quadrature
// mode at the grid argmin.
LearnResult learn(const LoggedDataset& data, const LearnConfig& cfg);

// (R(pi_0) - x) / (R(pi_0) + 1).
double relative_improvement(double x, double r_pi0);

struct PriorFit {
  GaussianPosterior prior;
  double mean_tv = 0.0;  // mean total variation to the tempered softmax
  double sigma = 1.0;
};

// Converts supervised softmax parameters into an LGP prior: mean alpha*theta,
// scale swept so the induced policy matches the tempered softmax within mean
// total variation 0.05 on the given rows (best effort; reports the achieved
// TV).
PriorFit fit_lgp_prior(const std::vector<double>& theta, double alpha,
                       const MulticlassDataset& rows, int quad_nodes = 64);

}  // namespace offpolicy
