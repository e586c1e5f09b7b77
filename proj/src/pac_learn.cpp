#include "offpolicy/pac_learn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "offpolicy/rng.hpp"

namespace offpolicy {

double GaussianPosterior::sigma() const { return std::exp(rho); }

GaussianPosterior GaussianPosterior::centered(int action_count,
                                              int feature_dim, double sigma) {
  if (action_count < 1 || feature_dim < 1)
    throw std::invalid_argument("GaussianPosterior: dimensions must be >= 1");
  if (!(sigma > 0.0))
    throw std::invalid_argument("GaussianPosterior: sigma must be > 0");
  GaussianPosterior g;
  g.action_count = action_count;
  g.feature_dim = feature_dim;
  g.mu.assign(static_cast<std::size_t>(action_count) * feature_dim, 0.0);
  g.rho = std::log(sigma);
  return g;
}

namespace {

void check_posterior(const GaussianPosterior& q) {
  if (q.action_count < 1 || q.feature_dim < 1 ||
      q.mu.size() !=
          static_cast<std::size_t>(q.action_count) * q.feature_dim)
    throw std::invalid_argument("GaussianPosterior: inconsistent dimensions");
}

// Scores u_a = x^T mu_a and the scale 1/(sigma ||x||); shared by every
// propensity path.
struct ScoreCache {
  std::vector<double> u;
  double inv_scale = 0.0;
};

ScoreCache scores_for(const GaussianPosterior& q,
                      const std::vector<double>& x) {
  if (x.size() != static_cast<std::size_t>(q.feature_dim))
    throw std::invalid_argument("lgp: feature dimension mismatch");
  double norm_sq = 0.0;
  for (double v : x) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  if (!(norm > 0.0)) throw std::invalid_argument("lgp: zero-norm context");
  ScoreCache sc;
  sc.u.resize(q.action_count);
  for (int a = 0; a < q.action_count; ++a) {
    double dot = 0.0;
    const double* row = q.mu.data() + static_cast<std::size_t>(a) * x.size();
    for (std::size_t j = 0; j < x.size(); ++j) dot += row[j] * x[j];
    sc.u[a] = dot;
  }
  sc.inv_scale = 1.0 / (q.sigma() * norm);
  return sc;
}

double action_prob_at_draws(const ScoreCache& sc, int action,
                            std::span<const double> draws,
                            std::span<const double> weights) {
  const int k = static_cast<int>(sc.u.size());
  double acc = 0.0;
  for (std::size_t s = 0; s < draws.size(); ++s) {
    double prod = 1.0;
    for (int b = 0; b < k; ++b) {
      if (b == action) continue;
      prod *= normal_cdf(draws[s] + (sc.u[action] - sc.u[b]) * sc.inv_scale);
      if (prod == 0.0) break;
    }
    acc += (weights.empty() ? 1.0 / static_cast<double>(draws.size())
                            : weights[s]) *
           prod;
  }
  return acc;
}

}  // namespace

std::vector<double> lgp_probs_quadrature(const GaussianPosterior& q,
                                         const Context& x,
                                         const GaussHermite& nodes) {
  check_posterior(q);
  const ScoreCache sc = scores_for(q, x.features);
  std::vector<double> probs(q.action_count);
  for (int a = 0; a < q.action_count; ++a)
    probs[a] = action_prob_at_draws(sc, a, nodes.nodes, nodes.weights);
  return probs;
}

std::vector<double> lgp_probs_mc(const GaussianPosterior& q, const Context& x,
                                 std::span<const double> eps) {
  check_posterior(q);
  if (eps.empty()) throw std::invalid_argument("lgp: empty eps panel");
  const ScoreCache sc = scores_for(q, x.features);
  std::vector<double> probs(q.action_count);
  for (int a = 0; a < q.action_count; ++a)
    probs[a] = action_prob_at_draws(sc, a, eps, {});
  return probs;
}

double lgp_propensity_quadrature(const GaussianPosterior& q, const Context& x,
                                 int action, const GaussHermite& nodes) {
  check_posterior(q);
  if (action < 0 || action >= q.action_count)
    throw std::invalid_argument("lgp: action out of range");
  const ScoreCache sc = scores_for(q, x.features);
  return action_prob_at_draws(sc, action, nodes.nodes, nodes.weights);
}

double lgp_propensity_mc(const GaussianPosterior& q, const Context& x,
                         int action, std::span<const double> eps) {
  check_posterior(q);
  if (action < 0 || action >= q.action_count)
    throw std::invalid_argument("lgp: action out of range");
  if (eps.empty()) throw std::invalid_argument("lgp: empty eps panel");
  const ScoreCache sc = scores_for(q, x.features);
  return action_prob_at_draws(sc, action, eps, {});
}

LgpPolicy::LgpPolicy(GaussianPosterior posterior, PropensityMode mode,
                     int mc_samples, std::uint64_t seed, int quad_nodes)
    : q_(std::move(posterior)),
      mode_(mode),
      mc_samples_(mc_samples),
      seed_(seed) {
  check_posterior(q_);
  if (mode_ == PropensityMode::MonteCarlo) {
    if (mc_samples_ < 1)
      throw std::invalid_argument("LgpPolicy: mc_samples must be >= 1");
  } else {
    if (quad_nodes < 64)
      throw std::invalid_argument("LgpPolicy: need >= 64 quadrature nodes");
    quad_ = std::make_shared<const GaussHermite>(
        gauss_hermite_normal(quad_nodes));
  }
}

std::vector<double> LgpPolicy::context_panel(const Context& x) const {
  // Panel key is a pure function of (seed, feature bits): prob() gives the
  // same answer for the same context no matter the call order.
  std::uint64_t key = mix64(seed_ ^ 0x6c67702d70616e65ull);
  for (double f : x.features)
    key = hash_combine64(key, std::bit_cast<std::uint64_t>(f));
  CounterRng rng(key);
  std::vector<double> eps(static_cast<std::size_t>(mc_samples_));
  for (double& e : eps) e = rng.next_gaussian();
  return eps;
}

double LgpPolicy::prob(const Context& x, int action) const {
  if (action < 0 || action >= q_.action_count)
    throw std::invalid_argument("lgp: action out of range");
  if (mode_ == PropensityMode::Quadrature)
    return lgp_propensity_quadrature(q_, x, action, *quad_);
  const std::vector<double> eps = context_panel(x);
  return lgp_propensity_mc(q_, x, action, eps);
}

std::vector<double> LgpPolicy::full_probs(const Context& x) const {
  if (mode_ == PropensityMode::Quadrature)
    return lgp_probs_quadrature(q_, x, *quad_);
  const std::vector<double> eps = context_panel(x);
  return lgp_probs_mc(q_, x, eps);
}

int LgpPolicy::sample(const Context& x, CounterRng& rng) const {
  std::vector<double> probs = full_probs(x);
  // MC probabilities only sum to 1 within tolerance; renormalize for
  // sampling.
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0)) throw std::runtime_error("lgp: degenerate propensities");
  for (double& p : probs) p /= total;
  return rng.next_categorical(probs);
}

double kl_gaussian(const GaussianPosterior& q, const GaussianPosterior& p) {
  check_posterior(q);
  check_posterior(p);
  if (q.action_count != p.action_count || q.feature_dim != p.feature_dim)
    throw std::invalid_argument("kl_gaussian: dimension mismatch");
  const double d = static_cast<double>(q.dim());
  const double log_ratio = 2.0 * (q.rho - p.rho);  // ln(sigma_q^2/sigma_p^2)
  const double ratio = std::exp(log_ratio);
  double sq = 0.0;
  for (std::size_t i = 0; i < q.mu.size(); ++i) {
    const double diff = q.mu[i] - p.mu[i];
    sq += diff * diff;
  }
  const double sigma_p = p.sigma();
  return 0.5 * d * (ratio - 1.0 - log_ratio) +
         sq / (2.0 * sigma_p * sigma_p);
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(100);
  // log-spaced over [1e-4, 1]
  for (int i = 0; i < 100; ++i)
    grid[i] = std::pow(10.0, -4.0 + 4.0 * i / 99.0);
  grid.back() = 1.0;
  return grid;
}

std::vector<double> make_epsilon_panel(std::uint64_t seed, int epoch,
                                       std::size_t n, int mc_samples) {
  if (mc_samples < 1)
    throw std::invalid_argument("epsilon panel: mc_samples must be >= 1");
  std::vector<double> panel(n * static_cast<std::size_t>(mc_samples));
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng = CounterRng::from_parts(
        {seed, 0x6570732d70616e65ull, static_cast<std::uint64_t>(epoch), i});
    for (int s = 0; s < mc_samples; ++s)
      panel[i * mc_samples + s] = rng.next_gaussian();
  }
  return panel;
}

namespace {

// Per-record weight on the policy propensity. Both objectives are linear in
// pi(a_i|x_i): estimate = mean_i coeff_i * pi_i.
double record_coeff(const LoggedRecord& rec, double lambda,
                    LearnObjective objective) {
  if (objective == LearnObjective::LsLin)
    return std::log1p(-lambda * rec.cost / rec.propensity) / -lambda;
  return rec.cost / (rec.propensity + 0.5 * lambda);
}

std::vector<double> grid_or_default(const std::vector<double>& grid) {
  std::vector<double> g = grid.empty() ? default_lambda_grid() : grid;
  for (double l : g)
    if (!(l > 0.0))
      throw std::invalid_argument("lambda grid: entries must be > 0");
  return g;
}

double estimate_from_propensities(const LoggedDataset& data,
                                  std::span<const double> pis, double lambda,
                                  LearnObjective objective) {
  std::vector<double> terms(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    terms[i] = record_coeff(data.records()[i], lambda, objective) * pis[i];
  return pairwise_mean(terms);
}

double bound_from_estimate(double estimate, double kl, double lambda,
                           double delta, std::size_t n_lambda, std::size_t n,
                           LearnObjective objective) {
  const double width =
      (kl + std::log(static_cast<double>(n_lambda) / delta)) /
      (lambda * static_cast<double>(n));
  if (objective == LearnObjective::LsLin)
    return psi_lambda(lambda, estimate + width);
  return estimate + width;
}

// Data-term value and gradient at a frozen panel; KL is added by callers so
// minibatch steps can scale it with the full-sample n.
struct DataGrad {
  double value = 0.0;
  std::vector<double> grad_mu;
  double grad_rho = 0.0;
};

DataGrad data_term_grad(std::span<const LoggedRecord> records,
                        const GaussianPosterior& q, double lambda,
                        std::span<const double> eps_panel, int mc_samples,
                        LearnObjective objective) {
  const int k = q.action_count;
  const int p = q.feature_dim;
  const double inv_s = 1.0 / static_cast<double>(mc_samples);
  const double n = static_cast<double>(records.size());
  DataGrad out;
  out.grad_mu.assign(q.mu.size(), 0.0);

  std::vector<double> f(k);       // Phi factors for one draw
  std::vector<double> pre(k + 1);  // leave-one-out prefix products
  std::vector<double> suf(k + 1);
  std::vector<double> delta(k);    // (u_a - u_b) * inv_scale
  std::vector<double> g_delta(k);  // d pi / d delta_b
  std::vector<double> value_terms(records.size());

  for (std::size_t i = 0; i < records.size(); ++i) {
    const LoggedRecord& rec = records[i];
    if (rec.action < 0 || rec.action >= k)
      throw std::invalid_argument("pac objective: action out of range");
    const ScoreCache sc = scores_for(q, rec.context.features);
    const int a = rec.action;
    for (int b = 0; b < k; ++b)
      delta[b] = (sc.u[a] - sc.u[b]) * sc.inv_scale;
    std::fill(g_delta.begin(), g_delta.end(), 0.0);

    double pi = 0.0;
    const double* eps = eps_panel.data() + i * mc_samples;
    for (int s = 0; s < mc_samples; ++s) {
      // Leave-one-out products over competitors via prefix/suffix arrays
      // (handles exact zeros without divisions).
      const double z = eps[s];
      for (int b = 0; b < k; ++b)
        f[b] = (b == a) ? 1.0 : normal_cdf(z + delta[b]);
      pre[0] = 1.0;
      for (int b = 0; b < k; ++b) pre[b + 1] = pre[b] * f[b];
      suf[k] = 1.0;
      for (int b = k - 1; b >= 0; --b) suf[b] = suf[b + 1] * f[b];
      pi += inv_s * pre[k];
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const double loo = pre[b] * suf[b + 1];
        if (loo != 0.0)
          g_delta[b] += inv_s * normal_pdf(z + delta[b]) * loo;
      }
    }

    const double coeff = record_coeff(rec, lambda, objective);
    value_terms[i] = coeff * pi;

    const double scale = coeff / n;
    double g_sum = 0.0;
    double rho_sum = 0.0;
    for (int b = 0; b < k; ++b) {
      if (b == a) continue;
      g_sum += g_delta[b];
      rho_sum += g_delta[b] * -delta[b];  // d delta / d rho = -delta
    }
    const double* x = rec.context.features.data();
    double* mu_a = out.grad_mu.data() + static_cast<std::size_t>(a) * p;
    for (int j = 0; j < p; ++j)
      mu_a[j] += scale * g_sum * sc.inv_scale * x[j];
    for (int b = 0; b < k; ++b) {
      if (b == a || g_delta[b] == 0.0) continue;
      double* mu_b = out.grad_mu.data() + static_cast<std::size_t>(b) * p;
      const double w = scale * g_delta[b] * sc.inv_scale;
      for (int j = 0; j < p; ++j) mu_b[j] -= w * x[j];
    }
    out.grad_rho += scale * rho_sum;
  }
  out.value = pairwise_mean(value_terms);
  return out;
}

void add_kl_terms(DataGrad& g, const GaussianPosterior& q,
                  const GaussianPosterior& prior, double lambda,
                  std::size_t n) {
  const double kl = kl_gaussian(q, prior);
  const double denom = lambda * static_cast<double>(n);
  g.value += kl / denom;
  const double sigma_p = prior.sigma();
  const double inv_var_p = 1.0 / (sigma_p * sigma_p);
  for (std::size_t i = 0; i < q.mu.size(); ++i)
    g.grad_mu[i] += (q.mu[i] - prior.mu[i]) * inv_var_p / denom;
  const double sigma_q = q.sigma();
  g.grad_rho += static_cast<double>(q.dim()) *
                (sigma_q * sigma_q * inv_var_p - 1.0) / denom;
}

std::vector<double> policy_propensities(const LoggedDataset& data,
                                        const LgpPolicy& policy) {
  std::vector<double> pis(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    pis[i] =
        policy.prob(data.records()[i].context, data.records()[i].action);
  return pis;
}

std::vector<double> panel_propensities(const LoggedDataset& data,
                                       const GaussianPosterior& q,
                                       std::span<const double> panel,
                                       int mc_samples) {
  std::vector<double> pis(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const LoggedRecord& rec = data.records()[i];
    pis[i] = lgp_propensity_mc(
        q, rec.context, rec.action,
        panel.subspan(i * static_cast<std::size_t>(mc_samples),
                      static_cast<std::size_t>(mc_samples)));
  }
  return pis;
}

void check_learn_dims(const LoggedDataset& data, const GaussianPosterior& g) {
  if (g.action_count != data.action_count() ||
      g.feature_dim != data.feature_dim())
    throw std::invalid_argument(
        "learn: posterior dimensions do not match the dataset");
}

}  // namespace

double pac_objective(const LoggedDataset& data, const LgpPolicy& policy,
                     const LearnConfig& cfg, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("pac objective: lambda must be > 0");
  check_learn_dims(data, policy.posterior());
  const std::vector<double> pis = policy_propensities(data, policy);
  const double est = estimate_from_propensities(data, pis, lambda,
                                                LearnObjective::LsLin);
  const double kl = kl_gaussian(policy.posterior(), cfg.prior);
  return est + kl / (lambda * static_cast<double>(data.size()));
}

double pac_bound_value(const LoggedDataset& data, const LgpPolicy& policy,
                       const LearnConfig& cfg, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("pac bound: lambda must be > 0");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0))
    throw std::invalid_argument("pac bound: delta must lie in (0, 1]");
  check_learn_dims(data, policy.posterior());
  const std::vector<double> grid = grid_or_default(cfg.lambda_grid);
  const std::vector<double> pis = policy_propensities(data, policy);
  const double est = estimate_from_propensities(data, pis, lambda,
                                                LearnObjective::LsLin);
  const double kl = kl_gaussian(policy.posterior(), cfg.prior);
  return bound_from_estimate(est, kl, lambda, cfg.delta, grid.size(),
                             data.size(), LearnObjective::LsLin);
}

double ix_pac_bound_value(const LoggedDataset& data, const LgpPolicy& policy,
                          const LearnConfig& cfg, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("pac bound: lambda must be > 0");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0))
    throw std::invalid_argument("pac bound: delta must lie in (0, 1]");
  check_learn_dims(data, policy.posterior());
  const std::vector<double> grid = grid_or_default(cfg.lambda_grid);
  const std::vector<double> pis = policy_propensities(data, policy);
  const double est =
      estimate_from_propensities(data, pis, lambda, LearnObjective::Ix);
  const double kl = kl_gaussian(policy.posterior(), cfg.prior);
  return bound_from_estimate(est, kl, lambda, cfg.delta, grid.size(),
                             data.size(), LearnObjective::Ix);
}

ObjectiveGrad pac_objective_with_grad(const LoggedDataset& data,
                                      const GaussianPosterior& q,
                                      const GaussianPosterior& prior,
                                      double lambda,
                                      std::span<const double> eps_panel,
                                      int mc_samples,
                                      LearnObjective objective) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("pac objective: lambda must be > 0");
  check_learn_dims(data, q);
  if (eps_panel.size() != data.size() * static_cast<std::size_t>(mc_samples))
    throw std::invalid_argument("pac objective: eps panel size mismatch");
  DataGrad g = data_term_grad(data.records(), q, lambda, eps_panel,
                              mc_samples, objective);
  add_kl_terms(g, q, prior, lambda, data.size());
  return {g.value, std::move(g.grad_mu), g.grad_rho};
}

double pac_objective_mc(const LoggedDataset& data, const GaussianPosterior& q,
                        const GaussianPosterior& prior, double lambda,
                        std::span<const double> eps_panel, int mc_samples,
                        LearnObjective objective) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("pac objective: lambda must be > 0");
  check_learn_dims(data, q);
  if (eps_panel.size() != data.size() * static_cast<std::size_t>(mc_samples))
    throw std::invalid_argument("pac objective: eps panel size mismatch");
  const std::vector<double> pis =
      panel_propensities(data, q, eps_panel, mc_samples);
  const double est =
      estimate_from_propensities(data, pis, lambda, objective);
  return est +
         kl_gaussian(q, prior) / (lambda * static_cast<double>(data.size()));
}

LearnResult learn(const LoggedDataset& data, const LearnConfig& cfg) {
  check_posterior(cfg.prior);
  check_learn_dims(data, cfg.prior);
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw std::invalid_argument("learn: delta must lie in (0, 1)");
  if (cfg.epochs < 0)
    throw std::invalid_argument("learn: epochs must be >= 0");
  if (cfg.mc_samples < 1)
    throw std::invalid_argument("learn: mc_samples must be >= 1");
  const std::vector<double> grid = grid_or_default(cfg.lambda_grid);
  const std::size_t n = data.size();

  GaussianPosterior q = cfg.init.value_or(cfg.prior);
  check_learn_dims(data, q);

  // Per-lambda propensity coefficients depend only on the data; build once.
  std::vector<std::vector<double>> coeffs(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    coeffs[g].resize(n);
    for (std::size_t i = 0; i < n; ++i)
      coeffs[g][i] =
          record_coeff(data.records()[i], grid[g], cfg.objective);
  }
  const double log_union =
      std::log(static_cast<double>(grid.size()) / cfg.delta);

  AdamOptimizer opt(cfg.learning_rate);
  std::vector<double> params(q.mu.size() + 1);
  std::vector<double> grad(q.mu.size() + 1);
  std::vector<double> terms(n);
  LearnResult result;

  for (int e = 0; e < cfg.epochs; ++e) {
    const int epoch = cfg.start_epoch + e;
    const std::vector<double> panel =
        make_epsilon_panel(cfg.seed, epoch, n, cfg.mc_samples);
    const std::vector<double> pis =
        panel_propensities(data, q, panel, cfg.mc_samples);
    const double kl = kl_gaussian(q, cfg.prior);

    // Union-bound argmin over the lambda grid at the current posterior.
    std::size_t best = 0;
    double best_bound = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (std::size_t i = 0; i < n; ++i) terms[i] = coeffs[g][i] * pis[i];
      const double est = pairwise_mean(terms);
      const double width =
          (kl + log_union) / (grid[g] * static_cast<double>(n));
      const double bound = cfg.objective == LearnObjective::LsLin
                               ? psi_lambda(grid[g], est + width)
                               : est + width;
      if (bound < best_bound) {
        best_bound = bound;
        best = g;
      }
    }
    const double lambda = grid[best];

    DataGrad dg;
    if (cfg.minibatch > 0 && static_cast<std::size_t>(cfg.minibatch) < n) {
      // One uniformly drawn batch per epoch; KL keeps the full-sample n so
      // the step targets the same objective in expectation.
      CounterRng rng = CounterRng::from_parts(
          {cfg.seed, 0x6d696e6962617463ull,
           static_cast<std::uint64_t>(epoch)});
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      shuffle_inplace(order, rng);
      std::vector<LoggedRecord> batch;
      std::vector<double> batch_panel;
      batch.reserve(cfg.minibatch);
      batch_panel.reserve(static_cast<std::size_t>(cfg.minibatch) *
                          cfg.mc_samples);
      for (int b = 0; b < cfg.minibatch; ++b) {
        const std::size_t i = order[b];
        batch.push_back(data.records()[i]);
        for (int s = 0; s < cfg.mc_samples; ++s)
          batch_panel.push_back(panel[i * cfg.mc_samples + s]);
      }
      dg = data_term_grad(batch, q, lambda, batch_panel, cfg.mc_samples,
                          cfg.objective);
    } else {
      dg = data_term_grad(data.records(), q, lambda, panel, cfg.mc_samples,
                          cfg.objective);
    }
    add_kl_terms(dg, q, cfg.prior, lambda, n);

    for (double v : dg.grad_mu)
      if (!std::isfinite(v))
        throw std::runtime_error("learn: non-finite gradient at epoch " +
                                 std::to_string(epoch));
    if (!std::isfinite(dg.grad_rho) || !std::isfinite(dg.value))
      throw std::runtime_error("learn: non-finite gradient at epoch " +
                               std::to_string(epoch));

    result.trace.push_back({epoch, lambda, dg.value, best_bound});

    std::copy(q.mu.begin(), q.mu.end(), params.begin());
    params.back() = q.rho;
    std::copy(dg.grad_mu.begin(), dg.grad_mu.end(), grad.begin());
    grad.back() = dg.grad_rho;
    opt.step(params, grad);
    std::copy(params.begin(), params.end() - 1, q.mu.begin());
    q.rho = params.back();
  }

  // Final certificate: deterministic quadrature propensities, grid argmin.
  LgpPolicy final_policy(q, PropensityMode::Quadrature, cfg.mc_samples,
                         cfg.seed, cfg.quad_nodes);
  const std::vector<double> pis = policy_propensities(data, final_policy);
  const double kl = kl_gaussian(q, cfg.prior);
  double best_bound = std::numeric_limits<double>::infinity();
  double best_lambda = grid.front();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double est =
        estimate_from_propensities(data, pis, grid[g], cfg.objective);
    const double bound = bound_from_estimate(
        est, kl, grid[g], cfg.delta, grid.size(), n, cfg.objective);
    if (bound < best_bound) {
      best_bound = bound;
      best_lambda = grid[g];
    }
  }
  result.posterior = std::move(q);
  result.guaranteed_risk = best_bound;
  result.best_lambda = best_lambda;
  return result;
}

double relative_improvement(double x, double r_pi0) {
  if (r_pi0 <= -1.0)
    throw std::invalid_argument(
        "relative improvement: undefined for an ideal behavior policy");
  return (r_pi0 - x) / (r_pi0 + 1.0);
}

PriorFit fit_lgp_prior(const std::vector<double>& theta, double alpha,
                       const MulticlassDataset& rows, int quad_nodes) {
  if (rows.size() == 0)
    throw std::invalid_argument("fit_lgp_prior: empty row set");
  const int k = rows.class_count;
  const int p = rows.feature_dim;
  if (theta.size() != static_cast<std::size_t>(k) * p)
    throw std::invalid_argument("fit_lgp_prior: theta dimension mismatch");
  if (!(alpha > 0.0))
    throw std::invalid_argument("fit_lgp_prior: alpha must be > 0");

  const std::shared_ptr<const Policy> soft =
      linear_softmax_policy(theta, k, p, alpha);
  const std::vector<Context> contexts = rows.contexts();
  std::vector<std::vector<double>> targets;
  targets.reserve(contexts.size());
  for (const Context& x : contexts) targets.push_back(soft->full_probs(x));

  GaussianPosterior cand;
  cand.action_count = k;
  cand.feature_dim = p;
  cand.mu.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) cand.mu[i] = alpha * theta[i];

  const GaussHermite nodes = gauss_hermite_normal(quad_nodes);
  const auto mean_tv_at = [&](double sigma) {
    cand.rho = std::log(sigma);
    std::vector<double> tvs(contexts.size());
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      const std::vector<double> probs =
          lgp_probs_quadrature(cand, contexts[i], nodes);
      double tv = 0.0;
      for (int a = 0; a < k; ++a) tv += std::abs(probs[a] - targets[i][a]);
      tvs[i] = 0.5 * tv;
    }
    return pairwise_mean(tvs);
  };

  PriorFit fit;
  fit.mean_tv = std::numeric_limits<double>::infinity();
  // Coarse log-spaced sigma sweep; the induced argmax policy sharpens as
  // sigma shrinks, so some point of the sweep brackets the softmax
  // temperature. The LGP probabilities depend on mu/sigma only, so sweeping
  // sigma spans the whole sharpness family.
  for (int s = 0; s < 40; ++s) {
    const double sigma =
        std::pow(10.0, -1.7 + (1.0 - -1.7) * s / 39.0);  // [0.02, 10]
    const double mean_tv = mean_tv_at(sigma);
    if (mean_tv < fit.mean_tv) {
      fit.mean_tv = mean_tv;
      fit.sigma = sigma;
    }
  }
  // Zoom one sweep step around the coarse argmin (TV is smooth in sigma).
  const double step = std::pow(10.0, (1.0 - -1.7) / 39.0);
  for (int s = 0; s <= 24; ++s) {
    const double sigma = fit.sigma / step * std::pow(step * step, s / 24.0);
    const double mean_tv = mean_tv_at(sigma);
    if (mean_tv < fit.mean_tv) {
      fit.mean_tv = mean_tv;
      fit.sigma = sigma;
    }
  }
  cand.rho = std::log(fit.sigma);
  fit.prior = std::move(cand);
  return fit;
}

}  // namespace offpolicy
