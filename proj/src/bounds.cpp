#include "offpolicy/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "offpolicy/math.hpp"

namespace offpolicy {

namespace {

void check_cfg(const BoundConfig& cfg) {
  if (!(cfg.lambda > 0.0))
    throw std::invalid_argument("bound config: lambda must be > 0");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0))
    throw std::invalid_argument("bound config: delta must be in (0, 1]");
}

double confidence_term(double lambda, double delta, std::size_t n) {
  return std::log(1.0 / delta) / (lambda * static_cast<double>(n));
}

// lambda^{l-1}/l * (1/n) sum h_i^l for one l, with a log-space fallback so
// huge |h| values degrade to +-inf instead of NaN. Sign is fixed by parity
// because every h_i <= 0.
double moment_term(const std::vector<double>& h, double lambda, int ell,
                   bool log_space) {
  const double n = static_cast<double>(h.size());
  if (!log_space) {
    std::vector<double> powers(h.size());
    for (std::size_t i = 0; i < h.size(); ++i)
      powers[i] = std::pow(h[i], ell);
    const double value =
        std::pow(lambda, ell - 1) / ell * pairwise_mean(powers);
    if (std::isfinite(value)) return value;
  }
  // log-sum-exp of l*ln|h_i| over nonzero samples.
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  logs.reserve(h.size());
  for (double hi : h) {
    if (hi == 0.0) continue;
    const double l = ell * std::log(std::abs(hi));
    logs.push_back(l);
    max_log = std::max(max_log, l);
  }
  if (logs.empty()) return 0.0;
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - max_log);
  const double log_mag = (ell - 1) * std::log(lambda) - std::log(ell) +
                         max_log + std::log(acc) - std::log(n);
  const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
  if (log_mag > std::log(std::numeric_limits<double>::max()))
    return sign * std::numeric_limits<double>::infinity();
  return sign * std::exp(log_mag);
}

// Kahan sum in ascending l; opposing infinities resolve by the sign of the
// largest-order infinite term (the series is dominated by its last term in
// the overflow regime).
double sum_moment_terms(const std::vector<double>& terms) {
  KahanSum acc;
  bool saw_inf = false;
  double inf_sign = 0.0;
  for (double t : terms) {
    if (std::isinf(t)) {
      saw_inf = true;
      inf_sign = t > 0 ? 1.0 : -1.0;
      continue;
    }
    acc.add(t);
  }
  if (saw_inf) return inf_sign * std::numeric_limits<double>::infinity();
  return acc.value();
}

BoundReport infinite_moment_bound(std::span<const SampleTriple> samples,
                                  const RegularizerH& h,
                                  const BoundConfig& cfg) {
  const EstimateBreakdown base = regularized_estimate(samples, h, false);
  std::vector<double> smoothed(base.per_sample.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i)
    smoothed[i] = -std::log1p(-cfg.lambda * base.per_sample[i]) / cfg.lambda;
  BoundReport report;
  report.name = h.kind == RegularizerKind::Ips
                    ? "LS"
                    : "U_inf[" + h.name() + "]";
  report.lambda = cfg.lambda;
  report.delta = cfg.delta;
  report.moment_order = kInfiniteMoments;
  report.estimate = pairwise_mean(smoothed);
  report.confidence_term =
      confidence_term(cfg.lambda, cfg.delta, samples.size());
  report.upper =
      psi_lambda(cfg.lambda, report.estimate + report.confidence_term);
  return report;
}

}  // namespace

BoundReport moments_bound(std::span<const SampleTriple> samples,
                          const RegularizerH& h, const BoundConfig& cfg) {
  check_cfg(cfg);
  if (samples.empty()) throw std::invalid_argument("moments_bound: empty data");
  if (cfg.moment_order == kInfiniteMoments)
    return infinite_moment_bound(samples, h, cfg);
  if (cfg.moment_order < 1)
    throw std::invalid_argument("moments_bound: L must be >= 1 or infinite");

  const EstimateBreakdown base = regularized_estimate(samples, h, false);
  double max_abs = 0.0;
  for (double hi : base.per_sample) max_abs = std::max(max_abs, std::abs(hi));
  const bool log_space =
      cfg.lambda * max_abs > 1.0 && cfg.moment_order > 8;

  BoundReport report;
  report.name = "U_" + std::to_string(cfg.moment_order) + "[" + h.name() + "]";
  report.lambda = cfg.lambda;
  report.delta = cfg.delta;
  report.moment_order = cfg.moment_order;
  report.estimate = base.value;
  for (int ell = 2; ell <= 2 * cfg.moment_order; ++ell)
    report.moment_terms.push_back(
        moment_term(base.per_sample, cfg.lambda, ell, log_space));
  report.confidence_term =
      confidence_term(cfg.lambda, cfg.delta, samples.size());
  const double arg = report.estimate + sum_moment_terms(report.moment_terms) +
                     report.confidence_term;
  report.upper = psi_lambda(cfg.lambda, arg);
  return report;
}

BoundReport moments_bound(const LoggedDataset& data, const Policy& policy,
                          const RegularizerH& h, const BoundConfig& cfg) {
  const auto triples = extract_triples(data, policy);
  return moments_bound(std::span<const SampleTriple>(triples), h, cfg);
}

BoundReport second_moment_bound(std::span<const SampleTriple> samples,
                                const BoundConfig& cfg) {
  BoundConfig one = cfg;
  one.moment_order = 1;
  BoundReport report =
      moments_bound(samples, RegularizerH::global_clipping(cfg.lambda), one);
  report.name = "cIPS-L=1";
  return report;
}

BoundReport second_moment_bound(const LoggedDataset& data,
                                const Policy& policy, const BoundConfig& cfg) {
  const auto triples = extract_triples(data, policy);
  return second_moment_bound(std::span<const SampleTriple>(triples), cfg);
}

BoundReport ls_bound(std::span<const SampleTriple> samples,
                     const BoundConfig& cfg) {
  check_cfg(cfg);
  if (samples.empty()) throw std::invalid_argument("ls_bound: empty data");
  return infinite_moment_bound(samples, RegularizerH::ips(), cfg);
}

BoundReport ls_bound(const LoggedDataset& data, const Policy& policy,
                     const BoundConfig& cfg) {
  const auto triples = extract_triples(data, policy);
  return ls_bound(std::span<const SampleTriple>(triples), cfg);
}

BoundReport ix_bound(std::span<const SampleTriple> samples,
                     const BoundConfig& cfg) {
  check_cfg(cfg);
  if (samples.empty()) throw std::invalid_argument("ix_bound: empty data");
  std::vector<double> per_sample(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SampleTriple& s = samples[i];
    per_sample[i] =
        s.target_prob * s.cost / (s.propensity + cfg.lambda / 2.0);
  }
  BoundReport report;
  report.name = "IX";
  report.lambda = cfg.lambda;
  report.delta = cfg.delta;
  report.moment_order = 0;
  report.estimate = pairwise_mean(per_sample);
  report.confidence_term =
      confidence_term(cfg.lambda, cfg.delta, samples.size());
  report.upper = report.estimate + report.confidence_term;
  return report;
}

BoundReport ix_bound(const LoggedDataset& data, const Policy& policy,
                     const BoundConfig& cfg) {
  const auto triples = extract_triples(data, policy);
  return ix_bound(std::span<const SampleTriple>(triples), cfg);
}

BoundReport empirical_bernstein_bound(std::span<const SampleTriple> samples,
                                      double clip_m, double delta) {
  if (!(clip_m > 0.0))
    throw std::invalid_argument("empirical_bernstein_bound: M must be > 0");
  if (!(delta > 0.0 && delta <= 2.0))
    throw std::invalid_argument(
        "empirical_bernstein_bound: delta must be in (0, 2]");
  if (samples.size() < 2)
    throw std::invalid_argument("empirical_bernstein_bound: needs n >= 2");
  const EstimateBreakdown clipped =
      regularized_estimate(samples, RegularizerH::clipping(clip_m), false);
  const double n = static_cast<double>(samples.size());
  const double log_term = std::log(2.0 / delta);
  const double variance = sample_variance(clipped.per_sample);
  BoundReport report;
  report.name = "cIPS-EB";
  report.lambda = 0.0;
  report.delta = delta;
  report.moment_order = 0;
  report.clip_m = clip_m;
  report.estimate = clipped.value;
  report.confidence_term = std::sqrt(2.0 * variance * log_term / n) +
                           7.0 * clip_m * log_term / (3.0 * (n - 1.0));
  report.upper = report.estimate + report.confidence_term;
  return report;
}

BoundReport empirical_bernstein_bound(const LoggedDataset& data,
                                      const Policy& policy, double clip_m,
                                      double delta) {
  const auto triples = extract_triples(data, policy);
  return empirical_bernstein_bound(std::span<const SampleTriple>(triples),
                                   clip_m, delta);
}

RiskInterval subgaussian_interval(std::span<const SampleTriple> samples,
                                  double lambda, double delta,
                                  double s_lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("subgaussian_interval: lambda must be > 0");
  if (!(delta > 0.0 && delta <= 2.0))
    throw std::invalid_argument(
        "subgaussian_interval: delta must be in (0, 2]");
  if (!(s_lambda >= 0.0))
    throw std::invalid_argument("subgaussian_interval: s_lambda must be >= 0");
  const double ls = ls_estimate(samples, lambda).value;
  const double slack =
      std::log(2.0 / delta) / (lambda * static_cast<double>(samples.size()));
  return {ls - lambda * s_lambda - slack, ls + slack};
}

RiskInterval subgaussian_interval(const LoggedDataset& data,
                                  const Policy& policy, double lambda,
                                  double delta, double s_lambda) {
  const auto triples = extract_triples(data, policy);
  return subgaussian_interval(std::span<const SampleTriple>(triples), lambda,
                              delta, s_lambda);
}

bool check_l_monotonicity(std::span<const double> h_values, double lambda,
                          int L) {
  if (L < 1)
    throw std::invalid_argument("check_l_monotonicity: L must be >= 1");
  double threshold = std::numeric_limits<double>::infinity();
  for (double hi : h_values) {
    if (hi == 0.0) continue;
    threshold = std::min(
        threshold, (2.0 * L + 2.0) / ((2.0 * L + 1.0) * std::abs(hi)));
  }
  return lambda <= threshold;
}

bool check_l_monotonicity(const LoggedDataset& data, const Policy& policy,
                          const RegularizerH& h, double lambda, int L) {
  const EstimateBreakdown base = regularized_estimate(data, policy, h, false);
  return check_l_monotonicity(std::span<const double>(base.per_sample),
                              lambda, L);
}

}  // namespace offpolicy
