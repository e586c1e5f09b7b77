#pragma once

#include <span>
#include <string>
#include <vector>

#include "offpolicy/core.hpp"

namespace offpolicy {

// One logged sample reduced to what the estimators consume:
// p = pi(a|x), q = pi_0(a|x), c = cost.
struct SampleTriple {
  double target_prob;
  double propensity;
  double cost;
};

std::vector<SampleTriple> extract_triples(const LoggedDataset& data,
                                          const Policy& policy);

enum class RegularizerKind {
  Ips,
  Clipping,             // min(p/q, M) c
  ExpSmoothing,         // p c / q^alpha
  ImplicitExploration,  // p c / (q + gamma)
  GlobalClipping,       // -min(p|c|/q, 1/lambda)
  LogSmoothing,         // -(1/lambda) log(1 - lambda p c / q)
};

// A member of the C1 catalog: p c / q <= apply(p, q, c) <= 0 for every
// p in [0,1], q in (0,1], c in [-1,0]. The kind enumeration is closed.
struct RegularizerH {
  RegularizerKind kind = RegularizerKind::Ips;
  double param = 0.0;

  static RegularizerH ips() { return {RegularizerKind::Ips, 0.0}; }
  static RegularizerH clipping(double m);
  static RegularizerH exp_smoothing(double alpha);
  static RegularizerH implicit_exploration(double gamma);
  static RegularizerH global_clipping(double lambda);
  static RegularizerH log_smoothing(double lambda);

  double apply(double p, double q, double c) const;
  std::string name() const;
};

// Clipped-and-cost-aware regularizer -min(p|c|/q, 1/lambda); the minimizer
// of the second-moment (L=1) bound.
RegularizerH global_clipping_h(double lambda);

struct EstimateBreakdown {
  double value = 0.0;
  std::vector<double> per_sample;
  std::size_t n = 0;
};

#ifdef NDEBUG
inline constexpr bool kValidateC1Default = false;
#else
inline constexpr bool kValidateC1Default = true;
#endif

// (1/n) sum_i h(p_i, q_i, c_i). C1 is re-checked per sample only in
// validation mode; estimators sit in hot loops of the coverage studies.
EstimateBreakdown regularized_estimate(const LoggedDataset& data,
                                       const Policy& policy,
                                       const RegularizerH& h,
                                       bool validate = kValidateC1Default);
EstimateBreakdown regularized_estimate(std::span<const SampleTriple> samples,
                                       const RegularizerH& h,
                                       bool validate = kValidateC1Default);

// Self-normalized IPS: (sum w_i c_i) / (sum w_i), in [-1, 0].
double sn_estimate(const LoggedDataset& data, const Policy& policy);
double sn_estimate(std::span<const SampleTriple> samples);

// (1/n) sum h_i^ell, ell >= 2.
double empirical_moment(const EstimateBreakdown& breakdown, int ell);

// Logarithmic smoothing: per-sample -(1/lambda) log(1 - lambda w_i c_i);
// lambda = 0 is exactly IPS.
EstimateBreakdown ls_estimate(const LoggedDataset& data, const Policy& policy,
                              double lambda);
EstimateBreakdown ls_estimate(std::span<const SampleTriple> samples,
                              double lambda);

// Linearized-in-pi variant: -(1/n) sum (p_i/lambda) log(1 - lambda c_i/q_i).
double ls_lin_estimate(const LoggedDataset& data, const Policy& policy,
                       double lambda);
double ls_lin_estimate(std::span<const SampleTriple> samples, double lambda);

// Exact E[(wc)^2 / (1 - lambda w c)] under the logging distribution of an
// enumerable environment. Test/report oracle, not an estimator.
double s_lambda_oracle(const Policy& policy, const Environment& env,
                       double lambda);

// Exact E[pi(a|x)|c| / (pi_0^2 + lambda pi_0)], the analogous discrepancy
// of the implicit-exploration analysis.
double c_lambda_oracle(const Policy& policy, const Environment& env,
                       double lambda);

// Exact E[pi(a|x) c^2 / (pi_0^2 - lambda pi_0 c)], the linearized variant's
// discrepancy used by the learning suboptimality statement.
double s_lin_lambda_oracle(const Policy& policy, const Environment& env,
                           double lambda);

}  // namespace offpolicy
