#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "offpolicy/estimators.hpp"

namespace offpolicy {

// Sentinel moment order for the infinite-moment (LS) family member.
inline constexpr int kInfiniteMoments = -1;

struct BoundConfig {
  double lambda = 0.0;  // > 0
  double delta = 0.05;  // (0, 1]
  int moment_order = 1; // L >= 1, or kInfiniteMoments
};

struct BoundReport {
  std::string name;
  double lambda = 0.0;
  double delta = 0.05;
  // kInfiniteMoments for the LS family, 0 for bounds without a moment
  // expansion (IX, empirical Bernstein).
  int moment_order = 0;
  double estimate = 0.0;
  std::vector<double> moment_terms;  // lambda^{l-1}/l * Mhat_l, l = 2..2L
  double confidence_term = 0.0;
  double upper = 0.0;
  double clip_m = std::numeric_limits<double>::quiet_NaN();  // EB only
};

// U_L: psi_lambda(Hhat + sum_{l=2}^{2L} lambda^{l-1}/l Mhat_l +
// ln(1/delta)/(lambda n)). cfg.moment_order = kInfiniteMoments applies the
// infinite-moment form to the supplied regularizer's per-sample values
// (which for h = IPS is exactly ls_bound).
BoundReport moments_bound(const LoggedDataset& data, const Policy& policy,
                          const RegularizerH& h, const BoundConfig& cfg);
BoundReport moments_bound(std::span<const SampleTriple> samples,
                          const RegularizerH& h, const BoundConfig& cfg);

// "cIPS-L=1": moments_bound with L = 1 at the second-moment-optimal
// regularizer -min(p|c|/q, 1/lambda).
BoundReport second_moment_bound(const LoggedDataset& data,
                                const Policy& policy, const BoundConfig& cfg);
BoundReport second_moment_bound(std::span<const SampleTriple> samples,
                                const BoundConfig& cfg);

// "LS": psi_lambda(ls_estimate(lambda) + ln(1/delta)/(lambda n)).
BoundReport ls_bound(const LoggedDataset& data, const Policy& policy,
                     const BoundConfig& cfg);
BoundReport ls_bound(std::span<const SampleTriple> samples,
                     const BoundConfig& cfg);

// "IX": (1/n) sum p_i c_i/(q_i + lambda/2) + ln(1/delta)/(lambda n).
// No psi contraction.
BoundReport ix_bound(const LoggedDataset& data, const Policy& policy,
                     const BoundConfig& cfg);
BoundReport ix_bound(std::span<const SampleTriple> samples,
                     const BoundConfig& cfg);

// "cIPS-EB": clipped estimate + sqrt(2 Vhat ln(2/delta)/n) +
// 7 M ln(2/delta)/(3(n-1)), Vhat with the unbiased n-1 denominator.
BoundReport empirical_bernstein_bound(const LoggedDataset& data,
                                      const Policy& policy, double clip_m,
                                      double delta);
BoundReport empirical_bernstein_bound(std::span<const SampleTriple> samples,
                                      double clip_m, double delta);

struct RiskInterval {
  double lower = 0.0;
  double upper = 0.0;
};

// Two-sided interval around the LS estimate:
//   R <= LS + ln(2/delta)/(lambda n)
//   R >= LS - lambda s_lambda - ln(2/delta)/(lambda n)
// s_lambda comes from the enumeration oracle or an empirical plug-in.
RiskInterval subgaussian_interval(const LoggedDataset& data,
                                  const Policy& policy, double lambda,
                                  double delta, double s_lambda);
RiskInterval subgaussian_interval(std::span<const SampleTriple> samples,
                                  double lambda, double delta,
                                  double s_lambda);

// lambda <= min_i (2L+2)/((2L+1)|h_i|); the empty constraint set (all
// h_i = 0) counts as +inf. When true, U_{L+1} <= U_L.
bool check_l_monotonicity(std::span<const double> h_values, double lambda,
                          int L);
bool check_l_monotonicity(const LoggedDataset& data, const Policy& policy,
                          const RegularizerH& h, double lambda, int L);

}  // namespace offpolicy
