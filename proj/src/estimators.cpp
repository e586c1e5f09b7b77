#include "offpolicy/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "offpolicy/math.hpp"

namespace offpolicy {

std::vector<SampleTriple> extract_triples(const LoggedDataset& data,
                                          const Policy& policy) {
  std::vector<SampleTriple> out;
  out.reserve(data.size());
  for (const LoggedRecord& r : data.records())
    out.push_back({policy.prob(r.context, r.action), r.propensity, r.cost});
  return out;
}

RegularizerH RegularizerH::clipping(double m) {
  if (!(m > 0.0)) throw std::invalid_argument("Clipping: M must be > 0");
  return {RegularizerKind::Clipping, m};
}

RegularizerH RegularizerH::exp_smoothing(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("ExpSmoothing: alpha must be in [0, 1]");
  return {RegularizerKind::ExpSmoothing, alpha};
}

RegularizerH RegularizerH::implicit_exploration(double gamma) {
  if (!(gamma >= 0.0))
    throw std::invalid_argument("ImplicitExploration: gamma must be >= 0");
  return {RegularizerKind::ImplicitExploration, gamma};
}

RegularizerH RegularizerH::global_clipping(double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("GlobalClipping: lambda must be > 0");
  return {RegularizerKind::GlobalClipping, lambda};
}

RegularizerH RegularizerH::log_smoothing(double lambda) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("LogSmoothing: lambda must be >= 0");
  return {RegularizerKind::LogSmoothing, lambda};
}

RegularizerH global_clipping_h(double lambda) {
  return RegularizerH::global_clipping(lambda);
}

double RegularizerH::apply(double p, double q, double c) const {
  switch (kind) {
    case RegularizerKind::Ips:
      return p * c / q;
    case RegularizerKind::Clipping:
      return std::min(p / q, param) * c;
    case RegularizerKind::ExpSmoothing:
      return p * c / std::pow(q, param);
    case RegularizerKind::ImplicitExploration:
      return p * c / (q + param);
    case RegularizerKind::GlobalClipping:
      return -std::min(p * std::abs(c) / q, 1.0 / param);
    case RegularizerKind::LogSmoothing: {
      if (param == 0.0) return p * c / q;
      // 1 - lambda w c >= 1 since w c <= 0.
      return -std::log1p(-param * p * c / q) / param;
    }
  }
  return 0.0;
}

std::string RegularizerH::name() const {
  switch (kind) {
    case RegularizerKind::Ips:
      return "IPS";
    case RegularizerKind::Clipping:
      return "clip(" + std::to_string(param) + ")";
    case RegularizerKind::ExpSmoothing:
      return "exp-smooth(" + std::to_string(param) + ")";
    case RegularizerKind::ImplicitExploration:
      return "ix(" + std::to_string(param) + ")";
    case RegularizerKind::GlobalClipping:
      return "global-clip(" + std::to_string(param) + ")";
    case RegularizerKind::LogSmoothing:
      return "log-smooth(" + std::to_string(param) + ")";
  }
  return "?";
}

EstimateBreakdown regularized_estimate(std::span<const SampleTriple> samples,
                                       const RegularizerH& h, bool validate) {
  if (samples.empty())
    throw std::invalid_argument("regularized_estimate: empty data");
  EstimateBreakdown out;
  out.n = samples.size();
  out.per_sample.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SampleTriple& s = samples[i];
    const double hi = h.apply(s.target_prob, s.propensity, s.cost);
    if (validate) {
      const double lo = s.target_prob * s.cost / s.propensity;
      if (!(hi >= lo - 1e-12 && hi <= 1e-12))
        throw std::logic_error("C1 violation at sample " + std::to_string(i));
    }
    out.per_sample[i] = hi;
  }
  out.value = pairwise_mean(out.per_sample);
  return out;
}

EstimateBreakdown regularized_estimate(const LoggedDataset& data,
                                       const Policy& policy,
                                       const RegularizerH& h, bool validate) {
  const auto triples = extract_triples(data, policy);
  return regularized_estimate(std::span<const SampleTriple>(triples), h,
                              validate);
}

double sn_estimate(std::span<const SampleTriple> samples) {
  std::vector<double> weights(samples.size());
  std::vector<double> weighted_costs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = samples[i].target_prob / samples[i].propensity;
    weights[i] = w;
    weighted_costs[i] = w * samples[i].cost;
  }
  const double denom = pairwise_sum(weights);
  if (!(denom > 0.0))
    throw std::invalid_argument("degenerate SN denominator");
  return pairwise_sum(weighted_costs) / denom;
}

double sn_estimate(const LoggedDataset& data, const Policy& policy) {
  const auto triples = extract_triples(data, policy);
  return sn_estimate(std::span<const SampleTriple>(triples));
}

double empirical_moment(const EstimateBreakdown& breakdown, int ell) {
  if (ell < 2) throw std::invalid_argument("empirical_moment: ell must be >= 2");
  std::vector<double> powers(breakdown.per_sample.size());
  for (std::size_t i = 0; i < powers.size(); ++i)
    powers[i] = std::pow(breakdown.per_sample[i], ell);
  return pairwise_mean(powers);
}

EstimateBreakdown ls_estimate(std::span<const SampleTriple> samples,
                              double lambda) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("ls_estimate: negative smoothing rate");
  return regularized_estimate(samples, RegularizerH::log_smoothing(lambda),
                              false);
}

EstimateBreakdown ls_estimate(const LoggedDataset& data, const Policy& policy,
                              double lambda) {
  const auto triples = extract_triples(data, policy);
  return ls_estimate(std::span<const SampleTriple>(triples), lambda);
}

double ls_lin_estimate(std::span<const SampleTriple> samples, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ls_lin_estimate: lambda must be > 0");
  std::vector<double> per_sample(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SampleTriple& s = samples[i];
    per_sample[i] =
        -s.target_prob / lambda * std::log1p(-lambda * s.cost / s.propensity);
  }
  return pairwise_mean(per_sample);
}

double ls_lin_estimate(const LoggedDataset& data, const Policy& policy,
                       double lambda) {
  const auto triples = extract_triples(data, policy);
  return ls_lin_estimate(std::span<const SampleTriple>(triples), lambda);
}

namespace {

// Shared enumeration over the logging distribution of an environment:
// x uniform, a ~ pi_0(.|x), cost -1 with the environment's reward
// probability (the c = 0 branch contributes nothing to any of the
// discrepancy functionals below).
template <typename Term>
double enumerate_logged(const Policy& policy, const Environment& env,
                        Term term) {
  const Policy& pi0 = env.behavior();
  std::vector<double> per_context(env.contexts().size());
  for (std::size_t i = 0; i < env.contexts().size(); ++i) {
    const Context& x = env.contexts()[i];
    const std::vector<double> q = pi0.full_probs(x);
    const std::vector<double> p = policy.full_probs(x);
    double acc = 0.0;
    for (int a = 0; a < env.action_count(); ++a) {
      if (q[a] <= 0.0) {
        if (p[a] > 0.0)
          throw std::invalid_argument(
              "enumeration oracle: behavior has a zero-propensity action "
              "covered by the target policy");
        continue;
      }
      const double p_cost = -env.expected_cost(x, a);  // P(c = -1)
      acc += q[a] * p_cost * term(p[a], q[a]);
    }
    per_context[i] = acc;
  }
  return pairwise_mean(per_context);
}

}  // namespace

double s_lambda_oracle(const Policy& policy, const Environment& env,
                       double lambda) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("s_lambda_oracle: lambda must be >= 0");
  // (wc)^2 / (1 - lambda w c) at c = -1: w^2 / (1 + lambda w).
  return enumerate_logged(policy, env, [lambda](double p, double q) {
    const double w = p / q;
    return w * w / (1.0 + lambda * w);
  });
}

double c_lambda_oracle(const Policy& policy, const Environment& env,
                       double lambda) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("c_lambda_oracle: lambda must be >= 0");
  // pi |c| / (q^2 + lambda q) at c = -1; the leading q of the logging
  // measure is already applied by the enumeration.
  return enumerate_logged(policy, env, [lambda](double p, double q) {
    return p / (q * (q + lambda));
  });
}

double s_lin_lambda_oracle(const Policy& policy, const Environment& env,
                           double lambda) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("s_lin_lambda_oracle: lambda must be >= 0");
  // pi c^2 / (q^2 - lambda q c) at c = -1: pi / (q^2 + lambda q).
  return enumerate_logged(policy, env, [lambda](double p, double q) {
    return p / (q * (q + lambda));
  });
}

}  // namespace offpolicy
