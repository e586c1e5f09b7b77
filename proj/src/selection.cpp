#include "offpolicy/selection.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace offpolicy {

namespace {

void check_candidates(const CandidateSet& candidates) {
  if (candidates.empty())
    throw std::invalid_argument("selection: empty candidate set");
  std::set<std::string> names;
  for (const Candidate& c : candidates) {
    if (!c.policy)
      throw std::invalid_argument("selection: null candidate policy");
    if (!names.insert(c.name).second)
      throw std::invalid_argument("selection: duplicate candidate name '" +
                                  c.name + "'");
  }
}

std::size_t argmin_with_name_tiebreak(const CandidateSet& candidates,
                                      const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best] ||
        (scores[i] == scores[best] &&
         candidates[i].name < candidates[best].name))
      best = i;
  }
  return best;
}

double method_score(const LoggedDataset& data, const Policy& policy,
                    SelectionMethod method, double lambda, double delta) {
  switch (method) {
    case SelectionMethod::Ips:
      return regularized_estimate(data, policy, RegularizerH::ips(), false)
          .value;
    case SelectionMethod::Sn:
      return sn_estimate(data, policy);
    case SelectionMethod::CipsEb:
      return empirical_bernstein_bound(data, policy, 1.0 / lambda, delta)
          .upper;
    case SelectionMethod::Ix:
      return ix_bound(data, policy, {lambda, delta, 0}).upper;
    case SelectionMethod::CipsL1:
      return second_moment_bound(data, policy, {lambda, delta, 1}).upper;
    case SelectionMethod::Ls:
      return ls_estimate(data, policy, lambda).value;
  }
  throw std::logic_error("unknown selection method");
}

}  // namespace

const char* method_name(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::Ips:
      return "IPS";
    case SelectionMethod::Sn:
      return "SN";
    case SelectionMethod::CipsEb:
      return "cIPS-EB";
    case SelectionMethod::Ix:
      return "IX";
    case SelectionMethod::CipsL1:
      return "cIPS-L=1";
    case SelectionMethod::Ls:
      return "LS";
  }
  return "?";
}

const char* outcome_name(SelectionOutcome o) {
  switch (o) {
    case SelectionOutcome::Worse:
      return "Worse";
    case SelectionOutcome::Better:
      return "Better";
    case SelectionOutcome::Best:
      return "Best";
  }
  return "?";
}

double selection_lambda(std::size_t m, std::size_t n, double delta) {
  if (m == 0) throw std::invalid_argument("selection: empty candidate set");
  if (n == 0) throw std::invalid_argument("selection: empty data");
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("selection: delta must be in (0, 1]");
  return std::sqrt(2.0 * std::log(2.0 * static_cast<double>(m) / delta) /
                   static_cast<double>(n));
}

SelectionResult select(const LoggedDataset& data,
                       const CandidateSet& candidates, double delta) {
  return select_with_method(data, candidates, SelectionMethod::Ls, delta);
}

SelectionResult select_with_method(const LoggedDataset& data,
                                   const CandidateSet& candidates,
                                   SelectionMethod method, double delta,
                                   double lambda_override) {
  check_candidates(candidates);
  double lambda = lambda_override;
  if (lambda <= 0.0) {
    lambda = method == SelectionMethod::Ls
                 ? selection_lambda(candidates.size(), data.size(), delta)
                 : 1.0 / std::sqrt(static_cast<double>(data.size()));
  }
  SelectionResult result;
  result.method = method;
  result.lambda_used =
      (method == SelectionMethod::Ips || method == SelectionMethod::Sn)
          ? 0.0
          : lambda;
  result.delta = delta;
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] =
        method_score(data, *candidates[i].policy, method, lambda, delta);
    result.scores[candidates[i].name] = scores[i];
  }
  result.chosen_index = argmin_with_name_tiebreak(candidates, scores);
  result.chosen = candidates[result.chosen_index].name;
  return result;
}

SelectionOutcome classify_outcome(const SelectionResult& result,
                                  const CandidateSet& candidates,
                                  const Environment& env,
                                  const std::string& behavior_name) {
  check_candidates(candidates);
  constexpr double tol = 1e-12;
  double chosen_risk = 0.0;
  double behavior_risk = 0.0;
  double min_risk = std::numeric_limits<double>::infinity();
  bool found_chosen = false;
  bool found_behavior = false;
  for (const Candidate& c : candidates) {
    const double risk = true_risk(*c.policy, env);
    min_risk = std::min(min_risk, risk);
    if (c.name == result.chosen) {
      chosen_risk = risk;
      found_chosen = true;
    }
    if (c.name == behavior_name) {
      behavior_risk = risk;
      found_behavior = true;
    }
  }
  if (!found_behavior)
    throw std::invalid_argument("behavior policy '" + behavior_name +
                                "' not among candidates");
  if (!found_chosen)
    throw std::invalid_argument("chosen policy '" + result.chosen +
                                "' not among candidates");
  if (chosen_risk <= min_risk + tol) return SelectionOutcome::Best;
  if (chosen_risk > behavior_risk + tol) return SelectionOutcome::Worse;
  return SelectionOutcome::Better;
}

namespace {

const Policy& true_risk_argmin(const CandidateSet& candidates,
                               const Environment& env) {
  check_candidates(candidates);
  std::size_t best = 0;
  double best_risk = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double risk = true_risk(*candidates[i].policy, env);
    if (risk < best_risk) {
      best_risk = risk;
      best = i;
    }
  }
  return *candidates[best].policy;
}

}  // namespace

double suboptimality_certificate(const CandidateSet& candidates,
                                 const Environment& env,
                                 const LoggedDataset& data, double delta,
                                 double lambda_override) {
  const double lambda =
      lambda_override > 0.0
          ? lambda_override
          : selection_lambda(candidates.size(), data.size(), delta);
  const Policy& best = true_risk_argmin(candidates, env);
  const double s = s_lambda_oracle(best, env, lambda);
  const double n = static_cast<double>(data.size());
  const double m = static_cast<double>(candidates.size());
  return lambda * s + 2.0 * std::log(2.0 * m / delta) / (lambda * n);
}

double ix_suboptimality_certificate(const CandidateSet& candidates,
                                    const Environment& env,
                                    const LoggedDataset& data, double delta,
                                    double lambda_override) {
  const double lambda =
      lambda_override > 0.0
          ? lambda_override
          : selection_lambda(candidates.size(), data.size(), delta);
  const Policy& best = true_risk_argmin(candidates, env);
  const double c = c_lambda_oracle(best, env, lambda / 2.0);
  const double n = static_cast<double>(data.size());
  const double m = static_cast<double>(candidates.size());
  return lambda * c + 2.0 * std::log(2.0 * m / delta) / (lambda * n);
}

}  // namespace offpolicy
