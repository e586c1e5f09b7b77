#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "offpolicy/bounds.hpp"
#include "offpolicy/core.hpp"

namespace offpolicy {

struct Candidate {
  std::string name;
  std::shared_ptr<const Policy> policy;
};

// Nonempty, unique names.
using CandidateSet = std::vector<Candidate>;

enum class SelectionMethod {
  Ips,     // point estimate
  Sn,      // self-normalized point estimate
  CipsEb,  // empirical Bernstein bound, clip at 1/lambda
  Ix,      // implicit-exploration bound
  CipsL1,  // second-moment bound
  Ls,      // logarithmically smoothed estimate
};

const char* method_name(SelectionMethod m);

struct SelectionResult {
  std::string chosen;
  std::size_t chosen_index = 0;
  std::map<std::string, double> scores;
  double lambda_used = 0.0;
  double delta = 0.05;
  SelectionMethod method = SelectionMethod::Ls;
};

// The union-bound-calibrated smoothing rate sqrt(2 ln(2m/delta)/n).
double selection_lambda(std::size_t m, std::size_t n, double delta);

// Pessimistic selection: argmin over candidates of the LS estimate at
// lambda_s, ties broken by lexicographically smallest name.
SelectionResult select(const LoggedDataset& data,
                       const CandidateSet& candidates, double delta);

// Point-estimator baselines and bound-minimizing variants used by the
// selection study. lambda_override <= 0 picks the method default: lambda_s
// for LS, 1/sqrt(n) for the bounds (the clip level is 1/lambda).
SelectionResult select_with_method(const LoggedDataset& data,
                                   const CandidateSet& candidates,
                                   SelectionMethod method, double delta,
                                   double lambda_override = 0.0);

enum class SelectionOutcome { Worse, Better, Best };

const char* outcome_name(SelectionOutcome o);

// Best iff the chosen candidate attains the minimal true risk; Worse iff its
// risk strictly exceeds the behavior candidate's; everything else (including
// exact ties with the behavior policy) is Better.
SelectionOutcome classify_outcome(const SelectionResult& result,
                                  const CandidateSet& candidates,
                                  const Environment& env,
                                  const std::string& behavior_name);

// Right-hand side of the selection suboptimality guarantee:
// lambda S_lambda(pi*) + 2 ln(2m/delta)/(lambda n), with pi* the true-risk
// minimizer among the candidates and S_lambda from the enumeration oracle.
// lambda_override <= 0 uses lambda_s.
double suboptimality_certificate(const CandidateSet& candidates,
                                 const Environment& env,
                                 const LoggedDataset& data, double delta,
                                 double lambda_override = 0.0);

// The implicit-exploration analogue with C_{lambda/2} in place of S_lambda;
// always at least as large as the LS certificate.
double ix_suboptimality_certificate(const CandidateSet& candidates,
                                    const Environment& env,
                                    const LoggedDataset& data, double delta,
                                    double lambda_override = 0.0);

}  // namespace offpolicy
