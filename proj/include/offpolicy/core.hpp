#pragma once

#include <memory>
#include <string>
#include <vector>

#include "offpolicy/rng.hpp"

namespace offpolicy {

// Contexts carry an optional true label (-1 = unknown). The label is oracle
// metadata: label-conditioned policies and exact-risk environments read it,
// estimators never do.
struct Context {
  std::vector<double> features;
  int label = -1;
};

// (x_i, a_i, c_i, pi_0(a_i|x_i)). Costs live in [-1, 0]; a reward r in {0,1}
// is ingested as cost c = -r.
struct LoggedRecord {
  Context context;
  int action = 0;
  double cost = 0.0;
  double propensity = 1.0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual int action_count() const = 0;
  virtual double prob(const Context& x, int action) const = 0;
  virtual std::vector<double> full_probs(const Context& x) const;
  virtual int sample(const Context& x, CounterRng& rng) const;
};

class UniformPolicy : public Policy {
 public:
  explicit UniformPolicy(int action_count);
  int action_count() const override { return k_; }
  double prob(const Context&, int) const override { return 1.0 / k_; }
  std::vector<double> full_probs(const Context&) const override;

 private:
  int k_;
};

// Immutable after construction; constructor enforces the record invariants.
class LoggedDataset {
 public:
  LoggedDataset(std::vector<LoggedRecord> records, int action_count);

  const std::vector<LoggedRecord>& records() const { return records_; }
  int action_count() const { return action_count_; }
  int feature_dim() const { return feature_dim_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<LoggedRecord> records_;
  int action_count_;
  int feature_dim_;
};

// Test/experiment oracle: an enumerable context population with known labels
// and Bernoulli costs. Action rho(x) has expected reward 1 - epsilon, every
// other action epsilon; expected cost is the negative of that. Contexts are
// drawn uniformly. An optional behavior policy makes the logging distribution
// enumerable too (required by the S_lambda-style oracles).
class Environment {
 public:
  Environment(std::vector<Context> contexts, int action_count, double epsilon,
              std::shared_ptr<const Policy> behavior = nullptr);

  const std::vector<Context>& contexts() const { return contexts_; }
  int action_count() const { return action_count_; }
  double epsilon() const { return epsilon_; }
  bool has_behavior() const { return behavior_ != nullptr; }
  const Policy& behavior() const;
  std::shared_ptr<const Policy> behavior_ptr() const { return behavior_; }

  // -(epsilon + 1[a == label] (1 - 2 epsilon))
  double expected_cost(const Context& x, int action) const;

  // Logged data under the behavior policy: x uniform, a ~ pi_0(.|x),
  // c in {-1, 0} Bernoulli.
  LoggedDataset sample_feedback(std::size_t n, CounterRng& rng) const;

 private:
  std::vector<Context> contexts_;
  int action_count_;
  double epsilon_;
  std::shared_ptr<const Policy> behavior_;
};

// E_x E_{a~pi}[c(x,a)] computed exactly from the environment's expected
// costs; no sampling.
double true_risk(const Policy& policy, const Environment& env);

double importance_weight(const LoggedRecord& record, const Policy& policy);

}  // namespace offpolicy
