#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "offpolicy/core.hpp"

namespace offpolicy {

struct MulticlassDataset {
  std::vector<std::vector<double>> features;  // n x p
  std::vector<int> labels;                    // values in [0, K)
  int class_count = 0;
  int feature_dim = 0;

  std::size_t size() const { return labels.size(); }
  std::vector<Context> contexts() const;
};

// One experiment cell recipe: conversion noise, behavior/target temperatures,
// fault set, seed, split fractions.
struct ScenarioConfig {
  double epsilon = 0.1;
  double tau0 = 0.25;                      // behavior temperature
  double tau = 0.1;                        // target temperature
  std::vector<int> fault_labels;           // empty = first ceil(K/2)
  std::uint64_t seed = 0;
  std::array<double, 3> splits = {0.2, 0.5, 0.3};
};

// Label-conditioned softmax over a one-hot score: the peak action gets
// probability 1/(1 + (K-1) e^{-1/tau}), every other action shares the rest.
// Computed in the exp(-1/tau) form so tau -> 0 stays finite.
std::shared_ptr<const Policy> ideal_policy(int action_count, double tau);

// Like ideal_policy, except labels in the fault set get their peak moved by
// shift_map. Empty fault set = ideal. shift_map must move every fault label.
std::shared_ptr<const Policy> faulty_policy(
    int action_count, double tau, const std::vector<int>& fault_labels,
    const std::vector<int>& shift_map);

// Fault set = first ceil(K/2) labels, cyclic shift label -> (label+1) mod K.
std::shared_ptr<const Policy> default_faulty_policy(int action_count,
                                                    double tau);

// Linear softmax pi(a|x) proportional to exp(scale * x^T theta_a);
// theta is K x p row-major.
std::shared_ptr<const Policy> linear_softmax_policy(std::vector<double> theta,
                                                    int action_count,
                                                    int feature_dim,
                                                    double scale);

enum class TrainingObjective { Ips, Sn };

// Fits a linear softmax (temperature tau) on logged feedback by Adam on the
// chosen empirical risk. Zero initialization, full batch.
std::shared_ptr<const Policy> learned_softmax_policy(
    const LoggedDataset& data, TrainingObjective objective, double tau,
    int epochs = 50, double learning_rate = 1e-2);

// Multinomial logistic regression on labeled rows (used to build priors and
// behavior policies for the learning study). Returns theta, K x p row-major.
std::vector<double> fit_supervised_softmax(const MulticlassDataset& mc,
                                           double l2 = 1e-4,
                                           double learning_rate = 0.1,
                                           int epochs = 10);

// Multiclass-to-bandit conversion: per row sample a ~ behavior(.|x) and
// r ~ Bernoulli(epsilon + 1[a = label](1 - 2 epsilon)); log cost -r and the
// behavior propensity.
LoggedDataset bandit_feedback(const MulticlassDataset& mc,
                              const Policy& behavior, double epsilon,
                              std::uint64_t seed);

// Exact-risk oracle over the rows of a multiclass dataset.
Environment make_environment(const MulticlassDataset& mc, double epsilon,
                             std::shared_ptr<const Policy> behavior = nullptr);

// Header row required; label column selected by name; features standardized
// per column (sigma guard 1e-12); labels reindexed to [0, K) in sorted order
// of the distinct raw values.
MulticlassDataset load_multiclass_csv(const std::string& path,
                                      const std::string& label_column);

// Disjoint shuffled splits. Fractions must sum to <= 1; every split must end
// up nonempty. Deterministic under seed.
std::array<MulticlassDataset, 3> split(const MulticlassDataset& mc,
                                       const std::array<double, 3>& fractions,
                                       std::uint64_t seed);

// Gaussian blobs with unit within-class noise, balanced labels, standardized
// features. Deterministic under seed.
MulticlassDataset make_blobs(std::size_t n, int class_count, int feature_dim,
                             double separation, std::uint64_t seed);

}  // namespace offpolicy
