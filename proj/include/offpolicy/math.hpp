#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace offpolicy {

inline double normal_pdf(double x) {
  return 0.3989422804014326779399461 * std::exp(-0.5 * x * x);
}

// Standard normal CDF via erfc; accurate in both tails.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244008444);
}

// psi_lambda(x) = (1 - e^{-lambda x}) / lambda, the nonlinearity that maps
// exponential-moment arguments back to the risk scale. Monotone increasing,
// psi(x) <= x, saturates at 1/lambda as x -> +inf. lambda = 0 means identity.
inline double psi_lambda(double lambda, double x) {
  if (lambda == 0.0) return x;
  if (std::isinf(x)) return x > 0 ? 1.0 / lambda : x;
  return -std::expm1(-lambda * x) / lambda;
}

// Deterministic pairwise (cascade) summation. The reduction tree depends only
// on the element count, never on thread count or chunking, so results are
// bitwise reproducible.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_mean(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

// Kahan-compensated accumulator for short series with cancellation
// (moment-term sums in ascending order).
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

struct GaussHermite {
  std::vector<double> nodes;    // roots of H_n, ascending
  std::vector<double> weights;  // for integral against e^{-x^2}
};

// Golub-Welsch-free computation of Gauss-Hermite nodes: Newton iteration on
// the orthonormal Hermite recurrence with the classical asymptotic initial
// guesses. Stable up to several hundred nodes.
GaussHermite gauss_hermite(int n);

// Nodes/weights pre-transformed for E_{eps ~ N(0,1)}[f(eps)]:
// sum_i weights[i] * f(nodes[i]), weights summing to 1.
GaussHermite gauss_hermite_normal(int n);

// Unbiased sample variance (n-1 denominator). Requires v.size() >= 2.
double sample_variance(std::span<const double> v);

// Adam with bias correction; moment state sized on first step.
struct AdamOptimizer {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamOptimizer(double learning_rate) : lr(learning_rate) {}
  void step(std::span<double> params, std::span<const double> grad);

 private:
  int t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace offpolicy
