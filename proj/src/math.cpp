#include "offpolicy/math.hpp"

#include <cmath>
#include <stdexcept>

namespace offpolicy {

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1 nodes");
  const double eps = 1e-14;
  const int m = (n + 1) / 2;
  GaussHermite out;
  out.nodes.assign(n, 0.0);
  out.weights.assign(n, 0.0);

  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    // Asymptotic guesses for the i-th largest root, then Newton.
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * out.nodes[n - 1];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * out.nodes[n - 2];
    } else {
      z = 2.0 * z - out.nodes[n - i + 1];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Orthonormal recurrence: p1 ends as ~H_n(z), pp is its derivative.
      double p1 = 0.7511255444649424828587030;  // pi^{-1/4}
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= eps) break;
    }
    out.nodes[n - 1 - i] = z;
    out.nodes[i] = -z;
    out.weights[n - 1 - i] = 2.0 / (pp * pp);
    out.weights[i] = out.weights[n - 1 - i];
  }
  if (n % 2 == 1) out.nodes[n / 2] = 0.0;  // exact middle root
  return out;
}

GaussHermite gauss_hermite_normal(int n) {
  GaussHermite gh = gauss_hermite(n);
  const double sqrt2 = 1.4142135623730950488016887;
  const double inv_sqrt_pi = 0.5641895835477562869480795;
  for (int i = 0; i < n; ++i) {
    gh.nodes[i] *= sqrt2;
    gh.weights[i] *= inv_sqrt_pi;
  }
  return gh;
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2)
    throw std::invalid_argument("sample_variance: needs n >= 2");
  const double mean = pairwise_mean(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - mean;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(v.size() - 1);
}

void AdamOptimizer::step(std::span<double> params,
                         std::span<const double> grad) {
  if (params.size() != grad.size())
    throw std::invalid_argument("AdamOptimizer: param/grad size mismatch");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  } else if (m_.size() != params.size()) {
    throw std::invalid_argument("AdamOptimizer: parameter count changed");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, t_);
  const double bc2 = 1.0 - std::pow(beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps);
  }
}

}  // namespace offpolicy
