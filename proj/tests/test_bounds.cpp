#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "offpolicy/bounds.hpp"
#include "offpolicy/data_gen.hpp"
#include "offpolicy/math.hpp"

using namespace offpolicy;

namespace {

SampleTriple t(double p, double q, double c) { return SampleTriple{p, q, c}; }

BoundConfig cfg(double lambda, double delta, int L = 1) {
  BoundConfig c;
  c.lambda = lambda;
  c.delta = delta;
  c.moment_order = L;
  return c;
}

std::vector<SampleTriple> random_samples(CounterRng& rng, std::size_t n) {
  std::vector<SampleTriple> s;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = 0.02 + 0.98 * rng.next_double();
    const double p = rng.next_double();
    const double c = rng.next_double() < 0.5 ? -rng.next_double() : 0.0;
    s.push_back(t(p, q, c));
  }
  return s;
}

}  // namespace

TEST_CASE("moments_bound hand examples") {
  // Single sample with h = -1 via IPS on w=1, c=-1.
  const std::vector<SampleTriple> one = {t(0.5, 0.5, -1.0)};

  // h = 0: upper = psi(0) = 0.
  const std::vector<SampleTriple> zero = {t(0.5, 0.5, 0.0)};
  CHECK(moments_bound(zero, RegularizerH::ips(), cfg(0.7, 1.0, 1)).upper ==
        doctest::Approx(0.0).epsilon(1e-15));

  // L=1: psi_1(-1 + 1/2) = 1 - e^{1/2}.
  auto l1 = moments_bound(one, RegularizerH::ips(), cfg(1.0, 1.0, 1));
  CHECK(l1.upper == doctest::Approx(-0.64872127070012815).epsilon(1e-15));
  CHECK(l1.estimate == doctest::Approx(-1.0));
  REQUIRE(l1.moment_terms.size() == 1);  // just ell = 2
  CHECK(l1.moment_terms[0] == doctest::Approx(0.5));
  CHECK(l1.confidence_term == 0.0);

  // L=2: psi_1(-1 + 1/2 - 1/3 + 1/4) = 1 - e^{7/12}. Oracle-frozen.
  auto l2 = moments_bound(one, RegularizerH::ips(), cfg(1.0, 1.0, 2));
  CHECK(l2.upper == doctest::Approx(-0.79200182565575550).epsilon(1e-14));
  REQUIRE(l2.moment_terms.size() == 3);  // ell = 2, 3, 4

  CHECK_THROWS(moments_bound(one, RegularizerH::ips(), cfg(1.0, 1.0, 0)));
  CHECK_THROWS(moments_bound(one, RegularizerH::ips(), cfg(0.0, 1.0, 1)));
  CHECK_THROWS(moments_bound(one, RegularizerH::ips(), cfg(1.0, 0.0, 1)));
}

TEST_CASE("moments_bound with infinite order equals ls_bound on IPS h") {
  CounterRng rng(42);
  const auto samples = random_samples(rng, 64);
  const BoundConfig c = cfg(0.5, 0.1, kInfiniteMoments);
  const double via_moments =
      moments_bound(samples, RegularizerH::ips(), c).upper;
  const double via_ls = ls_bound(samples, c).upper;
  CHECK(via_moments == doctest::Approx(via_ls).epsilon(1e-15));
}

TEST_CASE("second_moment_bound clips then applies the L=1 formula") {
  // w c = -5 clipped at 1/lambda = 1 -> h = -1; psi_1(-1 + 1/2).
  const std::vector<SampleTriple> one = {t(1.0, 0.2, -1.0)};
  auto b = second_moment_bound(one, cfg(1.0, 1.0, 1));
  CHECK(b.upper == doctest::Approx(-0.64872127070012815).epsilon(1e-15));
  CHECK(b.name == "cIPS-L=1");

  const std::vector<SampleTriple> zero = {t(1.0, 0.2, 0.0)};
  auto z = second_moment_bound(zero, cfg(1.0, 0.5, 1));
  CHECK(z.upper ==
        doctest::Approx(psi_lambda(1.0, std::log(2.0))).epsilon(1e-14));
}

TEST_CASE("ls_bound hand examples") {
  const std::vector<SampleTriple> one = {t(0.5, 0.5, -1.0)};
  auto b = ls_bound(one, cfg(1.0, 1.0));
  CHECK(b.upper == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(b.name == "LS");
  CHECK(b.moment_order == kInfiniteMoments);

  // Small-lambda limit approaches the IPS value.
  const std::vector<SampleTriple> two = {t(1.0, 0.5, -1.0), t(0.3, 0.6, 0.0)};
  auto small = ls_bound(two, cfg(1e-8, 1.0));
  CHECK(small.upper == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("ix_bound hand examples") {
  const std::vector<SampleTriple> one = {t(0.5, 0.1, -1.0)};
  auto b = ix_bound(one, cfg(0.2, 1.0));
  CHECK(b.upper == doctest::Approx(-2.5).epsilon(1e-15));
  CHECK(b.name == "IX");

  const std::vector<SampleTriple> zero = {t(0.5, 0.1, 0.0), t(0.9, 0.4, 0.0)};
  CHECK(ix_bound(zero, cfg(0.2, 1.0)).upper ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("empirical_bernstein_bound hand examples") {
  // Two identical clipped terms: Vhat = 0 and delta = 2 kills the log term.
  const std::vector<SampleTriple> same = {t(0.5, 0.5, -1.0),
                                          t(0.5, 0.5, -1.0)};
  auto degenerate = empirical_bernstein_bound(same, 1.0, 2.0);
  CHECK(degenerate.upper == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(degenerate.estimate == doctest::Approx(-1.0));
  CHECK(degenerate.clip_m == 1.0);

  // Clipped values (-1, 0), M=1, delta=0.05. Oracle-frozen evaluation of
  // Rhat + sqrt(2 Vhat ln(2/delta)/n) + 7 M ln(2/delta)/(3(n-1)).
  const std::vector<SampleTriple> pair = {t(0.5, 0.5, -1.0), t(0.5, 0.5, 0.0)};
  auto b = empirical_bernstein_bound(pair, 1.0, 0.05);
  CHECK(b.upper == doctest::Approx(9.4654869086731375).epsilon(1e-14));
  CHECK(b.name == "cIPS-EB");

  const std::vector<SampleTriple> single = {t(0.5, 0.5, -1.0)};
  CHECK_THROWS(empirical_bernstein_bound(single, 1.0, 0.05));
  CHECK_THROWS(empirical_bernstein_bound(pair, 0.0, 0.05));
}

TEST_CASE("subgaussian_interval endpoints") {
  const std::vector<SampleTriple> one = {t(0.5, 0.5, -1.0)};
  const double lambda = 1.0;
  const double ls = ls_estimate(one, lambda).value;

  // delta = 2 (zero log term) and S = 0 collapse the interval to LS.
  auto point = subgaussian_interval(one, lambda, 2.0, 0.0);
  CHECK(point.lower == doctest::Approx(ls).epsilon(1e-15));
  CHECK(point.upper == doctest::Approx(ls).epsilon(1e-15));

  auto iv = subgaussian_interval(one, lambda, 0.1, 0.25);
  const double conf = std::log(2.0 / 0.1) / (lambda * 1.0);
  CHECK(iv.upper == doctest::Approx(ls + conf).epsilon(1e-14));
  CHECK(iv.lower == doctest::Approx(ls - lambda * 0.25 - conf).epsilon(1e-14));
  CHECK_THROWS(subgaussian_interval(one, lambda, 0.1, -1.0));
}

TEST_CASE("optimal lambda makes the two-sided confidence width sub-Gaussian") {
  // With lambda* = sqrt(ln(2/delta)/(n V)), V = E[w^2 c^2], the two-sided
  // confidence contribution 2 ln(2/delta)/(lambda* n) equals
  // sqrt(2 sigma^2 ln(2/delta)) at sigma^2 = 2V/n.
  const double v = 0.37, delta = 0.05, n = 250;
  const double lam = std::sqrt(std::log(2.0 / delta) / (n * v));
  const double lhs = 2.0 * std::log(2.0 / delta) / (lam * n);
  const double rhs = std::sqrt(2.0 * (2.0 * v / n) * std::log(2.0 / delta));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("check_l_monotonicity examples") {
  std::vector<double> zeros = {0.0, 0.0};
  CHECK(check_l_monotonicity(zeros, 5.0, 1));  // vacuous constraint

  std::vector<double> ones = {-1.0, -1.0};
  CHECK(check_l_monotonicity(ones, 1.0, 1));  // 1 <= 4/3

  std::vector<double> big = {-10.0};
  CHECK_FALSE(check_l_monotonicity(big, 1.0, 1));  // 1 > 4/30
}

TEST_CASE("U_{L+1} <= U_L whenever the lambda condition holds") {
  CounterRng rng(777);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto samples = random_samples(rng, 16);
    const double lambda = 0.05 + rng.next_double();
    const double delta = 0.05 + 0.9 * rng.next_double();
    const RegularizerH h = RegularizerH::ips();
    const auto breakdown = regularized_estimate(samples, h);
    for (int L = 1; L <= 6; ++L) {
      if (!check_l_monotonicity(breakdown.per_sample, lambda, L)) continue;
      const double ul = moments_bound(samples, h, cfg(lambda, delta, L)).upper;
      const double ul1 =
          moments_bound(samples, h, cfg(lambda, delta, L + 1)).upper;
      CHECK(ul1 <= ul + 1e-12);
      ++checked;
    }
  }
  CHECK(checked > 200);  // condition held often enough to be meaningful
}

TEST_CASE("bound dominance chains on random instances") {
  CounterRng rng(2468);
  for (int trial = 0; trial < 100; ++trial) {
    const auto samples = random_samples(rng, 1 + rng.next_index(100));
    const double lambda = 0.02 + 2.0 * rng.next_double();
    const double delta = 0.02 + 0.98 * rng.next_double();
    const BoundConfig c = cfg(lambda, delta, 1);
    const double ls = ls_bound(samples, c).upper;
    const double ix = ix_bound(samples, c).upper;
    const double cips = second_moment_bound(samples, c).upper;
    CHECK(ls <= ix + 1e-12);    // infinite-moment vs implicit exploration
    CHECK(ls <= cips + 1e-12);  // infinite-moment vs clipped second moment
  }
}

TEST_CASE("IPS minimizes the infinite-moment bound over the catalog") {
  CounterRng rng(1357);
  for (int trial = 0; trial < 50; ++trial) {
    const auto samples = random_samples(rng, 32);
    const double lambda = 0.1 + rng.next_double();
    const BoundConfig c = cfg(lambda, 0.2, kInfiniteMoments);
    const double ls = moments_bound(samples, RegularizerH::ips(), c).upper;
    const std::vector<RegularizerH> others = {
        RegularizerH::clipping(1.0 + 5.0 * rng.next_double()),
        RegularizerH::exp_smoothing(rng.next_double()),
        RegularizerH::implicit_exploration(0.5 * rng.next_double()),
        RegularizerH::global_clipping(lambda),
    };
    for (const auto& h : others)
      CHECK(ls <= moments_bound(samples, h, c).upper + 1e-12);
  }
}

TEST_CASE("global clipping solves the per-sample L=1 KKT problem") {
  CounterRng rng(31415);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = rng.next_double();
    const double q = rng.next_double_pos();
    const double c = -rng.next_double();
    const double lambda = 0.05 + 2.0 * rng.next_double();
    const double floor = p * c / q;
    // Brute-force argmin of f(h) = h + (lambda/2) h^2 over [floor, 0].
    const int grid = 10000;
    double best_h = 0.0, best_f = 0.0;
    for (int g = 0; g <= grid; ++g) {
      const double h = floor * g / grid;
      const double f = h + 0.5 * lambda * h * h;
      if (f < best_f) {
        best_f = f;
        best_h = h;
      }
    }
    const double formula = global_clipping_h(lambda).apply(p, q, c);
    CHECK(std::abs(best_h - formula) <=
          std::abs(floor) / grid + 1e-12);
  }
}

TEST_CASE("LS and IX bounds cover the true risk at the advertised rate") {
  const int k = 4;
  auto behavior = std::make_shared<UniformPolicy>(k);
  std::vector<Context> xs;
  for (int y = 0; y < k; ++y) {
    Context x;
    x.features = {double(y)};
    x.label = y;
    xs.push_back(x);
  }
  Environment env(xs, k, 0.1, behavior);
  auto target = ideal_policy(k, 0.3);
  const double r = true_risk(*target, env);
  const double delta = 0.05;
  const std::size_t n = 100;
  const double lambda = 1.0 / std::sqrt(double(n));
  const int reps = 2000;
  int ls_cover = 0, ix_cover = 0, sg_cover = 0;
  const double s_lam = s_lambda_oracle(*target, env, lambda);
  CounterRng rng(3141);
  for (int rep = 0; rep < reps; ++rep) {
    CounterRng cell = rng.split(rep);
    LoggedDataset data = env.sample_feedback(n, cell);
    const auto triples = extract_triples(data, *target);
    ls_cover += (r <= ls_bound(triples, cfg(lambda, delta)).upper);
    ix_cover += (r <= ix_bound(triples, cfg(lambda, delta)).upper);
    const auto iv = subgaussian_interval(triples, lambda, delta, s_lam);
    sg_cover += (r >= iv.lower && r <= iv.upper);
  }
  const double floor_rate =
      1.0 - delta - 3.0 * std::sqrt(delta * (1.0 - delta) / reps);
  CHECK(ls_cover / double(reps) >= floor_rate);
  CHECK(ix_cover / double(reps) >= floor_rate);
  CHECK(sg_cover / double(reps) >= floor_rate);
}
