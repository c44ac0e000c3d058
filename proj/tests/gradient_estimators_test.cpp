#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "random_models.hpp"
#include "vqo/gradient_estimators.hpp"
#include "vqo/toy_family.hpp"

using vqo::Ansatz;
using vqo::ObservableSum;
using vqo::ParamPoint;
using vqo::PauliString;
using vqo::SamplingOracle;

namespace {

struct CoordStats {
  std::vector<double> mean;
  std::vector<double> se;  // standard error of the mean
};

template <class Estimator>
CoordStats run(Estimator est, std::size_t p, int m) {
  std::vector<double> s1(p, 0.0), s2(p, 0.0);
  for (int k = 0; k < m; ++k) {
    const auto g = est();
    for (std::size_t j = 0; j < p; ++j) {
      s1[j] += g.vector[j];
      s2[j] += g.vector[j] * g.vector[j];
    }
  }
  CoordStats out{std::vector<double>(p), std::vector<double>(p)};
  for (std::size_t j = 0; j < p; ++j) {
    out.mean[j] = s1[j] / m;
    const double var = s2[j] / m - out.mean[j] * out.mean[j];
    out.se[j] = std::sqrt(std::max(var, 0.0) / m);
  }
  return out;
}

}  // namespace

TEST(EstimateL1, OneHotWithFixedMagnitude) {
  const double eps = 0.53033 * 0.53033 * 4 / 45;
  const auto [inst, h] = vqo::build_instance(4, eps, {1, -1, -1, 1});
  const auto a = vqo::build_toy_ansatz(4);
  SamplingOracle o(h, 3);
  vqo::CounterRng rng(1);
  for (int k = 0; k < 200; ++k) {
    ParamPoint theta(4);
    for (auto& x : theta) x = rng.uniform() - 0.5;
    const auto g = vqo::estimate_grad_l1(o, a, theta);
    EXPECT_EQ(g.queries_used, 1u);
    int nonzero = 0;
    double l1 = 0.0, l2 = 0.0;
    for (double v : g.vector) {
      nonzero += v != 0.0;
      l1 += std::abs(v);
      l2 += v * v;
    }
    EXPECT_EQ(nonzero, 1);
    EXPECT_NEAR(l1, 4.87983, 1e-5);
    EXPECT_NEAR(std::sqrt(l2), 4.87983, 1e-5);
    EXPECT_NEAR(l1, o.gamma(a).l1(), 1e-12);
  }
  EXPECT_EQ(o.ledger().first(), 200u);
  EXPECT_EQ(o.ledger().total(), 200u);
}

TEST(EstimateL1, ZeroTable) {
  const Ansatz a(3, "000", {ObservableSum::single(1.0, PauliString::from_letters("XII")),
                            ObservableSum::single(1.0, PauliString::from_letters("IYI"))});
  SamplingOracle o(ObservableSum::single(1.0, PauliString::from_letters("IIZ")), 1);
  const auto g1 = vqo::estimate_grad_l1(o, a, {0.1, 0.2});
  EXPECT_EQ(g1.queries_used, 0u);
  EXPECT_EQ(g1.vector, std::vector<double>(2, 0.0));
  const auto g2 = vqo::estimate_grad_l2(o, a, {0.1, 0.2});
  EXPECT_EQ(g2.queries_used, 0u);
  EXPECT_EQ(g2.vector, std::vector<double>(2, 0.0));
  EXPECT_EQ(o.ledger().total(), 0u);
}

TEST(EstimateL2, ToyCounts) {
  const auto [inst, h] = vqo::build_instance(4, 0.03, {1, 1, -1, 1});
  const auto a = vqo::build_toy_ansatz(4);
  SamplingOracle o(h, 2);
  const auto counts = vqo::l2_sample_counts(o.gamma(a));
  for (auto c : counts) EXPECT_EQ(c, 3u);  // ceil(ln 16)
  const auto g = vqo::estimate_grad_l2(o, a, {0.1, 0, 0, -0.1});
  EXPECT_EQ(g.queries_used, 12u);
  EXPECT_EQ(o.ledger().first(), 12u);
  EXPECT_LE(12.0, vqo::l2_query_bound(o.gamma(a)));
}

TEST(EstimateL2, CountsMatchFormulaOnRandomModels) {
  vqo::CounterRng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(3);
    const std::size_t p = 1 + rng.below(5);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 1 + rng.below(4), rng);
    SamplingOracle o(h, trial);
    const auto& gamma = o.gamma(a);
    if (gamma.l2() == 0.0) continue;
    double l2sq = 0.0, linf = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      l2sq += gamma.gamma(j) * gamma.gamma(j);
      linf = std::max(linf, gamma.gamma(j));
    }
    const double lg = std::log(4.0 * p * p * linf * linf / l2sq);
    std::uint64_t total = 0;
    const auto counts = vqo::l2_sample_counts(gamma);
    for (std::size_t j = 0; j < p; ++j) {
      const auto expect = static_cast<std::uint64_t>(std::ceil(p * gamma.gamma(j) * gamma.gamma(j) / l2sq * lg));
      EXPECT_EQ(counts[j], expect);
      total += expect;
    }
    EXPECT_LE(static_cast<double>(total), p * (1 + lg) + 1e-9);
    const auto g = vqo::estimate_grad_l2(o, a, models::random_point(p, rng));
    EXPECT_EQ(g.queries_used, total);
    EXPECT_EQ(o.ledger().first(), total);
  }
}

TEST(EstimateL2, SingleCoordinateIsSampleMean) {
  const Ansatz a(2, "00", {ObservableSum::single(1.0, PauliString::from_letters("XY"))});
  const ObservableSum h(2, {{0.7, PauliString::from_letters("ZI")}, {0.4, PauliString::from_letters("IZ")}});
  SamplingOracle o(h, 12), replay(h, 12);
  const ParamPoint theta{0.4};
  const auto g = vqo::estimate_grad_l2(o, a, theta);
  ASSERT_GE(g.queries_used, 1u);
  double acc = 0.0;
  for (std::uint64_t k = 0; k < g.queries_used; ++k) acc += replay.query(a, theta, {0});
  EXPECT_DOUBLE_EQ(g.vector[0], acc / static_cast<double>(g.queries_used));
}

TEST(Estimators, Unbiased) {
  vqo::CounterRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.below(3);
    const std::size_t p = 1 + rng.below(4);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 2 + rng.below(3), rng);
    const auto theta = models::random_point(p, rng);
    const auto exact = vqo::exact_gradient(a, h, theta);
    SamplingOracle o(h, 100 + trial);
    const int m = 100000;
    const auto s1 = run([&] { return vqo::estimate_grad_l1(o, a, theta); }, p, m);
    const auto s2 = run([&] { return vqo::estimate_grad_l2(o, a, theta); }, p, m);
    for (std::size_t j = 0; j < p; ++j) {
      EXPECT_LE(std::abs(s1.mean[j] - exact[j]), 4 * s1.se[j] + 1e-12) << "l1 trial " << trial << " j " << j;
      EXPECT_LE(std::abs(s2.mean[j] - exact[j]), 4 * s2.se[j] + 1e-12) << "l2 trial " << trial << " j " << j;
    }
  }
}

TEST(Estimators, SingleParameterL1) {
  const Ansatz a(1, "0", {ObservableSum::single(1.0, PauliString::from_letters("Y"))});
  const ObservableSum h(1, {{0.6, PauliString::from_letters("Z")}, {0.3, PauliString::from_letters("X")}});
  SamplingOracle o(h, 9);
  const ParamPoint theta{0.8};
  const int m = 100000;
  const auto s = run([&] { return vqo::estimate_grad_l1(o, a, theta); }, 1, m);
  const double gamma = o.gamma(a).gamma(0);
  EXPECT_NEAR(gamma, 0.9, 1e-12);
  EXPECT_NEAR(s.mean[0], vqo::exact_query_mean(a, h, theta, {0}), 4 * gamma / std::sqrt(m));
}

TEST(EstimateL2, InfNormVarianceBoundAtOptimum) {
  for (std::size_t n : {4u, 8u}) {
    const auto inst = vqo::random_instance(n, 0.005 * n, 6);
    const auto h = vqo::toy_observable(inst);
    const auto a = vqo::build_toy_ansatz(n);
    SamplingOracle o(h, 8);
    const auto theta = inst.optimum();
    const auto& gamma = o.gamma(a);
    for (double d : vqo::exact_gradient(a, h, theta)) {
      EXPECT_LE(std::abs(d), gamma.l2() / std::sqrt(2.0 * n));
    }
    double acc = 0.0;
    const int m = 10000;
    for (int k = 0; k < m; ++k) {
      double mx = 0.0;
      for (double v : vqo::estimate_grad_l2(o, a, theta).vector) mx = std::max(mx, v * v);
      acc += mx;
    }
    EXPECT_LE(acc / m, 5 * gamma.l2() * gamma.l2() / (2.0 * n));
  }
}
