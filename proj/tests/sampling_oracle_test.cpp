#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "random_models.hpp"
#include "stats.hpp"
#include "vqo/sampling_oracle.hpp"
#include "vqo/toy_family.hpp"

using vqo::Ansatz;
using vqo::ObservableSum;
using vqo::ParamPoint;
using vqo::PauliString;
using vqo::SamplingOracle;

namespace {

struct Moments {
  double mean = 0.0;
  bool bounded = true;
};

Moments sample(SamplingOracle& o, const Ansatz& a, const ParamPoint& theta, const vqo::CoordinateSet& s, int m) {
  const double c = o.normalization(a, s);
  Moments out;
  for (int i = 0; i < m; ++i) {
    const double y = o.query(a, theta, s);
    out.bounded = out.bounded && (y == c || y == -c);
    out.mean += y;
  }
  out.mean /= m;
  return out;
}

}  // namespace

TEST(GammaTable, ToyValues) {
  for (double eps : {0.05, 0.02}) {
    const auto inst = vqo::random_instance(8, eps, 3);
    const auto gamma = vqo::build_gamma(vqo::build_toy_ansatz(8), vqo::toy_observable(inst));
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(gamma.gamma(j), std::numbers::sqrt2 * std::cos(inst.delta), 1e-12);
  }
  const auto inst = vqo::random_instance(8, 0.05, 4);
  EXPECT_NEAR(inst.delta, 0.53033, 1e-5);
  const auto gamma = vqo::build_gamma(vqo::build_toy_ansatz(8), vqo::toy_observable(inst));
  EXPECT_NEAR(gamma.gamma(0), 1.21996, 1e-5);
}

TEST(GammaTable, DisjointSupportsPruneEverything) {
  const Ansatz a(3, "000", {ObservableSum::single(1.0, PauliString::from_letters("XII")),
                            ObservableSum::single(1.0, PauliString::from_letters("IYI"))});
  const ObservableSum h = ObservableSum::single(2.0, PauliString::from_letters("IIZ"));
  const auto gamma = vqo::build_gamma(a, h);
  EXPECT_EQ(gamma.gamma(0), 0.0);
  EXPECT_EQ(gamma.gamma(1), 0.0);
  SamplingOracle o(h, 1);
  EXPECT_EQ(o.query(a, {0.3, 0.2}, {1}), 0.0);
  EXPECT_EQ(o.ledger().first(), 1u);
}

TEST(GammaTable, InvariantsOnRandomModels) {
  vqo::CounterRng rng(41);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + rng.below(6);
    const std::size_t p = 1 + rng.below(5);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 1 + rng.below(6), rng);
    const auto gamma = vqo::build_gamma(a, h);
    for (std::size_t j = 0; j < p; ++j) {
      EXPECT_LE(gamma.gamma(j), gamma.normalization * gamma.generator_sums[j] + 1e-12);
      for (const auto& e : gamma.entries[j]) {
        const auto cone = vqo::lightcone_mask(a, j, a.pulse(j)[e.k].string.support_mask());
        const bool pruned = (cone & h[e.l].string.support_mask()) == 0;
        EXPECT_EQ(e.gamma == 0.0, pruned);
        if (!pruned) EXPECT_DOUBLE_EQ(e.gamma, a.pulse(j)[e.k].coefficient * h[e.l].coefficient);
      }
      if (gamma.gamma(j) > 0) {
        const auto q = gamma.distribution(j);
        double sum = 0.0;
        for (double x : q) sum += x;
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
      SamplingOracle o(h, 1);
      EXPECT_NEAR(o.normalization(a, {j}), gamma.gamma(j), 1e-12);
    }
  }
}

TEST(SamplingOracle, ToyZerothOrderOutputs) {
  const auto [toy, h] = vqo::build_instance(3, 0.01875, {1, -1, 1});
  const auto a = vqo::build_toy_ansatz(3);
  SamplingOracle o(h, 5);
  const double e = o.normalization(a, {});
  EXPECT_NEAR(e, 3 * std::numbers::sqrt2 * std::cos(toy.delta), 1e-12);
  for (int i = 0; i < 100; ++i) {
    const double y = o.query(a, {0.1, 0.2, -0.1}, {});
    EXPECT_TRUE(y == e || y == -e);
  }
}

TEST(SamplingOracle, ToyNormalizationValue) {
  // delta = 0.53033 at n = 3 needs eps = n delta^2 / 45.
  const double eps = 3 * 0.53033 * 0.53033 / 45;
  const auto [toy, h] = vqo::build_instance(3, eps, {1, 1, -1});
  EXPECT_NEAR(h.normalization(), 3.65987, 1e-5);
}

TEST(SamplingOracle, GradientAtOptimumIsFairCoin) {
  const auto inst = vqo::random_instance(4, 0.04, 8);
  const auto h = vqo::toy_observable(inst);
  const auto a = vqo::build_toy_ansatz(4);
  SamplingOracle o(h, 9);
  const double g = inst.gamma();
  std::uint64_t plus = 0;
  const int m = 100000;
  for (int i = 0; i < m; ++i) {
    const double y = o.query(a, inst.optimum(), {2});
    ASSERT_TRUE(std::abs(std::abs(y) - g) < 1e-12);
    plus += y > 0;
  }
  EXPECT_GT(stats::chi_square_p({plus, m - plus}, {0.5, 0.5}), 0.01);
}

TEST(SamplingOracle, IdentityObservableIsDeterministic) {
  const Ansatz a(2, "01", {ObservableSum::single(1.0, PauliString::from_letters("XY"))});
  const ObservableSum h = ObservableSum::single(0.75, PauliString::from_letters("II"));
  SamplingOracle o(h, 2);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(o.query(a, {1.3}, {}), 0.75);
}

TEST(SamplingOracle, Ledger) {
  const auto inst = vqo::random_instance(4, 0.04, 1);
  const auto h = vqo::toy_observable(inst);
  const auto a = vqo::build_toy_ansatz(4);
  SamplingOracle o(h, 3);
  EXPECT_EQ(o.query_count().total(), 0u);
  const ParamPoint theta(4, 0.1);
  for (int i = 0; i < 10; ++i) o.query(a, theta, {});
  for (int i = 0; i < 5; ++i) o.query(a, theta, {1});
  o.query(a, theta, {1, 2});
  o.query(a, theta, {1, 2, 3});
  const auto l = o.query_count();
  EXPECT_EQ(l.by_order[0], 10u);
  EXPECT_EQ(l.by_order[1], 5u);
  EXPECT_EQ(l.by_order[2], 1u);
  EXPECT_EQ(l.by_order[3], 1u);
  EXPECT_EQ(l.total(), 17u);
  EXPECT_THROW(o.query(a, theta, {0, 1, 2, 3}), vqo::UnsupportedOrderError);
  EXPECT_EQ(o.query_count().total(), 17u);
}

TEST(SamplingOracle, UnbiasedOnRandomModels) {
  vqo::CounterRng rng(43);
  const int m = 100000;
  for (int t = 0; t < 6; ++t) {
    const std::size_t n = 2 + rng.below(5);
    const std::size_t p = 2 + rng.below(3);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 2 + rng.below(4), rng);
    const auto theta = models::random_point(p, rng);
    SamplingOracle o(h, 100 + t);
    const std::vector<vqo::CoordinateSet> sets{{}, {rng.below(p)}, {rng.below(p), rng.below(p)}};
    for (const auto& s : sets) {
      const double c = o.normalization(a, s);
      const auto got = sample(o, a, theta, s, m);
      EXPECT_TRUE(got.bounded);
      EXPECT_LE(std::abs(got.mean - vqo::exact_query_mean(a, h, theta, s)), 4 * c / std::sqrt(m) + 1e-15)
          << "order " << s.size();
    }
    EXPECT_EQ(o.query_count().total(), 3u * m);
  }
}

TEST(SamplingOracle, TermSelectionFrequencies) {
  vqo::CounterRng rng(47);
  const auto a = models::random_ansatz(4, 3, rng);
  const auto h = models::random_observable(4, 5, rng);
  const ParamPoint theta = models::random_point(3, rng);
  for (const vqo::CoordinateSet& s : {vqo::CoordinateSet{}, vqo::CoordinateSet{2}, vqo::CoordinateSet{0, 2}}) {
    SamplingOracle o(h, 49);
    const auto& ex = o.expansion(a, s);
    if (ex.normalization == 0.0) continue;
    std::vector<double> prob;
    for (const auto& term : ex.terms) prob.push_back(std::abs(term.coefficient) / ex.normalization);
    std::vector<std::uint64_t> counts(ex.terms.size(), 0);
    for (int i = 0; i < 100000; ++i) {
      o.query(a, theta, s);
      ++counts[o.last_term()];
    }
    EXPECT_GT(stats::chi_square_p(counts, prob), 0.01);
  }
}

TEST(SamplingOracle, SeedsAreReproducible) {
  const auto inst = vqo::random_instance(4, 0.04, 1);
  const auto h = vqo::toy_observable(inst);
  const auto a = vqo::build_toy_ansatz(4);
  SamplingOracle x(h, 77);
  SamplingOracle y(h, 77);
  SamplingOracle z(h, 78);
  int differ = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const ParamPoint theta(4, 0.01 * i);
    const double a1 = x.query(a, theta, {i % 4});
    EXPECT_EQ(a1, y.query(a, theta, {i % 4}));
    differ += a1 != z.query(a, theta, {i % 4});
  }
  EXPECT_GT(differ, 0);
}
