#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dense_oracle.hpp"
#include "random_models.hpp"
#include "vqo/ansatz.hpp"
#include "vqo/sampling_oracle.hpp"
#include "vqo/toy_family.hpp"

using vqo::Ansatz;
using vqo::ObservableSum;
using vqo::ParamPoint;
using vqo::PauliString;

namespace {

oracle::Mat dense(const ObservableSum& h) {
  const std::size_t n = h.num_qubits();
  oracle::Mat m = oracle::Mat::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  for (const auto& t : h.terms()) m += t.coefficient * oracle::pauli(t.string.letters(), vqo::phase_value(t.string.phase()));
  return m;
}

// Independent dense model of an ansatz: state, objective and nested commutators.
struct DenseModel {
  const Ansatz& ansatz;
  const ObservableSum& h;

  oracle::Mat pulse(std::size_t j, double t) const { return oracle::expi(dense(ansatz.pulse(j)), t); }

  Eigen::VectorXcd state(const ParamPoint& theta) const {
    Eigen::VectorXcd psi = oracle::basis(ansatz.start());
    for (const auto& f : ansatz.prefix()) psi = oracle::expi(dense(f.generator), f.angle) * psi;
    for (std::size_t j = 0; j < theta.size(); ++j) psi = pulse(j, theta[j]) * psi;
    return psi;
  }

  double f(const ParamPoint& theta) const {
    const auto psi = state(theta);
    return (psi.adjoint() * dense(h) * psi)(0, 0).real();
  }

  // A~_j = U_{(j+1):p} A_j U_{(j+1):p}^dagger.
  oracle::Mat conjugated(std::size_t j, const ParamPoint& theta) const {
    const auto dim = Eigen::Index{1} << ansatz.num_qubits();
    oracle::Mat u = oracle::Mat::Identity(dim, dim);
    for (std::size_t k = j + 1; k < theta.size(); ++k) u = pulse(k, theta[k]) * u;
    return u * dense(ansatz.pulse(j)) * u.adjoint();
  }

  // (i/2)^r <[A~_{s1}, [A~_{s2}, ... H]]> with s sorted ascending.
  double derivative(std::vector<std::size_t> s, const ParamPoint& theta) const {
    std::sort(s.begin(), s.end());
    oracle::Mat op = dense(h);
    for (std::size_t pos = s.size(); pos-- > 0;) {
      const oracle::Mat a = conjugated(s[pos], theta);
      op = oracle::C(0, 0.5) * (a * op - op * a);
    }
    const auto psi = state(theta);
    return (psi.adjoint() * op * psi)(0, 0).real();
  }
};

}  // namespace

TEST(Ansatz, ToyPreparationAtZero) {
  const auto a = vqo::build_toy_ansatz(3);
  const auto s = vqo::prepare(a, {0.0, 0.0, 0.0});
  // Product of cos(pi/8)|0> + sin(pi/8)|1>.
  const double c = std::cos(std::numbers::pi / 8);
  const double sn = std::sin(std::numbers::pi / 8);
  EXPECT_NEAR(s.amplitude(0).real(), c * c * c, 1e-14);
  EXPECT_NEAR(s.amplitude(7).real(), sn * sn * sn, 1e-14);
  EXPECT_NEAR(s.amplitude(5).real(), sn * c * sn, 1e-14);
}

TEST(Ansatz, ToyGroundStateAtOptimum) {
  const auto [inst, h] = vqo::build_instance(4, 0.04, {1, -1, -1, 1});
  const auto a = vqo::build_toy_ansatz(4);
  EXPECT_NEAR(vqo::expectation(vqo::prepare(a, inst.optimum()), h), -4.0, 1e-12);
}

TEST(Ansatz, SinglePulseAtZeroLeavesStartState) {
  const Ansatz a(2, "10", {ObservableSum::single(1.0, PauliString::from_letters("XY"))});
  const auto s = vqo::prepare(a, {0.0});
  EXPECT_EQ(s.amplitude(2), vqo::Complex(1.0));
  EXPECT_THROW(vqo::prepare(a, {0.0, 1.0}), vqo::SizeError);
}

TEST(Ansatz, ToyExactQueryMeans) {
  const std::vector<int> v{1, -1, 1, -1};
  const auto [inst, h] = vqo::build_instance(4, 0.04, v);
  EXPECT_NEAR(inst.delta, 0.67082, 1e-5);
  const auto a = vqo::build_toy_ansatz(4);
  const ParamPoint zero(4, 0.0);
  const double f0 = vqo::exact_query_mean(a, h, zero, {});
  EXPECT_NEAR(f0, -4 * std::cos(inst.delta), 1e-12);
  EXPECT_NEAR(f0, -3.1332, 1e-4);
  for (std::size_t i = 0; i < 4; ++i) {
    const double g = vqo::exact_query_mean(a, h, zero, {i});
    EXPECT_NEAR(g, -v[i] * std::sin(inst.delta), 1e-12);
    EXPECT_NEAR(g, -0.621 * v[i], 1e-3);
    EXPECT_NEAR(vqo::exact_query_mean(a, h, inst.optimum(), {i, i}), 1.0, 1e-12);
  }
  EXPECT_NEAR(vqo::exact_query_mean(a, h, inst.optimum(), {0, 1}), 0.0, 1e-12);
  EXPECT_THROW(vqo::exact_query_mean(a, h, zero, {0, 1, 2, 3}), vqo::UnsupportedOrderError);
  EXPECT_THROW(vqo::exact_query_mean(a, h, zero, {9}), vqo::ArgumentError);
}

TEST(Ansatz, LightconeSupport) {
  const auto toy = vqo::build_toy_ansatz(4);
  EXPECT_EQ(vqo::lightcone_support(toy, 1, PauliString::single(4, 1, 'Y')), (std::vector<std::size_t>{1}));
  const Ansatz chain(2, "00", {ObservableSum::single(1.0, PauliString::from_letters("YI")),
                               ObservableSum::single(1.0, PauliString::from_letters("XX"))});
  EXPECT_EQ(vqo::lightcone_support(chain, 0, PauliString::from_letters("YI")), (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(vqo::lightcone_support(chain, 0, PauliString::from_letters("II")).empty());
}

TEST(Ansatz, LightconeMatchesSymbolicConjugation) {
  // Y_0 conjugated by exp(-i XX t/2) is cos t Y_0 + sin t Z_0 X_1, which acts on both qubits.
  const Ansatz chain(2, "00", {ObservableSum::single(1.0, PauliString::from_letters("YI")),
                               ObservableSum::single(1.0, PauliString::from_letters("XX"))});
  const double t = 0.7;
  const oracle::Mat u = oracle::expi(oracle::pauli("XX"), t);
  const oracle::Mat conj = u * oracle::pauli("YI") * u.adjoint();
  const oracle::Mat want = std::cos(t) * oracle::pauli("YI") + std::sin(t) * oracle::pauli("ZX");
  EXPECT_LE((conj - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ansatz, TextRoundTrip) {
  const auto text = "2 2 start=01\nfixed 0.5 1 XI\n0.5 YI 0.25 -ZZ\n1 IX\n";
  const auto a = Ansatz::parse(text);
  EXPECT_EQ(a.num_qubits(), 2u);
  EXPECT_EQ(a.num_params(), 2u);
  EXPECT_EQ(a.start(), "01");
  ASSERT_EQ(a.prefix().size(), 1u);
  EXPECT_EQ(a.pulse(0).size(), 2u);
  const auto b = Ansatz::parse(a.to_text());
  EXPECT_EQ(b.to_text(), a.to_text());
  EXPECT_THROW(Ansatz::parse("2 3 start=01\n1 XI\n"), vqo::ParseError);
  EXPECT_THROW(Ansatz::parse("1 XI\n"), vqo::ParseError);
}

TEST(Ansatz, ExactMeansMatchDenseModel) {
  vqo::CounterRng rng(21);
  for (int t = 0; t < 25; ++t) {
    const std::size_t n = 2 + rng.below(3);
    const std::size_t p = 2 + rng.below(3);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 2 + rng.below(4), rng);
    const auto theta = models::random_point(p, rng);
    const DenseModel model{a, h};
    EXPECT_NEAR(vqo::exact_query_mean(a, h, theta, {}), model.f(theta), 1e-11);
    for (std::size_t j = 0; j < p; ++j) {
      EXPECT_NEAR(vqo::exact_query_mean(a, h, theta, {j}), model.derivative({j}, theta), 1e-11);
    }
    const std::size_t k = rng.below(p);
    const std::size_t j = rng.below(p);
    const std::size_t l = rng.below(p);
    EXPECT_NEAR(vqo::exact_query_mean(a, h, theta, {k, j}), model.derivative({k, j}, theta), 1e-11);
    EXPECT_NEAR(vqo::exact_query_mean(a, h, theta, {k, j, l}), model.derivative({k, j, l}, theta), 1e-11);
  }
}

TEST(Ansatz, FirstDerivativeMatchesFiniteDifference) {
  vqo::CounterRng rng(23);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.below(5);
    const std::size_t p = 1 + rng.below(5);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 1 + rng.below(5), rng);
    const auto theta = models::random_point(p, rng);
    const double hstep = 1e-4;
    for (std::size_t j = 0; j < p; ++j) {
      auto up = theta;
      auto down = theta;
      up[j] += hstep;
      down[j] -= hstep;
      const double fd = (vqo::objective(a, h, up) - vqo::objective(a, h, down)) / (2 * hstep);
      const double exact = vqo::exact_query_mean(a, h, theta, {j});
      EXPECT_LE(std::abs(fd - exact), std::max(1e-7, 1e-6 * std::abs(exact)));
    }
  }
}

TEST(Ansatz, SecondAndThirdDerivativesMatchFiniteDifference) {
  vqo::CounterRng rng(25);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 2 + rng.below(3);
    const std::size_t p = 2 + rng.below(3);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 3, rng);
    const auto theta = models::random_point(p, rng);
    const std::size_t k = rng.below(p);
    const std::size_t j = rng.below(p);
    const std::size_t l = rng.below(p);
    const double hstep = 1e-4;
    auto up = theta;
    auto down = theta;
    up[k] += hstep;
    down[k] -= hstep;
    const double fd2 = (vqo::exact_query_mean(a, h, up, {j}) - vqo::exact_query_mean(a, h, down, {j})) / (2 * hstep);
    EXPECT_NEAR(vqo::exact_query_mean(a, h, theta, {k, j}), fd2, 1e-7);
    const double fd3 =
        (vqo::exact_query_mean(a, h, up, {j, l}) - vqo::exact_query_mean(a, h, down, {j, l})) / (2 * hstep);
    EXPECT_NEAR(vqo::exact_query_mean(a, h, theta, {k, j, l}), fd3, 1e-7);
  }
}

TEST(Ansatz, HessianIsSymmetric) {
  vqo::CounterRng rng(27);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.below(4);
    const std::size_t p = 2 + rng.below(3);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 3, rng);
    const auto theta = models::random_point(p, rng);
    const std::size_t k = rng.below(p);
    const std::size_t j = rng.below(p);
    EXPECT_NEAR(vqo::exact_query_mean(a, h, theta, {k, j}), vqo::exact_query_mean(a, h, theta, {j, k}), 1e-10);
  }
}

TEST(Ansatz, GradientBoundedByGamma) {
  vqo::CounterRng rng(29);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.below(5);
    const std::size_t p = 1 + rng.below(5);
    const auto a = models::random_ansatz(n, p, rng);
    const auto h = models::random_observable(n, 1 + rng.below(5), rng);
    const auto gamma = vqo::build_gamma(a, h);
    for (int s = 0; s < 5; ++s) {
      const auto theta = models::random_point(p, rng);
      for (std::size_t j = 0; j < p; ++j) {
        EXPECT_LE(std::abs(vqo::exact_query_mean(a, h, theta, {j})), gamma.gamma(j) + 1e-12);
      }
    }
  }
}

TEST(Ansatz, PrunedCommutatorsVanish) {
  vqo::CounterRng rng(31);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 3 + rng.below(4);
    const std::size_t p = 1 + rng.below(4);
    const auto a = models::random_ansatz(n, p, rng, 1);
    const auto h = models::random_observable(n, 3, rng, 2);
    const auto theta = models::random_point(p, rng);
    const auto gamma = vqo::build_gamma(a, h);
    const DenseModel model{a, h};
    for (std::size_t j = 0; j < p; ++j) {
      for (const auto& e : gamma.entries[j]) {
        if (e.gamma != 0.0) continue;
        // <(i/2)[Q~_k, P_l]> with Q~ conjugated by the later pulses.
        const ObservableSum q = ObservableSum::single(1.0, a.pulse(j)[e.k].string);
        const ObservableSum pl = ObservableSum::single(1.0, h[e.l].string);
        const auto dim = Eigen::Index{1} << n;
        oracle::Mat u = oracle::Mat::Identity(dim, dim);
        for (std::size_t k = j + 1; k < p; ++k) u = model.pulse(k, theta[k]) * u;
        const oracle::Mat qt = u * dense(q) * u.adjoint();
        const oracle::Mat comm = qt * dense(pl) - dense(pl) * qt;
        const auto psi = model.state(theta);
        EXPECT_LE(std::abs((psi.adjoint() * comm * psi)(0, 0)), 1e-12);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}
