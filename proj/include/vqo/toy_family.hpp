#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqo/ansatz.hpp"
#include "vqo/errors.hpp"
#include "vqo/pauli.hpp"
#include "vqo/rng.hpp"
#include "vqo/statevector.hpp"

namespace vqo {

/// One member H_v^delta of the toy family:
/// H = -sum_i [sin(pi/4 + v_i delta) X_i + cos(pi/4 + v_i delta) Z_i], delta = sqrt(45 eps / n).
struct ToyInstance {
  std::size_t n = 0;
  double eps = 0.0;
  double delta = 0.0;
  std::vector<int> v;
  std::uint64_t seed = 0;

  double normalization() const { return std::numbers::sqrt2 * static_cast<double>(n) * std::cos(delta); }
  double gamma() const { return std::numbers::sqrt2 * std::cos(delta); }
  double lambda2() const { return std::cos(2 * delta); }
  double lambda1() const { return lambda2() / static_cast<double>(n); }
  double ground_energy() const { return -static_cast<double>(n); }

  /// Optimum theta = delta v.
  ParamPoint optimum() const {
    ParamPoint t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = delta * v[i];
    return t;
  }
};

inline double toy_delta(std::size_t n, double eps) { return std::sqrt(45.0 * eps / static_cast<double>(n)); }

inline ToyInstance make_instance(std::size_t n, double eps, std::vector<int> v, std::uint64_t seed = 0) {
  if (n == 0) throw ConfigError("toy instance needs at least one qubit");
  if (!(eps > 0.0) || eps > 0.01 * static_cast<double>(n)) {
    throw ConfigError("eps must lie in (0, 0.01 n]; got " + std::to_string(eps) + " for n = " + std::to_string(n));
  }
  if (v.size() != n) throw SizeError("sign vector length does not match n");
  for (int s : v) {
    if (s != 1 && s != -1) throw ArgumentError("sign vector entries must be +1 or -1");
  }
  return ToyInstance{n, eps, toy_delta(n, eps), std::move(v), seed};
}

inline std::vector<int> random_signs(std::size_t n, CounterRng& rng) {
  std::vector<int> v(n);
  for (auto& s : v) s = rng.bernoulli(0.5) ? 1 : -1;
  return v;
}

/// Instance with v drawn from `seed`.
inline ToyInstance random_instance(std::size_t n, double eps, std::uint64_t seed) {
  CounterRng rng(seed, 0x7e57);
  return make_instance(n, eps, random_signs(n, rng), seed);
}

inline ObservableSum toy_observable(std::size_t n, double delta, const std::vector<int>& v) {
  if (v.size() != n) throw SizeError("sign vector length does not match n");
  std::vector<std::pair<double, PauliString>> terms;
  terms.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::numbers::pi / 4 + v[i] * delta;
    terms.emplace_back(-std::sin(a), PauliString::single(n, i, 'X'));
    terms.emplace_back(-std::cos(a), PauliString::single(n, i, 'Z'));
  }
  return ObservableSum(n, terms);
}

inline ObservableSum toy_observable(const ToyInstance& inst) { return toy_observable(inst.n, inst.delta, inst.v); }

inline std::pair<ToyInstance, ObservableSum> build_instance(std::size_t n, double eps, std::vector<int> v,
                                                            std::uint64_t seed = 0) {
  auto inst = make_instance(n, eps, std::move(v), seed);
  auto h = toy_observable(inst);
  return {std::move(inst), std::move(h)};
}

/// |theta> = prod_j exp(-i (theta_j + pi/4) Y_j / 2) |0...0>; the pi/4 rotations are fixed pulses.
inline Ansatz build_toy_ansatz(std::size_t n) {
  std::vector<ObservableSum> pulses;
  std::vector<FixedPulse> prefix;
  for (std::size_t j = 0; j < n; ++j) {
    const auto y = PauliString::single(n, j, 'Y');
    pulses.push_back(ObservableSum::single(1.0, y));
    prefix.push_back({ObservableSum::single(1.0, y), std::numbers::pi / 4});
  }
  return Ansatz(n, std::string(n, '0'), std::move(pulses), std::move(prefix));
}

/// f(theta) = -sum_i cos(theta_i - delta v_i).
inline double closed_form_objective(const ParamPoint& theta, const ToyInstance& inst) {
  if (theta.size() != inst.n) throw SizeError("parameter vector length does not match n");
  double f = 0.0;
  for (std::size_t i = 0; i < inst.n; ++i) f -= std::cos(theta[i] - inst.delta * inst.v[i]);
  return f;
}

inline std::vector<double> closed_form_gradient(const ParamPoint& theta, const ToyInstance& inst) {
  if (theta.size() != inst.n) throw SizeError("parameter vector length does not match n");
  std::vector<double> g(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) g[i] = std::sin(theta[i] - inst.delta * inst.v[i]);
  return g;
}

inline std::vector<double> closed_form_hessian_diag(const ParamPoint& theta, const ToyInstance& inst) {
  if (theta.size() != inst.n) throw SizeError("parameter vector length does not match n");
  std::vector<double> h(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) h[i] = std::cos(theta[i] - inst.delta * inst.v[i]);
  return h;
}

/// f(theta) - lambda_min.
inline double suboptimality(const ParamPoint& theta, const ToyInstance& inst) {
  return closed_form_objective(theta, inst) + static_cast<double>(inst.n);
}

/// True iff f(theta) - (-n) <= c eps.
inline bool vicinity_member(const ParamPoint& theta, const ToyInstance& inst, double c) {
  if (!(c > 0.0)) throw ArgumentError("vicinity factor must be positive");
  return suboptimality(theta, inst) <= c * inst.eps;
}

inline std::size_t hamming(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw SizeError("sign vectors have different lengths");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

/// d(v, v') = 2 Delta(v, v') (1 - cos delta).
inline double semimetric(const std::vector<int>& a, const std::vector<int>& b, double delta) {
  return 2.0 * static_cast<double>(hamming(a, b)) * (1.0 - std::cos(delta));
}

/// Sign vectors with pairwise Hamming distance at least ceil(n/4).
struct PackingSet {
  std::size_t n = 0;
  std::vector<std::vector<int>> vectors;
  std::size_t min_distance = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return vectors.size(); }

  /// Packing parameter beta = min over distinct pairs of d(v, v').
  double beta(double delta) const {
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      for (std::size_t j = i + 1; j < vectors.size(); ++j) b = std::min(b, semimetric(vectors[i], vectors[j], delta));
    }
    return b;
  }
};

inline std::size_t packing_target_size(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(std::exp(static_cast<double>(n) / 8.0)));
}

inline std::size_t packing_min_distance(std::size_t n) { return (n + 3) / 4; }

/// Greedy Gilbert-Varshamov packing: scan candidates in a seeded random order and keep
/// those at distance >= ceil(n/4) from everything kept so far, until ceil(e^{n/8}) are
/// found. Retries with derived seeds up to 10 times.
inline PackingSet gv_packing(std::size_t n, std::uint64_t seed) {
  if (n < 8) throw ArgumentError("packing construction requires n >= 8");
  if (n > 62) throw CapacityError("packing construction supports n <= 62");
  const std::size_t target = packing_target_size(n);
  const std::size_t dmin = packing_min_distance(n);
  const auto to_signs = [n](std::uint64_t bits) {
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = ((bits >> i) & 1ULL) ? -1 : 1;
    return v;
  };
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    CounterRng rng(seed, 0x9ac0 + attempt);
    std::vector<std::uint64_t> kept;
    const auto consider = [&](std::uint64_t c) {
      for (std::uint64_t k : kept) {
        if (static_cast<std::size_t>(std::popcount(k ^ c)) < dmin) return;
      }
      kept.push_back(c);
    };
    if (n <= 20) {
      std::vector<std::uint64_t> all(std::size_t{1} << n);
      std::iota(all.begin(), all.end(), std::uint64_t{0});
      rng.shuffle(all);
      for (std::uint64_t c : all) {
        consider(c);
        if (kept.size() >= target) break;
      }
    } else {
      const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
      for (std::size_t draw = 0; draw < 1'000'000 && kept.size() < target; ++draw) consider(rng() & mask);
    }
    if (kept.size() < target) continue;
    PackingSet out;
    out.n = n;
    out.seed = seed;
    out.min_distance = n;
    for (std::uint64_t k : kept) out.vectors.push_back(to_signs(k));
    for (std::size_t i = 0; i < kept.size(); ++i) {
      for (std::size_t j = i + 1; j < kept.size(); ++j) {
        out.min_distance = std::min<std::size_t>(out.min_distance, std::popcount(kept[i] ^ kept[j]));
      }
    }
    if (out.min_distance < dmin) throw NumericError("packing construction violated its distance invariant");
    return out;
  }
  throw NumericError("packing construction failed to reach " + std::to_string(target) + " vectors after 10 attempts");
}

/// argmin over V of <theta|H_{v'}|theta> for a toy-ansatz point; ties go to the lowest index.
struct Identification {
  std::size_t index = 0;
  bool tie = false;
};

inline Identification identify_from_energies(const std::vector<double>& energies) {
  Identification id;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (energies[i] < best) {
      best = energies[i];
      id.index = i;
      id.tie = false;
    } else if (energies[i] == best) {
      id.tie = true;
    }
  }
  return id;
}

inline Identification identify_v(const ParamPoint& theta, const PackingSet& set, double delta) {
  if (set.vectors.empty()) throw ArgumentError("identification needs a nonempty packing set");
  std::vector<double> energies;
  energies.reserve(set.size());
  for (const auto& v : set.vectors) {
    double e = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) e -= std::cos(theta[i] - delta * v[i]);
    energies.push_back(e);
  }
  return identify_from_energies(energies);
}

inline Identification identify_v(const StateVector& state, const PackingSet& set, double delta) {
  if (set.vectors.empty()) throw ArgumentError("identification needs a nonempty packing set");
  std::vector<double> energies;
  energies.reserve(set.size());
  for (const auto& v : set.vectors) energies.push_back(state.expectation(toy_observable(set.n, delta, v)));
  return identify_from_energies(energies);
}

/// Zeroth-order oracle output described as a coin flip: pick qubit i uniformly, measure
/// -X_i with probability (1 + v_i tan delta)/2 and -Z_i otherwise, scale by E.
struct CoinflipSample {
  std::size_t qubit = 0;
  bool heads = false;
  double value = 0.0;
};

inline CoinflipSample coinflip_sample(const ToyInstance& inst, const ParamPoint& theta, CounterRng& rng) {
  if (theta.size() != inst.n) throw SizeError("parameter vector length does not match n");
  CoinflipSample s;
  s.qubit = rng.below(inst.n);
  s.heads = rng.bernoulli(0.5 * (1.0 + inst.v[s.qubit] * std::tan(inst.delta)));
  // Bloch vector of qubit i is (sin(pi/4 + theta_i), 0, cos(pi/4 + theta_i)).
  const double a = std::numbers::pi / 4 + theta[s.qubit];
  const double m = s.heads ? -std::sin(a) : -std::cos(a);
  s.value = inst.normalization() * (rng.bernoulli(0.5 * (1.0 + m)) ? 1.0 : -1.0);
  return s;
}

inline double coinflip_query(const ToyInstance& inst, const ParamPoint& theta, CounterRng& rng) {
  return coinflip_sample(inst, theta, rng).value;
}

inline double coinflip_heads_probability(const ToyInstance& inst, std::size_t i) {
  return 0.5 * (1.0 + inst.v.at(i) * std::tan(inst.delta));
}

inline nlohmann::json to_json(const ToyInstance& inst) {
  return nlohmann::json{{"n", inst.n}, {"eps", inst.eps}, {"delta", inst.delta}, {"v", inst.v}, {"seed", inst.seed}};
}

inline ToyInstance instance_from_json(const nlohmann::json& j) {
  try {
    auto inst = make_instance(j.at("n").get<std::size_t>(), j.at("eps").get<double>(), j.at("v").get<std::vector<int>>(),
                              j.value("seed", std::uint64_t{0}));
    if (j.contains("delta") && std::abs(j.at("delta").get<double>() - inst.delta) > 1e-12) {
      throw ConfigError("instance delta does not match sqrt(45 eps / n)");
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed instance JSON: ") + e.what());
  }
}

}  // namespace vqo
