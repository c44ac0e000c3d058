#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <vector>

#include "vqo/ansatz.hpp"
#include "vqo/errors.hpp"
#include "vqo/pauli.hpp"
#include "vqo/rng.hpp"
#include "vqo/statevector.hpp"

namespace vqo {

/// First-order importance-sampling weights gamma^{(j)}_{kl} for every pulse j.
struct GammaTable {
  struct Entry {
    std::size_t k;
    std::size_t l;
    double gamma;
  };
  std::vector<std::vector<Entry>> entries;  // entries[j], every (k, l) pair including pruned zeros
  std::vector<double> gamma_sums;           // Gamma_j
  std::vector<double> generator_sums;       // B_j
  double normalization = 0.0;               // E

  std::size_t size() const { return gamma_sums.size(); }
  double gamma(std::size_t j) const { return gamma_sums.at(j); }

  /// q^{(j)}_{kl} in entry order; all zeros when Gamma_j = 0.
  std::vector<double> distribution(std::size_t j) const {
    std::vector<double> q;
    q.reserve(entries.at(j).size());
    for (const auto& e : entries[j]) q.push_back(gamma_sums[j] > 0.0 ? e.gamma / gamma_sums[j] : 0.0);
    return q;
  }

  double l1() const { return std::accumulate(gamma_sums.begin(), gamma_sums.end(), 0.0); }
  double l2() const {
    double acc = 0.0;
    for (double g : gamma_sums) acc += g * g;
    return std::sqrt(acc);
  }
  double linf() const {
    double m = 0.0;
    for (double g : gamma_sums) m = std::max(m, g);
    return m;
  }
};

inline GammaTable build_gamma(const Ansatz& ansatz, const ObservableSum& h) {
  if (h.num_qubits() != ansatz.num_qubits()) throw SizeError("observable qubit count does not match the ansatz");
  GammaTable t;
  t.normalization = h.normalization();
  const std::size_t p = ansatz.num_params();
  t.entries.resize(p);
  t.gamma_sums.assign(p, 0.0);
  t.generator_sums.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const auto& a = ansatz.pulse(j);
    for (std::size_t k = 0; k < a.size(); ++k) {
      t.generator_sums[j] += a[k].coefficient;
      const std::uint64_t cone = lightcone_mask(ansatz, j, a[k].string.support_mask());
      for (std::size_t l = 0; l < h.size(); ++l) {
        const bool touches = (cone & h[l].string.support_mask()) != 0;
        const double g = touches ? a[k].coefficient * h[l].coefficient : 0.0;
        t.entries[j].push_back({k, l, g});
        t.gamma_sums[j] += g;
      }
    }
  }
  return t;
}

/// Query counts by derivative order (index = |S|).
struct QueryLedger {
  std::array<std::uint64_t, kMaxDerivativeOrder + 1> by_order{};

  std::uint64_t zeroth() const { return by_order[0]; }
  std::uint64_t first() const { return by_order[1]; }
  std::uint64_t higher() const {
    std::uint64_t acc = 0;
    for (std::size_t r = 2; r < by_order.size(); ++r) acc += by_order[r];
    return acc;
  }
  std::uint64_t total() const { return std::accumulate(by_order.begin(), by_order.end(), std::uint64_t{0}); }

  friend bool operator==(const QueryLedger&, const QueryLedger&) = default;
};

/// The black box O_H. Each query returns one +-C valued sample whose mean is the exact
/// query value (f, a partial derivative, or a mixed partial up to order 3).
///
/// Expansions and compiled term circuits are cached per (ansatz, S). Exact term values
/// are memoized while successive queries share the same theta, so repeated sampling at a
/// fixed point costs one Bernoulli draw per query.
class SamplingOracle {
 public:
  SamplingOracle(ObservableSum h, std::uint64_t seed, std::uint64_t stream = 0)
      : h_(std::move(h)), rng_(seed, stream) {}

  const ObservableSum& observable() const { return h_; }
  const QueryLedger& ledger() const { return ledger_; }
  QueryLedger query_count() const { return ledger_; }
  CounterRng& rng() { return rng_; }

  /// Index (into the expansion for S) of the term sampled by the most recent query.
  std::size_t last_term() const { return last_term_; }

  double query(const Ansatz& ansatz, const ParamPoint& theta, const CoordinateSet& s) {
    ansatz.check_point(theta);
    auto& table = compiled(ansatz, s);
    ++ledger_.by_order[s.size()];
    if (table.expansion.normalization == 0.0) return 0.0;
    const std::size_t t = table.sampler.sample(rng_);
    last_term_ = t;
    const double m = table.value(ansatz, h_, theta, t, scratch_);
    const double outcome = rng_.bernoulli(0.5 * (1.0 + m)) ? 1.0 : -1.0;
    const double c = table.expansion.terms[t].coefficient;
    return (c > 0.0 ? 1.0 : -1.0) * table.expansion.normalization * outcome;
  }

  /// C for this S: E, Gamma_j or Z_S.
  double normalization(const Ansatz& ansatz, const CoordinateSet& s) { return compiled(ansatz, s).expansion.normalization; }

  const DerivativeExpansion& expansion(const Ansatz& ansatz, const CoordinateSet& s) {
    return compiled(ansatz, s).expansion;
  }

  const GammaTable& gamma(const Ansatz& ansatz) {
    auto it = gammas_.find(ansatz.id());
    if (it == gammas_.end()) it = gammas_.emplace(ansatz.id(), build_gamma(ansatz, h_)).first;
    return it->second;
  }

 private:
  struct Key {
    std::uint64_t ansatz;
    std::size_t order;
    std::array<std::size_t, kMaxDerivativeOrder> coords;
    friend auto operator<=>(const Key&, const Key&) = default;
  };

  struct Compiled {
    DerivativeExpansion expansion;
    DiscreteSampler sampler;
    std::vector<std::unique_ptr<TermCircuit>> circuits;
    ParamPoint memo_theta;
    std::vector<double> memo_value;
    std::vector<std::uint64_t> memo_stamp;
    std::uint64_t stamp = 1;

    double value(const Ansatz& ansatz, const ObservableSum& h, const ParamPoint& theta, std::size_t t,
                 StateVector& scratch) {
      if (theta != memo_theta) {
        memo_theta = theta;
        ++stamp;
      }
      if (memo_stamp[t] == stamp) return memo_value[t];
      if (!circuits[t]) circuits[t] = std::make_unique<TermCircuit>(ansatz, h, expansion.terms[t].spec);
      const double v = circuits[t]->evaluate(theta, scratch);
      memo_value[t] = v;
      memo_stamp[t] = stamp;
      return v;
    }
  };

  Compiled& compiled(const Ansatz& ansatz, const CoordinateSet& s) {
    if (s.size() > kMaxDerivativeOrder) {
      throw UnsupportedOrderError("derivative order " + std::to_string(s.size()) + " exceeds the supported maximum of 3");
    }
    Key key{ansatz.id(), s.size(), {}};
    std::copy(s.begin(), s.end(), key.coords.begin());
    std::sort(key.coords.begin(), key.coords.begin() + static_cast<std::ptrdiff_t>(s.size()));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Compiled c;
    c.expansion = expand_derivative(ansatz, h_, s);
    std::vector<double> weights;
    weights.reserve(c.expansion.terms.size());
    for (const auto& t : c.expansion.terms) weights.push_back(std::abs(t.coefficient));
    c.sampler = DiscreteSampler(weights);
    c.circuits.resize(c.expansion.terms.size());
    c.memo_value.assign(c.expansion.terms.size(), 0.0);
    c.memo_stamp.assign(c.expansion.terms.size(), 0);
    return cache_.emplace(key, std::move(c)).first->second;
  }

  ObservableSum h_;
  CounterRng rng_;
  QueryLedger ledger_;
  std::size_t last_term_ = 0;
  StateVector scratch_;
  std::map<Key, Compiled> cache_;
  std::map<std::uint64_t, GammaTable> gammas_;
};

}  // namespace vqo
