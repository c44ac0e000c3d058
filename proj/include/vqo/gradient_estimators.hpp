#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "vqo/ansatz.hpp"
#include "vqo/rng.hpp"
#include "vqo/sampling_oracle.hpp"

namespace vqo {

struct GradientSample {
  std::vector<double> vector;
  std::uint64_t queries_used = 0;
};

/// Any stochastic gradient: oracle-backed estimators, exact gradients, synthetic noise.
using GradientSource = std::function<GradientSample(const ParamPoint&)>;

/// One zeroth-order sample of f per call.
using ValueSource = std::function<double(const ParamPoint&)>;

/// Pick j with probability Gamma_j / |Gamma|_1, query {j} once and rescale so the
/// output is +-|Gamma|_1 e_j.
inline GradientSample estimate_grad_l1(SamplingOracle& o, const Ansatz& ansatz, const ParamPoint& theta) {
  const auto& g = o.gamma(ansatz);
  GradientSample out{std::vector<double>(ansatz.num_params(), 0.0), 0};
  const double l1 = g.l1();
  if (l1 == 0.0) return out;
  const std::size_t j = DiscreteSampler(g.gamma_sums).sample(o.rng());
  const double y = o.query(ansatz, theta, {j});
  out.vector[j] = y * l1 / g.gamma(j);
  out.queries_used = 1;
  return out;
}

/// N_j = ceil(p Gamma_j^2 / |Gamma|_2^2 * ln(4 p^2 |Gamma|_inf^2 / |Gamma|_2^2)).
inline std::vector<std::uint64_t> l2_sample_counts(const GammaTable& g) {
  const std::size_t p = g.size();
  std::vector<std::uint64_t> n(p, 0);
  const double l2sq = g.l2() * g.l2();
  if (l2sq == 0.0) return n;
  const double pd = static_cast<double>(p);
  const double log_term = std::log(4.0 * pd * pd * g.linf() * g.linf() / l2sq);
  for (std::size_t j = 0; j < p; ++j) {
    const double gj = g.gamma(j);
    n[j] = static_cast<std::uint64_t>(std::ceil(pd * gj * gj / l2sq * log_term));
  }
  return n;
}

/// p [1 + ln(4 p^2 |Gamma|_inf^2 / |Gamma|_2^2)], the per-estimate query ceiling.
inline double l2_query_bound(const GammaTable& g) {
  const double pd = static_cast<double>(g.size());
  const double l2sq = g.l2() * g.l2();
  if (l2sq == 0.0) return 0.0;
  return pd * (1.0 + std::log(4.0 * pd * pd * g.linf() * g.linf() / l2sq));
}

/// Per-coordinate averages of N_j first-order queries.
inline GradientSample estimate_grad_l2(SamplingOracle& o, const Ansatz& ansatz, const ParamPoint& theta) {
  const auto& g = o.gamma(ansatz);
  const auto counts = l2_sample_counts(g);
  GradientSample out{std::vector<double>(ansatz.num_params(), 0.0), 0};
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) continue;
    double acc = 0.0;
    for (std::uint64_t k = 0; k < counts[j]; ++k) acc += o.query(ansatz, theta, {j});
    out.vector[j] = acc / static_cast<double>(counts[j]);
    out.queries_used += counts[j];
  }
  return out;
}

inline GradientSource l1_source(SamplingOracle& o, const Ansatz& ansatz) {
  return [&o, &ansatz](const ParamPoint& x) { return estimate_grad_l1(o, ansatz, x); };
}

inline GradientSource l2_source(SamplingOracle& o, const Ansatz& ansatz) {
  return [&o, &ansatz](const ParamPoint& x) { return estimate_grad_l2(o, ansatz, x); };
}

inline ValueSource value_source(SamplingOracle& o, const Ansatz& ansatz) {
  return [&o, &ansatz](const ParamPoint& x) { return o.query(ansatz, x, {}); };
}

/// Noise-free gradient; reports zero queries.
inline GradientSource exact_source(std::function<std::vector<double>(const ParamPoint&)> grad) {
  return [grad = std::move(grad)](const ParamPoint& x) { return GradientSample{grad(x), 0}; };
}

}  // namespace vqo
