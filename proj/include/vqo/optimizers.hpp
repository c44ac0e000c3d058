#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "vqo/errors.hpp"
#include "vqo/feasible.hpp"
#include "vqo/gradient_estimators.hpp"
#include "vqo/mirror.hpp"
#include "vqo/rng.hpp"

namespace vqo {

enum class Method { sgd, sgd_sc, smd, smd_sc, zo };

inline Method parse_method(std::string_view s) {
  if (s == "sgd") return Method::sgd;
  if (s == "sgd-sc") return Method::sgd_sc;
  if (s == "smd") return Method::smd;
  if (s == "smd-sc") return Method::smd_sc;
  if (s == "zo") return Method::zo;
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

inline std::string method_name(Method m) {
  switch (m) {
    case Method::sgd: return "sgd";
    case Method::sgd_sc: return "sgd-sc";
    case Method::smd: return "smd";
    case Method::smd_sc: return "smd-sc";
    default: return "zo";
  }
}

inline bool is_first_order(Method m) { return m != Method::zo; }
inline bool is_strongly_convex(Method m) { return m == Method::sgd_sc || m == Method::smd_sc; }

/// Budgets, geometry and norm bounds. Zero-valued radii are filled from the feasible set.
struct OptimizerConfig {
  Method method = Method::sgd;
  std::uint64_t T = 0;  // iterations
  double R2 = 0.0;
  double R1 = 0.0;
  double r2 = 0.0;
  double lambda2 = 0.0;
  double lambda1 = 0.0;
  double G2 = 0.0;
  double Ginf = 0.0;
  double E = 0.0;
  double L = 0.0;  // Euclidean Lipschitz constant, zeroth-order schedule only
  std::uint64_t seed = 0;

  // Zeroth-order schedule: delta_s = zo_delta_scale * r2 * T^{-1/4} and
  // eta = zo_eta_scale * R2 delta_s / (p E sqrt T). Scales <= 0 select 6 and 1.
  double zo_delta_scale = 0.0;
  double zo_eta_scale = 0.0;

  // First epoch length for smd-sc; 0 selects 32 e ln p Ginf^2 / (lambda1 R1)^2.
  std::uint64_t epoch0 = 0;

  bool record_iterates = false;
  std::function<double(const ParamPoint&)> error;  // optional exact suboptimality

  void validate() const {
    if (T == 0 && method != Method::smd_sc) throw ConfigError("iteration budget T must be positive");
    if (R2 < 0 || R1 < 0 || r2 < 0) throw ConfigError("radii must be positive");
    if (method == Method::sgd_sc && !(lambda2 > 0.0)) throw ConfigError("sgd-sc needs lambda2 > 0");
    if (method == Method::smd_sc && !(lambda1 > 0.0)) throw ConfigError("smd-sc needs lambda1 > 0");
    if (!is_strongly_convex(method) && (lambda1 != 0.0 || lambda2 != 0.0)) {
      throw ConfigError("strong-convexity parameters are only accepted by -sc methods");
    }
    if (method == Method::sgd && !(G2 > 0.0)) throw ConfigError("sgd needs G2 > 0");
    if ((method == Method::smd || method == Method::smd_sc) && !(Ginf > 0.0)) throw ConfigError("smd needs Ginf > 0");
    if (method == Method::zo && !(E > 0.0)) throw ConfigError("zo needs E > 0");
  }
};

struct RunTrace {
  std::vector<ParamPoint> iterates;  // only when record_iterates
  ParamPoint output;
  std::uint64_t iterations = 0;
  std::uint64_t queries = 0;
  std::uint64_t epochs = 0;
  bool start_projected = false;
  double max_infeasibility = 0.0;
  double final_error = std::numeric_limits<double>::quiet_NaN();
  // Running means of |g|_2^2 and |g|_inf^2 over all gradient estimates used.
  double mean_g2_sq = 0.0;
  double mean_ginf_sq = 0.0;
};

namespace detail {

inline double distance_outside(const FeasibleSet& x, const ParamPoint& p) {
  const auto q = x.project(p);
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d = std::max(d, std::abs(p[i] - q[i]));
  return d;
}

struct Recorder {
  const OptimizerConfig& cfg;
  const FeasibleSet& x;
  RunTrace& trace;
  double g_count = 0.0;

  void visit(const ParamPoint& p) {
    trace.max_infeasibility = std::max(trace.max_infeasibility, distance_outside(x, p));
    if (cfg.record_iterates) trace.iterates.push_back(p);
    ++trace.iterations;
  }
  void gradient(const GradientSample& g) {
    double s2 = 0.0;
    double si = 0.0;
    for (double v : g.vector) {
      s2 += v * v;
      si = std::max(si, v * v);
    }
    ++g_count;
    trace.mean_g2_sq += (s2 - trace.mean_g2_sq) / g_count;
    trace.mean_ginf_sq += (si - trace.mean_ginf_sq) / g_count;
    trace.queries += g.queries_used;
  }
  void finish() {
    if (cfg.error) trace.final_error = cfg.error(trace.output);
  }
};

inline ParamPoint feasible_start(const FeasibleSet& x, const ParamPoint& x1, RunTrace& trace) {
  if (x.contains(x1)) return x1;
  trace.start_projected = true;
  return x.project(x1);
}

inline void check_dim(const FeasibleSet& x, const ParamPoint& p) {
  if (p.size() != x.dimension()) throw SizeError("start point dimension does not match the feasible set");
}

}  // namespace detail

/// Projected SGD, eta = (R2 / G2) sqrt(2 / T), uniform iterate average.
inline RunTrace sgd_fixed(const GradientSource& source, const FeasibleSet& x, const ParamPoint& x1, OptimizerConfig cfg) {
  cfg.method = Method::sgd;
  if (cfg.R2 == 0.0) cfg.R2 = x.r2_outer();
  cfg.validate();
  detail::check_dim(x, x1);
  RunTrace trace;
  detail::Recorder rec{cfg, x, trace};
  ParamPoint cur = detail::feasible_start(x, x1, trace);
  const double eta = cfg.R2 / cfg.G2 * std::sqrt(2.0 / static_cast<double>(cfg.T));
  ParamPoint avg(cur.size(), 0.0);
  for (std::uint64_t s = 1; s <= cfg.T; ++s) {
    rec.visit(cur);
    for (std::size_t i = 0; i < cur.size(); ++i) avg[i] += cur[i];
    const auto g = source(cur);
    rec.gradient(g);
    for (std::size_t i = 0; i < cur.size(); ++i) cur[i] -= eta * g.vector[i];
    cur = x.project(cur);
  }
  for (auto& v : avg) v /= static_cast<double>(cfg.T);
  trace.output = std::move(avg);
  rec.finish();
  return trace;
}

/// Projected SGD, eta_s = 2 / (lambda2 (s + 1)), weights 2s / (T (T + 1)).
inline RunTrace sgd_strongly_convex(const GradientSource& source, const FeasibleSet& x, const ParamPoint& x1,
                                    OptimizerConfig cfg) {
  cfg.method = Method::sgd_sc;
  cfg.validate();
  detail::check_dim(x, x1);
  RunTrace trace;
  detail::Recorder rec{cfg, x, trace};
  ParamPoint cur = detail::feasible_start(x, x1, trace);
  const double t = static_cast<double>(cfg.T);
  ParamPoint avg(cur.size(), 0.0);
  for (std::uint64_t s = 1; s <= cfg.T; ++s) {
    rec.visit(cur);
    const double w = 2.0 * static_cast<double>(s) / (t * (t + 1.0));
    for (std::size_t i = 0; i < cur.size(); ++i) avg[i] += w * cur[i];
    const auto g = source(cur);
    rec.gradient(g);
    const double eta = 2.0 / (cfg.lambda2 * (static_cast<double>(s) + 1.0));
    for (std::size_t i = 0; i < cur.size(); ++i) cur[i] -= eta * g.vector[i];
    cur = x.project(cur);
  }
  trace.output = std::move(avg);
  rec.finish();
  return trace;
}

namespace detail {

// Plain SMD on the 1-ball of radius `radius` around `center`, intersected with the box
// X when X is an inf-box. Works in u = (x - center) / radius; returns the iterate average.
inline ParamPoint smd_epoch(const GradientSource& source, const FeasibleSet& x, const ParamPoint& center, double radius,
                            std::uint64_t steps, double ginf, Recorder& rec) {
  const std::size_t p = x.dimension();
  const MirrorSetup m(p);
  std::vector<double> lo(p, -std::numeric_limits<double>::infinity());
  std::vector<double> hi(p, std::numeric_limits<double>::infinity());
  double l1 = 1.0;
  if (x.kind() == FeasibleSet::Kind::inf_box) {
    for (std::size_t i = 0; i < p; ++i) {
      lo[i] = std::min(0.0, (x.center()[i] - x.radius() - center[i]) / radius);
      hi[i] = std::max(0.0, (x.center()[i] + x.radius() - center[i]) / radius);
    }
    // The 1-ball is redundant when it already contains the box.
    double box_l1 = 0.0;
    for (std::size_t i = 0; i < p; ++i) box_l1 += std::max(-lo[i], hi[i]);
    if (box_l1 <= 1.0 + 1e-12) l1 = std::numeric_limits<double>::infinity();
  }
  const auto to_x = [&](const std::vector<double>& u) {
    ParamPoint out(p);
    for (std::size_t i = 0; i < p; ++i) out[i] = center[i] + radius * u[i];
    return out;
  };
  const double eta = std::sqrt(m.radius_squared()) / (radius * ginf) * std::sqrt(2.0 / static_cast<double>(steps));
  std::vector<double> u(p, 0.0);
  ParamPoint avg(p, 0.0);
  std::vector<double> z(p);
  for (std::uint64_t s = 1; s <= steps; ++s) {
    const auto xs = to_x(u);
    rec.visit(xs);
    for (std::size_t i = 0; i < p; ++i) avg[i] += xs[i] / static_cast<double>(steps);
    const auto g = source(xs);
    rec.gradient(g);
    for (std::size_t i = 0; i < p; ++i) z[i] = m.grad(u[i]) - eta * radius * g.vector[i];
    u = bregman_project(m, m.grad_inverse(z), lo, hi, l1);
  }
  return avg;
}

inline void check_mirror_set(const FeasibleSet& x) {
  if (x.kind() == FeasibleSet::Kind::euclidean_ball) {
    throw ConfigError("mirror descent supports inf-box and one-ball feasible sets");
  }
}

}  // namespace detail

/// Stochastic mirror descent with the l1 setup, started at argmin Phi = the center of X.
inline RunTrace smd_l1(const GradientSource& source, const FeasibleSet& x, OptimizerConfig cfg) {
  cfg.method = Method::smd;
  if (cfg.R1 == 0.0) cfg.R1 = x.r1_outer();
  cfg.validate();
  detail::check_mirror_set(x);
  MirrorSetup check(x.dimension());
  RunTrace trace;
  detail::Recorder rec{cfg, x, trace};
  trace.epochs = 1;
  trace.output = detail::smd_epoch(source, x, x.center(), cfg.R1, cfg.T, cfg.Ginf, rec);
  rec.finish();
  return trace;
}

inline std::uint64_t smd_sc_first_epoch(const OptimizerConfig& cfg, std::size_t p) {
  if (cfg.epoch0 > 0) return cfg.epoch0;
  const double lr = cfg.lambda1 * cfg.R1;
  const double t0 = 32.0 * std::numbers::e * std::log(static_cast<double>(p)) * cfg.Ginf * cfg.Ginf / (lr * lr);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(t0)));
}

/// Epoch-restarted SMD: epoch e runs 2^e T0 steps in a 1-ball of radius R1 2^{-e/2}
/// around the previous epoch's output. A final epoch absorbs any remainder shorter than
/// the next full epoch. Returns the last epoch's average.
inline RunTrace smd_strongly_convex(const GradientSource& source, const FeasibleSet& x, OptimizerConfig cfg) {
  cfg.method = Method::smd_sc;
  if (cfg.R1 == 0.0) cfg.R1 = x.r1_outer();
  cfg.validate();
  detail::check_mirror_set(x);
  if (x.kind() == FeasibleSet::Kind::one_ball && cfg.T > smd_sc_first_epoch(cfg, x.dimension())) {
    // Later epochs intersect a shifted 1-ball with X, which only the box form supports.
    throw ConfigError("smd-sc restarts need an inf-box feasible set");
  }
  MirrorSetup check(x.dimension());
  RunTrace trace;
  detail::Recorder rec{cfg, x, trace};
  ParamPoint center = x.center();
  if (cfg.T == 0) {
    trace.output = center;
    rec.finish();
    return trace;
  }
  std::uint64_t remaining = cfg.T;
  std::uint64_t len = std::min(smd_sc_first_epoch(cfg, x.dimension()), remaining);
  double radius = cfg.R1;
  while (remaining > 0) {
    std::uint64_t steps = len;
    if (remaining - steps < 2 * len) steps = remaining;
    center = detail::smd_epoch(source, x, center, radius, steps, cfg.Ginf, rec);
    ++trace.epochs;
    remaining -= steps;
    len *= 2;
    radius /= std::numbers::sqrt2;
  }
  trace.output = center;
  rec.finish();
  return trace;
}

/// One-point spherical gradient estimate (p / delta) F u; its mean over uniform u is the
/// gradient of f averaged over the delta-ball.
inline void spherical_gradient(double f, const std::vector<double>& u, double delta, std::vector<double>& out) {
  out.resize(u.size());
  const double scale = static_cast<double>(u.size()) / delta * f;
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = scale * u[i];
}

/// One-point spherical estimator: query f at x_t + delta_s u with x_t kept in the shrunk
/// set (1 - delta_s / r2) X, step along -(p / delta_s) F u, average the x_t.
inline RunTrace zo_spherical(const ValueSource& source, const FeasibleSet& x, OptimizerConfig cfg, CounterRng& rng) {
  cfg.method = Method::zo;
  if (cfg.R2 == 0.0) cfg.R2 = x.r2_outer();
  if (cfg.r2 == 0.0) cfg.r2 = x.r2_inner();
  cfg.validate();
  if (!(cfg.r2 > 0.0)) throw ConfigError("zo needs r2 > 0");
  const std::size_t p = x.dimension();
  const double t = static_cast<double>(cfg.T);
  const double ds = cfg.zo_delta_scale > 0.0 ? cfg.zo_delta_scale : 6.0;
  const double es = cfg.zo_eta_scale > 0.0 ? cfg.zo_eta_scale : 1.0;
  const double delta = std::min(ds * cfg.r2 * std::pow(t, -0.25), cfg.r2);
  const double eta = es * cfg.R2 * delta / (static_cast<double>(p) * cfg.E * std::sqrt(t));
  const double xi = delta / cfg.r2;
  const FeasibleSet inner = x.shrunk(1.0 - xi < 1e-12 ? 1e-12 : 1.0 - xi);
  RunTrace trace;
  detail::Recorder rec{cfg, x, trace};
  ParamPoint cur = x.center();
  ParamPoint avg(p, 0.0);
  std::vector<double> u(p);
  ParamPoint probe(p);
  std::vector<double> g(p);
  for (std::uint64_t s = 1; s <= cfg.T; ++s) {
    rec.visit(cur);
    for (std::size_t i = 0; i < p; ++i) avg[i] += cur[i];
    rng.unit_sphere(u);
    for (std::size_t i = 0; i < p; ++i) probe[i] = cur[i] + delta * u[i];
    spherical_gradient(source(probe), u, delta, g);
    ++trace.queries;
    for (std::size_t i = 0; i < p; ++i) cur[i] -= eta * g[i];
    cur = inner.project(cur);
  }
  for (auto& v : avg) v /= t;
  trace.output = std::move(avg);
  rec.finish();
  return trace;
}

/// Theorem bounds, used for conformance checks.
inline double sgd_bound(double r2, double g2, std::uint64_t t) { return r2 * g2 * std::sqrt(2.0 / static_cast<double>(t)); }
inline double sgd_sc_bound(double g2, double lambda2, std::uint64_t t) {
  return 2.0 * g2 * g2 / (lambda2 * (static_cast<double>(t) + 1.0));
}
inline double smd_bound(double r1, double ginf, std::size_t p, std::uint64_t t) {
  return r1 * ginf * std::sqrt(2.0 * std::numbers::e * std::log(static_cast<double>(p)) / static_cast<double>(t));
}
inline double smd_sc_bound(double ginf, double lambda1, std::uint64_t t) {
  return 16.0 * ginf * ginf / (lambda1 * static_cast<double>(t));
}

}  // namespace vqo
