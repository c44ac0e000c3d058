#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "vqo/errors.hpp"
#include "vqo/feasible.hpp"

namespace vqo {

/// l1-setup mirror map Phi(x) = (e ln p) sum_i |x_i|^{1 + 1/ln p}, p >= 3.
class MirrorSetup {
 public:
  explicit MirrorSetup(std::size_t p) : p_(p) {
    if (p < 3) throw ConfigError("the l1 mirror map needs p >= 3");
    log_p_ = std::log(static_cast<double>(p));
    scale_ = std::numbers::e * log_p_;
    q_ = 1.0 + 1.0 / log_p_;
  }

  std::size_t dimension() const { return p_; }
  double exponent() const { return q_; }
  /// R^2 = e ln p on the unit 1-ball.
  double radius_squared() const { return scale_; }

  double phi(const std::vector<double>& x) const {
    check(x);
    double acc = 0.0;
    for (double v : x) acc += std::pow(std::abs(v), q_);
    return scale_ * acc;
  }

  double grad(double x) const { return std::copysign(scale_ * q_ * std::pow(std::abs(x), q_ - 1.0), x); }
  double grad_inverse(double g) const { return std::copysign(std::pow(std::abs(g) / (scale_ * q_), log_p_), g); }

  std::vector<double> grad(const std::vector<double>& x) const {
    check(x);
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = grad(x[i]);
    return g;
  }

  std::vector<double> grad_inverse(const std::vector<double>& g) const {
    check(g);
    std::vector<double> x(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) x[i] = grad_inverse(g[i]);
    return x;
  }

  /// D(x, y) = Phi(x) - Phi(y) - grad Phi(y) . (x - y).
  double bregman(const std::vector<double>& x, const std::vector<double>& y) const {
    check(x);
    check(y);
    double lin = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) lin += grad(y[i]) * (x[i] - y[i]);
    return phi(x) - phi(y) - lin;
  }

 private:
  void check(const std::vector<double>& x) const {
    if (x.size() != p_) throw SizeError("point dimension does not match the mirror map");
  }

  std::size_t p_;
  double log_p_;
  double scale_;
  double q_;
};

/// argmin D(x, y) over {lo <= x <= hi} intersected with {|x|_1 <= l1_radius}. The box must
/// contain 0. Separable Phi makes the box part a clamp; the 1-ball multiplier is found by
/// bisection.
inline std::vector<double> bregman_project(const MirrorSetup& m, const std::vector<double>& y, const std::vector<double>& lo,
                                           const std::vector<double>& hi,
                                           double l1_radius = std::numeric_limits<double>::infinity()) {
  const std::size_t p = y.size();
  if (lo.size() != p || hi.size() != p) throw SizeError("box bounds do not match the point dimension");
  const auto z = m.grad(y);
  const auto solve = [&](double mu, std::vector<double>& out) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const double shrunk = std::max(std::abs(z[i]) - mu, 0.0);
      out[i] = std::clamp(std::copysign(m.grad_inverse(shrunk), z[i]), lo[i], hi[i]);
      l1 += std::abs(out[i]);
    }
    return l1;
  };
  std::vector<double> out(p);
  if (solve(0.0, out) <= l1_radius) return out;
  constexpr double kTolerance = 1e-10;
  double a = 0.0;
  double b = 0.0;
  for (double v : z) b = std::max(b, std::abs(v));
  for (int step = 0; step < 200; ++step) {
    const double mid = 0.5 * (a + b);
    const double l1 = solve(mid, out);
    if (l1 > l1_radius) {
      a = mid;
    } else {
      b = mid;
      if (l1_radius - l1 <= kTolerance) return out;
    }
  }
  throw NumericError("Bregman projection bisection did not converge in 200 steps");
}

/// Bregman projection onto a feasible set given in the mirror map's own coordinates.
/// Supports inf-box (any center) and one-ball centered at the origin.
inline std::vector<double> bregman_project(const MirrorSetup& m, const FeasibleSet& x, const std::vector<double>& y) {
  const std::size_t p = x.dimension();
  if (y.size() != p) throw SizeError("point dimension does not match the feasible set");
  std::vector<double> lo(p, -std::numeric_limits<double>::infinity());
  std::vector<double> hi(p, std::numeric_limits<double>::infinity());
  switch (x.kind()) {
    case FeasibleSet::Kind::inf_box:
      for (std::size_t i = 0; i < p; ++i) {
        lo[i] = x.center()[i] - x.radius();
        hi[i] = x.center()[i] + x.radius();
      }
      return bregman_project(m, y, lo, hi);
    case FeasibleSet::Kind::one_ball:
      for (double c : x.center()) {
        if (c != 0.0) throw ConfigError("Bregman projection onto a 1-ball needs it centered at the origin");
      }
      return bregman_project(m, y, lo, hi, x.radius());
    default: throw ConfigError("Bregman projection supports inf-box and one-ball sets");
  }
}

}  // namespace vqo
