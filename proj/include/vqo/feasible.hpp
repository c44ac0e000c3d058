#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "vqo/errors.hpp"

namespace vqo {

/// Closed convex feasible set: a Euclidean ball, a 1-ball or an infinity-box of radius r
/// around `center`.
class FeasibleSet {
 public:
  enum class Kind { euclidean_ball, one_ball, inf_box };

  FeasibleSet(Kind kind, std::vector<double> center, double radius)
      : kind_(kind), center_(std::move(center)), radius_(radius) {
    if (center_.empty()) throw SizeError("feasible set needs dimension >= 1");
    if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw ConfigError("feasible set radius must be positive");
  }

  static FeasibleSet ball(std::size_t p, double r) { return {Kind::euclidean_ball, std::vector<double>(p, 0.0), r}; }
  static FeasibleSet one_ball(std::size_t p, double r) { return {Kind::one_ball, std::vector<double>(p, 0.0), r}; }
  static FeasibleSet box(std::size_t p, double r) { return {Kind::inf_box, std::vector<double>(p, 0.0), r}; }

  static Kind parse_kind(std::string_view s) {
    if (s == "euclidean-ball") return Kind::euclidean_ball;
    if (s == "one-ball") return Kind::one_ball;
    if (s == "inf-box") return Kind::inf_box;
    throw ConfigError("unknown feasible set kind '" + std::string(s) + "'");
  }

  Kind kind() const { return kind_; }
  std::size_t dimension() const { return center_.size(); }
  const std::vector<double>& center() const { return center_; }
  double radius() const { return radius_; }

  /// Radius of the smallest Euclidean ball around the center containing the set.
  double r2_outer() const {
    const double p = static_cast<double>(dimension());
    return kind_ == Kind::inf_box ? radius_ * std::sqrt(p) : radius_;
  }
  /// Radius of the smallest 1-ball around the center containing the set.
  double r1_outer() const {
    const double p = static_cast<double>(dimension());
    switch (kind_) {
      case Kind::euclidean_ball: return radius_ * std::sqrt(p);
      case Kind::inf_box: return radius_ * p;
      default: return radius_;
    }
  }
  /// Radius of the largest Euclidean ball around the center inside the set.
  double r2_inner() const {
    return kind_ == Kind::one_ball ? radius_ / std::sqrt(static_cast<double>(dimension())) : radius_;
  }

  /// Same shape scaled by `factor` about the center.
  FeasibleSet shrunk(double factor) const { return {kind_, center_, radius_ * factor}; }

  bool contains(const std::vector<double>& x, double tol = 1e-10) const {
    check(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = std::abs(x[i] - center_[i]);
      switch (kind_) {
        case Kind::euclidean_ball: acc += d * d; break;
        case Kind::one_ball: acc += d; break;
        case Kind::inf_box: acc = std::max(acc, d); break;
      }
    }
    if (kind_ == Kind::euclidean_ball) acc = std::sqrt(acc);
    return acc <= radius_ + tol;
  }

  /// Euclidean projection.
  std::vector<double> project(const std::vector<double>& x) const {
    check(x);
    const std::size_t p = x.size();
    std::vector<double> d(p);
    for (std::size_t i = 0; i < p; ++i) d[i] = x[i] - center_[i];
    switch (kind_) {
      case Kind::euclidean_ball: {
        const double norm = std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0));
        if (norm > radius_) {
          for (auto& v : d) v *= radius_ / norm;
        }
        break;
      }
      case Kind::inf_box:
        for (auto& v : d) v = std::clamp(v, -radius_, radius_);
        break;
      case Kind::one_ball: d = project_l1(d, radius_); break;
    }
    for (std::size_t i = 0; i < p; ++i) d[i] += center_[i];
    return d;
  }

 private:
  void check(const std::vector<double>& x) const {
    if (x.size() != dimension()) throw SizeError("point dimension does not match the feasible set");
  }

  // Sort-and-threshold projection onto {|y|_1 <= r}.
  static std::vector<double> project_l1(const std::vector<double>& y, double r) {
    double l1 = 0.0;
    for (double v : y) l1 += std::abs(v);
    if (l1 <= r) return y;
    std::vector<double> a(y.size());
    std::transform(y.begin(), y.end(), a.begin(), [](double v) { return std::abs(v); });
    std::sort(a.begin(), a.end(), std::greater<>());
    double cum = 0.0;
    double tau = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      cum += a[k];
      const double t = (cum - r) / static_cast<double>(k + 1);
      if (a[k] > t) tau = t;
    }
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::copysign(std::max(std::abs(y[i]) - tau, 0.0), y[i]);
    return out;
  }

  Kind kind_;
  std::vector<double> center_;
  double radius_;
};

}  // namespace vqo
