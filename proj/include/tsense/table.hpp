#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace tsense {

/// Piecewise-linear function sampled on strictly increasing knots.
/// Evaluation outside [front, back] is a DomainError; there is no
/// extrapolation.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;

  PiecewiseLinear(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size()) throw ConfigError("knot and value counts differ");
    if (xs_.size() < 2) throw ConfigError("at least two knots required");
    for (std::size_t i = 1; i < xs_.size(); ++i) {
      if (!(xs_[i] > xs_[i - 1])) throw ConfigError("knots must be strictly increasing");
    }
  }

  /// Samples `f` on the given knots.
  static PiecewiseLinear sample(std::vector<double> xs, const std::function<double(double)>& f) {
    std::vector<double> ys;
    ys.reserve(xs.size());
    for (double x : xs) ys.push_back(f(x));
    return {std::move(xs), std::move(ys)};
  }

  /// Constant value over [lo, hi].
  static PiecewiseLinear constant(double lo, double hi, double value) { return {{lo, hi}, {value, value}}; }

  double operator()(double x) const {
    if (xs_.empty()) throw DomainError("empty table");
    // Knots are exact decimal temperatures; allow a rounding-level overshoot.
    const double tol = 1e-9 * std::max(1.0, std::abs(xs_.back() - xs_.front()));
    if (x < xs_.front() - tol || x > xs_.back() + tol) {
      throw DomainError("table lookup at " + std::to_string(x) + " outside [" + std::to_string(xs_.front()) +
                        ", " + std::to_string(xs_.back()) + "]");
    }
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const auto i = static_cast<std::size_t>(it - xs_.begin());
    const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    if (t == 0.0) return ys_[i - 1];
    return ys_[i - 1] + t * (ys_[i] - ys_[i - 1]);
  }

  bool contains(double x) const { return !xs_.empty() && x >= xs_.front() && x <= xs_.back(); }
  double lo() const { return xs_.front(); }
  double hi() const { return xs_.back(); }

  std::span<const double> knots() const { return xs_; }
  std::span<const double> values() const { return ys_; }

  /// Returns a copy with every value mapped through `f(x, y)`.
  template <class F>
  PiecewiseLinear transformed(F&& f) const {
    std::vector<double> ys(ys_.size());
    for (std::size_t i = 0; i < ys_.size(); ++i) ys[i] = f(xs_[i], ys_[i]);
    return {xs_, std::move(ys)};
  }

  friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

}  // namespace tsense
