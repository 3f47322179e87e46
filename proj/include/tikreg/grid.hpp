#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "tikreg/errors.hpp"

namespace tikreg {

/// Geometric parameter grid alpha_j = alpha0 * q^j, j = 0..M, strictly
/// decreasing. M is the largest index with alpha_M >= floor.
class ParameterGrid {
 public:
  ParameterGrid() : ParameterGrid(1.0, 0.95, 1e-18) {}

  ParameterGrid(double alpha0, double q, double floor)
      : alpha0_(alpha0), q_(q), floor_(floor) {
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0))
      throw ConfigError("grid: alpha0 must be positive and finite");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("grid: q must lie in (0, 1)");
    if (!(floor > 0.0) || floor > alpha0)
      throw ConfigError("grid: floor must lie in (0, alpha0]");
    // Start from the analytic estimate and correct for rounding so that
    // at(M) >= floor > at(M + 1) holds with the same formula used by at().
    auto m = static_cast<long>(std::floor(std::log(floor / alpha0) / std::log(q)));
    if (m < 0) m = 0;
    while (m > 0 && value(m) < floor) --m;
    while (value(m + 1) >= floor) ++m;
    last_ = static_cast<std::size_t>(m);
    build();
  }

  /// Grid with an explicit number of steps, ignoring any floor.
  static ParameterGrid with_steps(double alpha0, double q, std::size_t steps) {
    ParameterGrid g;
    if (!(alpha0 > 0.0)) throw ConfigError("grid: alpha0 must be positive");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("grid: q must lie in (0, 1)");
    g.alpha0_ = alpha0;
    g.q_ = q;
    g.last_ = steps;
    g.floor_ = g.value(static_cast<long>(steps));
    g.build();
    return g;
  }

  double alpha0() const { return alpha0_; }
  double q() const { return q_; }
  double floor() const { return floor_; }
  /// Index M of the smallest parameter.
  std::size_t last() const { return last_; }
  std::size_t size() const { return last_ + 1; }
  double alpha_m() const { return values_.back(); }
  double operator[](std::size_t j) const { return values_[j]; }
  const std::vector<double>& values() const { return values_; }

  /// Largest index j with alpha_j >= alpha (0 if alpha > alpha0 is not
  /// reachable; callers clamp).
  std::size_t last_index_at_least(double alpha) const {
    std::size_t j = 0;
    while (j + 1 < values_.size() && values_[j + 1] >= alpha) ++j;
    return j;
  }

 private:
  double value(long j) const { return alpha0_ * std::pow(q_, static_cast<double>(j)); }

  void build() {
    values_.resize(last_ + 1);
    for (std::size_t j = 0; j <= last_; ++j) values_[j] = value(static_cast<long>(j));
  }

  double alpha0_{1.0};
  double q_{0.95};
  double floor_{1e-18};
  std::size_t last_{0};
  std::vector<double> values_;
};

}  // namespace tikreg
