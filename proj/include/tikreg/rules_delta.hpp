#pragma once

// Parameter choice with known noise level delta: find alpha on the grid
// with b1 * delta <= d(alpha) <= b2 * delta for a rule-specific d.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"
#include "tikreg/spectral.hpp"

namespace tikreg {

enum class DeltaRule { dp, mdp, me, mee, r1, bal };

inline std::string_view to_string(DeltaRule rule) {
  switch (rule) {
    case DeltaRule::dp: return "dp";
    case DeltaRule::mdp: return "mdp";
    case DeltaRule::me: return "me";
    case DeltaRule::mee: return "mee";
    case DeltaRule::r1: return "r1";
    case DeltaRule::bal: return "bal";
  }
  return "?";
}

inline std::optional<DeltaRule> parse_delta_rule(std::string_view name) {
  for (auto r : {DeltaRule::dp, DeltaRule::mdp, DeltaRule::me, DeltaRule::mee, DeltaRule::r1,
                 DeltaRule::bal})
    if (to_string(r) == name) return r;
  return std::nullopt;
}

/// Smallest admissible b1 for each rule.
inline double delta_rule_floor(DeltaRule rule) {
  switch (rule) {
    case DeltaRule::r1: return 0.325;
    case DeltaRule::bal: return 3.0 * std::sqrt(6.0) / 16.0;
    default: return 1.0;
  }
}

struct DeltaRuleSpec {
  DeltaRule rule{DeltaRule::dp};
  double b1{1.0};
  double b2{1.0};
  double delta{0.0};

  void validate() const {
    const double floor = delta_rule_floor(rule);
    if (!(b1 >= floor))
      throw ConfigError("delta rule " + std::string(to_string(rule)) + ": b1 must be >= " +
                        std::to_string(floor));
    if (!(b2 >= b1)) throw ConfigError("delta rule: b2 must be >= b1");
    if (!(delta >= 0.0) || !std::isfinite(delta))
      throw ConfigError("delta rule: noise level must be finite and >= 0");
  }
};

/// d(alpha) of a rule. q is only used by the balancing principle.
inline double d_value(DeltaRule rule, const SingularSystem& sys, double alpha, double q) {
  require_positive_alpha(alpha);
  switch (rule) {
    case DeltaRule::dp:
      return sys.quantities(alpha).residual_norm;
    case DeltaRule::mdp:
      return sys.quantities(alpha).b_residual_norm;
    case DeltaRule::me:
    case DeltaRule::mee: {
      const auto v = sys.quantities(alpha);
      return v.b2_residual_norm > 0 ? v.b_residual_norm * v.b_residual_norm / v.b2_residual_norm
                                    : 0.0;
    }
    case DeltaRule::r1:
      return std::sqrt(alpha) * sys.quantities(alpha).psi_q;
    case DeltaRule::bal: {
      if (!(q > 0.0 && q < 1.0)) throw ConfigError("balancing principle: q must lie in (0, 1)");
      const double diff = solution_distance(sys, alpha, alpha / q);
      return std::sqrt(alpha) * std::sqrt(q) * diff / (1.0 - q);
    }
  }
  throw ConfigError("unknown delta rule");
}

/// d(alpha_j) for every grid point, reusing cached evaluations.
inline std::vector<double> delta_profile(DeltaRule rule, const SingularSystem& sys,
                                         const GridEvaluation& eval) {
  const auto& grid = eval.grid;
  std::vector<double> d(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double a = grid[j];
    switch (rule) {
      case DeltaRule::dp: d[j] = eval.residual[j]; break;
      case DeltaRule::mdp: d[j] = eval.b_residual[j]; break;
      case DeltaRule::me:
      case DeltaRule::mee:
        d[j] = eval.b2_residual[j] > 0
                   ? eval.b_residual[j] * eval.b_residual[j] / eval.b2_residual[j]
                   : 0.0;
        break;
      case DeltaRule::r1: d[j] = std::sqrt(a) * eval.psi_q[j]; break;
      case DeltaRule::bal: {
        const double q = grid.q();
        const double diff = j == 0 ? solution_distance(sys, a, a / q) : eval.step[j - 1];
        d[j] = std::sqrt(a) * std::sqrt(q) * diff / (1.0 - q);
        break;
      }
    }
  }
  return d;
}

struct DeltaChoice {
  double alpha{};
  std::optional<std::size_t> grid_index;  // empty for the off-grid MEe parameter
  bool saturated{false};
};

namespace detail {

// Largest grid alpha with d <= b2 delta, scanning from alpha0 downward.
inline DeltaChoice scan_monotone(const std::vector<double>& d, const ParameterGrid& grid,
                                 double b1, double b2, double delta) {
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] <= b2 * delta) {
      DeltaChoice c{grid[j], j, false};
      if (j == 0 && d[0] < b1 * delta) c.saturated = true;
      return c;
    }
  }
  return {grid.alpha_m(), grid.last(), true};
}

// Largest grid alpha with d(alpha) >= b1 delta and d(alpha') <= b2 delta for
// every grid alpha' <= alpha; scanned from alpha_M upward.
inline DeltaChoice scan_r1(const std::vector<double>& d, const ParameterGrid& grid, double b1,
                           double b2, double delta) {
  std::optional<std::size_t> found;
  for (std::size_t k = d.size(); k-- > 0;) {
    if (d[k] > b2 * delta) break;
    if (d[k] >= b1 * delta) found = k;
  }
  if (!found) return {grid.alpha_m(), grid.last(), true};
  return {grid[*found], *found, false};
}

}  // namespace detail

inline constexpr double kMeePostFactor = 0.4;

/// Choice from a precomputed d-profile (see delta_profile).
inline DeltaChoice choose_delta_parameter(const DeltaRuleSpec& spec,
                                          const std::vector<double>& d,
                                          const ParameterGrid& grid) {
  spec.validate();
  if (!(spec.delta > 0.0)) throw ConfigError("delta rule: noise level must be positive");
  if (d.size() != grid.size()) throw ConfigError("delta rule: profile length mismatch");
  switch (spec.rule) {
    case DeltaRule::r1:
      return detail::scan_r1(d, grid, spec.b1, spec.b2, spec.delta);
    case DeltaRule::mee: {
      auto me = detail::scan_monotone(d, grid, 1.0, 1.0, spec.delta);
      double a = kMeePostFactor * me.alpha;
      a = std::clamp(a, grid.alpha_m(), grid.alpha0());
      return {a, std::nullopt, me.saturated};
    }
    default:
      return detail::scan_monotone(d, grid, spec.b1, spec.b2, spec.delta);
  }
}

inline DeltaChoice choose_delta_parameter(const DeltaRuleSpec& spec, const SingularSystem& sys,
                                          const ParameterGrid& grid) {
  const auto eval = evaluate_grid(sys, grid);
  return choose_delta_parameter(spec, delta_profile(spec.rule, sys, eval), grid);
}

}  // namespace tikreg
