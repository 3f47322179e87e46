#pragma once

// Heuristic (noise-level-free) parameter choice: each rule minimizes a
// functional of alpha over the grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"
#include "tikreg/spectral.hpp"

namespace tikreg {

enum class HeuristicRule { q, q_tilde, qd, hr, hme, re };

inline std::string_view to_string(HeuristicRule rule) {
  switch (rule) {
    case HeuristicRule::q: return "q";
    case HeuristicRule::q_tilde: return "q-tilde";
    case HeuristicRule::qd: return "qd";
    case HeuristicRule::hr: return "hr";
    case HeuristicRule::hme: return "hme";
    case HeuristicRule::re: return "re";
  }
  return "?";
}

inline std::optional<HeuristicRule> parse_heuristic_rule(std::string_view name) {
  for (auto r : {HeuristicRule::q, HeuristicRule::q_tilde, HeuristicRule::qd, HeuristicRule::hr,
                 HeuristicRule::hme, HeuristicRule::re})
    if (to_string(r) == name) return r;
  return std::nullopt;
}

/// Inclusive range of grid indices; first is the largest alpha.
struct Window {
  std::size_t first{0};
  std::size_t last{0};
  bool contains(std::size_t j) const { return j >= first && j <= last; }
};

/// [max(alpha_M, lambda_min), alpha0] as grid indices, or the whole grid when
/// widened. A lambda_min above alpha0 leaves only alpha0.
inline Window admissible_window(const SingularSystem& sys, const ParameterGrid& grid,
                                bool widen = false) {
  if (widen) return {0, grid.last()};
  const double lo = std::max(grid.alpha_m(), sys.lambda_min());
  if (lo > grid.alpha0()) return {0, 0};
  return {0, grid.last_index_at_least(lo)};
}

struct RuleProfile {
  HeuristicRule rule{HeuristicRule::q};
  std::vector<double> values;  // values[j] = functional at alpha_j
  std::size_t window_first{0};
  std::size_t window_last{0};
  std::size_t global_min_index{0};
};

/// Index of the smallest value in [first, last]; ties go to the larger alpha.
inline std::size_t argmin_in(const std::vector<double>& values, std::size_t first,
                             std::size_t last) {
  if (first > last || last >= values.size()) throw ConfigError("argmin: empty index range");
  std::size_t best = first;
  for (std::size_t j = first + 1; j <= last; ++j)
    if (values[j] < values[best]) best = j;
  return best;
}

inline RuleProfile profile(HeuristicRule rule, const SingularSystem& sys,
                           const GridEvaluation& eval, Window window, double tau = 1.0) {
  if (tau < 1.0) throw ConfigError("Reginska exponent tau must be >= 1");
  const auto& grid = eval.grid;
  RuleProfile out;
  out.rule = rule;
  const std::size_t n = grid.size();
  if (rule == HeuristicRule::qd) {
    if (n < 2) throw ConfigError("discrete quasi-optimality needs at least two grid points");
    out.values.resize(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j)
      out.values[j] = eval.step[j] / (1.0 - grid.q());
  } else {
    out.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double a = grid[j];
      switch (rule) {
        case HeuristicRule::q: out.values[j] = eval.psi_q[j]; break;
        case HeuristicRule::q_tilde:
          out.values[j] = (1.0 + a / sys.lambda_1()) * eval.psi_q[j];
          break;
        case HeuristicRule::hr: out.values[j] = eval.b_residual[j] / std::sqrt(a); break;
        case HeuristicRule::hme:
          out.values[j] = eval.b2_residual[j] > 0
                              ? eval.b_residual[j] * eval.b_residual[j] /
                                    (eval.b2_residual[j] * std::sqrt(a))
                              : 0.0;
          break;
        case HeuristicRule::re:
          out.values[j] = eval.residual[j] * std::pow(eval.norm_u[j], tau);
          break;
        case HeuristicRule::qd: break;
      }
    }
  }
  out.window_first = window.first;
  out.window_last = std::min(window.last, out.values.size() - 1);
  if (out.window_first > out.window_last) out.window_first = out.window_last;
  out.global_min_index = argmin_in(out.values, out.window_first, out.window_last);
  return out;
}

inline RuleProfile profile(HeuristicRule rule, const SingularSystem& sys, const ParameterGrid& grid,
                           double tau = 1.0, bool widen = false) {
  return profile(rule, sys, evaluate_grid(sys, grid), admissible_window(sys, grid, widen), tau);
}

/// Grid alpha with the smallest profile value among grid points in [lo, hi].
inline double global_minimizer(const RuleProfile& prof, const ParameterGrid& grid, double lo,
                               double hi) {
  std::optional<std::size_t> first, last;
  for (std::size_t j = 0; j < prof.values.size(); ++j) {
    if (grid[j] >= lo && grid[j] <= hi) {
      if (!first) first = j;
      last = j;
    }
  }
  if (!first) throw ConfigError("global minimizer: interval does not meet the grid");
  return grid[argmin_in(prof.values, *first, *last)];
}

enum class RegularizationVerdict { needs, not_needed, unknown };

inline std::string_view to_string(RegularizationVerdict v) {
  switch (v) {
    case RegularizationVerdict::needs: return "needs";
    case RegularizationVerdict::not_needed: return "not_needed";
    case RegularizationVerdict::unknown: return "unknown";
  }
  return "?";
}

/// The discrete problem needs no regularization when e1(lambda_min) is the
/// minimum of e1 over the grid points alpha >= lambda_min.
inline RegularizationVerdict needs_regularization_check(const SingularSystem& sys,
                                                        const ParameterGrid& grid,
                                                        const ExactReference* exact) {
  if (exact == nullptr) return RegularizationVerdict::unknown;
  const double lmin = sys.lambda_min();
  const double at_lmin = exact_error_terms(sys, *exact, lmin).e1();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.size() && grid[j] >= lmin; ++j)
    best = std::min(best, exact_error_terms(sys, *exact, grid[j]).e1());
  return at_lmin <= best * (1.0 + 1e-12) ? RegularizationVerdict::not_needed
                                         : RegularizationVerdict::needs;
}

}  // namespace tikreg
