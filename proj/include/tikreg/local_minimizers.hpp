#pragma once

// Local minimizers of the quasi-optimality sequence psi_Q(alpha_j), their
// two-phase restriction and the a-posteriori constants bounding the error
// of the best retained minimizer.
//
// All positions are grid indices: index 0 is alpha0, larger indices are
// smaller parameters. "Largest alpha" therefore means "smallest index".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"
#include "tikreg/rules_heuristic.hpp"
#include "tikreg/spectral.hpp"

namespace tikreg {

inline constexpr double kPlateauTolerance = 1e-12;

inline bool nearly_equal(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}

/// Minimizers alpha^(1)_min > ... > alpha^(K)_min with the interleaved
/// maximizers alpha^(0)_max = alpha0, ..., alpha^(K)_max = alpha_M.
struct ExtremumSequence {
  std::vector<std::size_t> minimizers;    // K entries, increasing index
  std::vector<std::size_t> plateau_last;  // last index of each minimizer's plateau
  std::vector<std::size_t> maximizers;    // K + 1 entries
  std::size_t last_grid_index{0};

  std::size_t size() const { return minimizers.size(); }

  /// True when grid index j is a minimizer whose plateau reaches alpha_M.
  bool is_alpha_m(std::size_t j) const {
    for (std::size_t k = 0; k < minimizers.size(); ++k)
      if (minimizers[k] == j) return plateau_last[k] == last_grid_index;
    return j == last_grid_index;
  }
};

/// Plateau-aware extrema of a sequence. Values beyond both ends count as
/// +infinity, so the endpoint rules for alpha0 and alpha_M follow. A plateau
/// is represented by its largest parameter.
inline ExtremumSequence extract_extrema(std::span<const double> values,
                                        double rel_tol = kPlateauTolerance) {
  if (values.empty()) throw ConfigError("extract_extrema: empty profile");
  struct Run {
    std::size_t first, last;
    double value;
  };
  std::vector<Run> runs;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!runs.empty() && nearly_equal(values[j], runs.back().value, rel_tol)) {
      runs.back().last = j;
    } else {
      runs.push_back({j, j, values[j]});
    }
  }
  ExtremumSequence out;
  out.last_grid_index = values.size() - 1;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const double left = r == 0 ? inf : runs[r - 1].value;
    const double right = r + 1 == runs.size() ? inf : runs[r + 1].value;
    if (runs[r].value < left && runs[r].value < right) {
      out.minimizers.push_back(runs[r].first);
      out.plateau_last.push_back(runs[r].last);
    }
  }
  out.maximizers.push_back(0);
  for (std::size_t k = 0; k + 1 < out.minimizers.size(); ++k) {
    std::size_t best = out.plateau_last[k] + 1;
    for (std::size_t j = best + 1; j < out.minimizers[k + 1]; ++j)
      if (values[j] > values[best]) best = j;
    out.maximizers.push_back(best);
  }
  out.maximizers.push_back(out.last_grid_index);
  return out;
}

inline ExtremumSequence extract_extrema(const RuleProfile& prof) {
  return extract_extrema(std::span<const double>(prof.values));
}

struct PhaseOneResult {
  std::vector<std::size_t> minimizers;  // L0_min
  std::vector<std::size_t> maximizers;  // |L0_min| + 1 entries
  std::size_t k0{1};                    // 1-based count of retained minimizers
  std::size_t alpha_md_index{0};
  std::size_t alpha_q_index{0};
  std::size_t alpha_mdq_index{0};
  double delta_m{0};
  bool redenoted{false};
};

/// Largest grid alpha with ||B_alpha(A u_alpha - f)|| <= bound, using the
/// monotonicity of that norm in alpha.
inline std::size_t modified_discrepancy_index(const GridEvaluation& eval, double bound) {
  const auto& v = eval.b_residual;
  std::size_t lo = 0, hi = v.size() - 1;
  if (v[hi] > bound) return hi;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (v[mid] <= bound) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

/// Phase 1: drop minimizers below alpha_MDQ = min(alpha_MD, alpha_Q), where
/// the modified discrepancy has fallen to b times its value at alpha_M.
inline PhaseOneResult restrict_phase1(const ExtremumSequence& ext,
                                      const std::vector<double>& psi_q,
                                      const GridEvaluation& eval, double b) {
  if (!(b > 1.0)) throw ConfigError("restriction: b must be > 1");
  if (ext.size() == 0) throw NumericalError("restriction: no local minimizers");
  PhaseOneResult out;
  const std::size_t m = eval.grid.last();
  out.delta_m = eval.b_residual[m];
  out.alpha_md_index = modified_discrepancy_index(eval, b * out.delta_m);
  out.alpha_q_index = argmin_in(psi_q, 0, psi_q.size() - 1);
  out.alpha_mdq_index = std::max(out.alpha_md_index, out.alpha_q_index);

  const std::size_t big_k = ext.size();
  const std::size_t t = out.alpha_mdq_index;
  std::size_t k0 = 1;
  for (std::size_t k = 1; k <= big_k; ++k) {
    if (ext.maximizers[k - 1] < t && t <= ext.maximizers[k]) {
      k0 = k;
      break;
    }
  }
  out.k0 = k0;
  out.minimizers.assign(ext.minimizers.begin(), ext.minimizers.begin() + k0);
  out.maximizers.assign(ext.maximizers.begin(), ext.maximizers.begin() + k0 + 1);
  if (ext.minimizers[k0 - 1] <= t && t <= ext.maximizers[k0] &&
      out.maximizers[k0] != ext.minimizers[k0 - 1]) {
    out.maximizers[k0] = ext.minimizers[k0 - 1];
    out.redenoted = true;
  }
  return out;
}

struct RestrictedSet {
  std::vector<std::size_t> l_min;
  std::vector<std::size_t> l0_min;
  std::vector<std::size_t> l0_max;
  std::vector<std::size_t> l_star_min;
  std::vector<std::size_t> l_star_max;  // |L*_min| + 1 entries
  std::size_t alpha_md_index{0};
  std::size_t alpha_q_index{0};
  std::size_t alpha_mdq_index{0};
  double delta_m{0};
  double b{2};
  double c0{2};
  bool guard_fired{false};
};

/// Phase 2: drop a minimizer together with its following maximizer when the
/// profile rises only a little after it (ratio <= c0) and the minimizer is
/// not much above the smallest minimum seen so far. Conditions use the
/// original phase-1 values.
inline RestrictedSet restrict_phase2(const ExtremumSequence& ext, const PhaseOneResult& p1,
                                     const std::vector<double>& psi_q, double b, double c0) {
  if (!(c0 > 1.0)) throw ConfigError("restriction: c0 must be > 1");
  RestrictedSet out;
  out.l_min = ext.minimizers;
  out.l0_min = p1.minimizers;
  out.l0_max = p1.maximizers;
  out.alpha_md_index = p1.alpha_md_index;
  out.alpha_q_index = p1.alpha_q_index;
  out.alpha_mdq_index = p1.alpha_mdq_index;
  out.delta_m = p1.delta_m;
  out.b = b;
  out.c0 = c0;

  out.l_star_max.push_back(p1.maximizers[0]);
  double running_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= p1.minimizers.size(); ++k) {
    const std::size_t mn = p1.minimizers[k - 1];
    const std::size_t mx = p1.maximizers[k];
    running_min = std::min(running_min, psi_q[mn]);
    const bool distinct = mn != mx;
    const bool small_rise = psi_q[mx] <= c0 * psi_q[mn];
    const bool near_lowest = psi_q[mn] <= c0 * running_min;
    if (distinct && small_rise && near_lowest) continue;
    out.l_star_min.push_back(mn);
    out.l_star_max.push_back(mx);
  }
  if (out.l_star_min.empty()) {
    // Keep the lowest phase-1 minimizer rather than return an empty set.
    std::size_t best = 0;
    for (std::size_t k = 1; k < p1.minimizers.size(); ++k)
      if (psi_q[p1.minimizers[k]] < psi_q[p1.minimizers[best]]) best = k;
    out.l_star_min.push_back(p1.minimizers[best]);
    out.l_star_max.push_back(p1.maximizers[best + 1]);
    out.guard_fired = true;
  }
  return out;
}

/// Both phases with the extremum sequence of psi_Q.
inline RestrictedSet restrict_minimizers(const ExtremumSequence& ext,
                                         const std::vector<double>& psi_q,
                                         const GridEvaluation& eval, double b, double c0) {
  return restrict_phase2(ext, restrict_phase1(ext, psi_q, eval, b), psi_q, b, c0);
}

/// (1/q - 1) / ln(1/q); tends to 1 as q -> 1.
inline double c_q(double q) { return (1.0 / q - 1.0) / std::log(1.0 / q); }

struct BasinConstant {
  double value{1.0};
  std::vector<std::size_t> skipped;  // grid points with psi_Q exactly zero
};

/// 1 + max_k max_{alpha_j in [max_k, max_{k-1}]} ||u_{min_k} - u_j|| / psi_Q(alpha_j).
inline BasinConstant basin_constant(const std::vector<std::size_t>& minimizers,
                                    const std::vector<std::size_t>& maximizers,
                                    const GridEvaluation& eval) {
  if (maximizers.size() != minimizers.size() + 1)
    throw ConfigError("basin constant: maximizers must interleave minimizers");
  BasinConstant out;
  double worst = 0.0;
  for (std::size_t k = 1; k <= minimizers.size(); ++k) {
    const std::size_t mn = minimizers[k - 1];
    for (std::size_t j = maximizers[k - 1]; j <= maximizers[k]; ++j) {
      const double psi = eval.psi_q[j];
      if (psi == 0.0) {
        out.skipped.push_back(j);
        continue;
      }
      worst = std::max(worst, eval.distance(mn, j) / psi);
    }
  }
  std::sort(out.skipped.begin(), out.skipped.end());
  out.skipped.erase(std::unique(out.skipped.begin(), out.skipped.end()), out.skipped.end());
  out.value = 1.0 + worst;
  return out;
}

struct AposterioriConstants {
  double c{1.0};
  double c1{1.0};
  double c_q{1.0};
  double c_cap{1.0};   // 1 + c_q ln(alpha0 / alpha_M)
  double c1_cap{1.0};  // 1 + c0 c_q ln(alpha0 / last retained maximizer)
  bool c_within_cap{true};
  bool c1_within_cap{true};
  std::vector<std::size_t> skipped;
};

inline AposterioriConstants aposteriori_constants(const ExtremumSequence& ext,
                                                  const RestrictedSet& restricted,
                                                  const GridEvaluation& eval) {
  const auto& grid = eval.grid;
  AposterioriConstants out;
  out.c_q = c_q(grid.q());
  const auto full = basin_constant(ext.minimizers, ext.maximizers, eval);
  const auto star = basin_constant(restricted.l_star_min, restricted.l_star_max, eval);
  out.c = full.value;
  out.c1 = star.value;
  out.c_cap = 1.0 + out.c_q * std::log(grid.alpha0() / grid.alpha_m());
  out.c1_cap = 1.0 + restricted.c0 * out.c_q *
                         std::log(grid.alpha0() / grid[restricted.l_star_max.back()]);
  constexpr double slack = 1e-9;
  out.c_within_cap = out.c <= out.c_cap * (1.0 + slack);
  out.c1_within_cap = out.c1 <= out.c1_cap * (1.0 + slack);
  out.skipped = full.skipped;
  out.skipped.insert(out.skipped.end(), star.skipped.begin(), star.skipped.end());
  std::sort(out.skipped.begin(), out.skipped.end());
  out.skipped.erase(std::unique(out.skipped.begin(), out.skipped.end()), out.skipped.end());
  return out;
}

}  // namespace tikreg
