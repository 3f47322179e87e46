#pragma once

// Final parameter choice from the restricted minimizer set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"
#include "tikreg/local_minimizers.hpp"
#include "tikreg/rules_heuristic.hpp"
#include "tikreg/spectral.hpp"

namespace tikreg {

enum class Algorithm { a, b, c };
enum class SelectionMethod { singleton, drop_alpha_m, alg_a, alg_b, alg_c, simplified_1, simplified_2 };
enum class Reliability { certified, conditional, heuristic };

inline std::string_view to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::singleton: return "singleton";
    case SelectionMethod::drop_alpha_m: return "drop_alpha_m";
    case SelectionMethod::alg_a: return "alg_a";
    case SelectionMethod::alg_b: return "alg_b";
    case SelectionMethod::alg_c: return "alg_c";
    case SelectionMethod::simplified_1: return "simplified_1";
    case SelectionMethod::simplified_2: return "simplified_2";
  }
  return "?";
}

inline std::string_view to_string(Reliability r) {
  switch (r) {
    case Reliability::certified: return "certified";
    case Reliability::conditional: return "conditional";
    case Reliability::heuristic: return "heuristic";
  }
  return "?";
}

/// Global minimizers of the heuristic functionals used as thresholds
/// (grid indices).
struct HeuristicAnchors {
  std::size_t alpha_q{0};   // psi_Q on the admissible window
  std::size_t alpha_hr{0};  // psi_HR on the admissible window
  std::size_t alpha_re{0};  // psi_RE on the admissible window
  std::size_t alpha_q1{0};  // max(alpha_Q, alpha_HR)
  std::size_t alpha_q2{0};  // psi_Q on [alpha_RE, alpha0]
};

inline HeuristicAnchors compute_anchors(const RuleProfile& q, const RuleProfile& hr,
                                        const RuleProfile& re) {
  HeuristicAnchors a;
  a.alpha_q = q.global_min_index;
  a.alpha_hr = hr.global_min_index;
  a.alpha_re = re.global_min_index;
  a.alpha_q1 = std::min(a.alpha_q, a.alpha_hr);
  a.alpha_q2 = argmin_in(q.values, 0, a.alpha_re);
  return a;
}

struct SelectionResult {
  double chosen_alpha{};
  std::size_t chosen_index{};
  SelectionMethod method{SelectionMethod::singleton};
  Reliability reliability{Reliability::heuristic};
  HeuristicAnchors anchors;
  std::vector<std::size_t> candidates;  // set the final step chose from
  std::vector<double> r_values;         // R(alpha) over candidates (algorithm c)
};

namespace detail {

// Largest candidate alpha not above the threshold; the smallest candidate
// when all of them exceed it. Candidates are in increasing index order.
inline std::size_t largest_not_above(const std::vector<std::size_t>& candidates,
                                     std::size_t threshold_index) {
  for (std::size_t c : candidates)
    if (c >= threshold_index) return c;
  return candidates.back();
}

}  // namespace detail

/// R(alpha) = psi_HR(alpha) / ||u_alpha||, a rough relative-error estimate.
inline double relative_error_estimate(const GridEvaluation& eval, std::size_t j) {
  const double nu = eval.norm_u[j];
  if (nu == 0.0) return std::numeric_limits<double>::infinity();
  return eval.b_residual[j] / std::sqrt(eval.grid[j]) / nu;
}

inline SelectionResult select(const RestrictedSet& restricted, const ExtremumSequence& ext,
                              const GridEvaluation& eval, const HeuristicAnchors& anchors,
                              double c_star, Algorithm algorithm) {
  if (!(c_star >= 1.0)) throw ConfigError("selection: C* must be >= 1");
  const auto& lstar = restricted.l_star_min;
  if (lstar.empty()) throw NumericalError("selection: empty restricted set");
  SelectionResult out;
  out.anchors = anchors;
  auto finish = [&](std::size_t idx) {
    out.chosen_index = idx;
    out.chosen_alpha = eval.grid[idx];
    return out;
  };

  if (lstar.size() == 1) {
    out.method = SelectionMethod::singleton;
    out.reliability = Reliability::certified;
    out.candidates = lstar;
    return finish(lstar.front());
  }
  std::vector<std::size_t> cand;
  for (std::size_t j : lstar)
    if (!ext.is_alpha_m(j)) cand.push_back(j);
  if (cand.empty()) cand = lstar;
  out.candidates = cand;
  if (cand.size() == 1) {
    out.method = SelectionMethod::drop_alpha_m;
    out.reliability = Reliability::conditional;
    return finish(cand.front());
  }
  out.reliability = Reliability::heuristic;
  switch (algorithm) {
    case Algorithm::a:
      out.method = SelectionMethod::alg_a;
      return finish(detail::largest_not_above(cand, anchors.alpha_q1));
    case Algorithm::b:
      out.method = SelectionMethod::alg_b;
      return finish(detail::largest_not_above(cand, anchors.alpha_q2));
    case Algorithm::c: {
      out.method = SelectionMethod::alg_c;
      out.r_values.reserve(cand.size());
      for (std::size_t j : cand) out.r_values.push_back(relative_error_estimate(eval, j));
      // Smallest alpha whose R is within C* of every larger candidate's R.
      std::size_t chosen = 0;
      double best_above = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (out.r_values[i] <= c_star * best_above) chosen = i;
        best_above = std::min(best_above, out.r_values[i]);
      }
      return finish(cand[chosen]);
    }
  }
  throw ConfigError("selection: unknown algorithm");
}

/// Stand-alone rules on the unrestricted minimizers: start at the minimizer
/// basin of alpha_Q1 (variant 1) or alpha_Q2 (variant 2) and move to smaller
/// minimizers while the rise after the current one stays within c0 and the
/// next one stays within c0 of the lowest minimum so far.
inline SelectionResult select_simplified(int variant, const ExtremumSequence& ext,
                                         const std::vector<double>& psi_q,
                                         const GridEvaluation& eval,
                                         const HeuristicAnchors& anchors, double c0) {
  if (variant != 1 && variant != 2) throw ConfigError("simplified rule: variant must be 1 or 2");
  if (!(c0 > 1.0)) throw ConfigError("simplified rule: c0 must be > 1");
  if (ext.size() == 0) throw NumericalError("simplified rule: no local minimizers");
  const std::size_t anchor = variant == 1 ? anchors.alpha_q1 : anchors.alpha_q2;
  const auto& mins = ext.minimizers;
  const std::size_t big_k = mins.size();
  // k0: first minimizer not above the anchor (1-based).
  std::size_t k0 = big_k;
  for (std::size_t k = 1; k <= big_k; ++k) {
    if (mins[k - 1] >= anchor) {
      k0 = k;
      break;
    }
  }
  auto lowest_up_to = [&](std::size_t k) {
    double v = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j <= k; ++j) v = std::min(v, psi_q[mins[j - 1]]);
    return v;
  };
  std::size_t k = k0;
  while (k < big_k) {
    const bool rise_ok = psi_q[ext.maximizers[k]] <= c0 * psi_q[mins[k - 1]];
    const bool next_ok = psi_q[mins[k]] <= c0 * lowest_up_to(k + 1);
    if (!(rise_ok && next_ok)) break;
    ++k;
  }
  SelectionResult out;
  out.anchors = anchors;
  out.method = variant == 1 ? SelectionMethod::simplified_1 : SelectionMethod::simplified_2;
  out.reliability = Reliability::heuristic;
  out.candidates = mins;
  out.chosen_index = mins[k - 1];
  out.chosen_alpha = eval.grid[out.chosen_index];
  return out;
}

}  // namespace tikreg
