#pragma once

// One noisy right-hand side: every profile, the restricted minimizer set and
// the parameter each rule picks.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"
#include "tikreg/local_minimizers.hpp"
#include "tikreg/rules_delta.hpp"
#include "tikreg/rules_heuristic.hpp"
#include "tikreg/selection.hpp"
#include "tikreg/spectral.hpp"

namespace tikreg {

enum class RuleId {
  dp, mdp, me, mee, r1, bal,
  q, q_tilde, qd, hr, hme, re,
  lstar_a, lstar_b, lstar_c, simple_1, simple_2,
  best_lmin, best_lstar
};

inline constexpr RuleId kAllRules[] = {
    RuleId::dp,      RuleId::mdp,     RuleId::me,       RuleId::mee,      RuleId::r1,
    RuleId::bal,     RuleId::q,       RuleId::q_tilde,  RuleId::qd,       RuleId::hr,
    RuleId::hme,     RuleId::re,      RuleId::lstar_a,  RuleId::lstar_b,  RuleId::lstar_c,
    RuleId::simple_1, RuleId::simple_2, RuleId::best_lmin, RuleId::best_lstar};

inline std::string_view to_string(RuleId r) {
  switch (r) {
    case RuleId::dp: return "dp";
    case RuleId::mdp: return "mdp";
    case RuleId::me: return "me";
    case RuleId::mee: return "mee";
    case RuleId::r1: return "r1";
    case RuleId::bal: return "bal";
    case RuleId::q: return "q";
    case RuleId::q_tilde: return "q-tilde";
    case RuleId::qd: return "qd";
    case RuleId::hr: return "hr";
    case RuleId::hme: return "hme";
    case RuleId::re: return "re";
    case RuleId::lstar_a: return "lstar-a";
    case RuleId::lstar_b: return "lstar-b";
    case RuleId::lstar_c: return "lstar-c";
    case RuleId::simple_1: return "simple-1";
    case RuleId::simple_2: return "simple-2";
    case RuleId::best_lmin: return "best-lmin";
    case RuleId::best_lstar: return "best-lstar";
  }
  return "?";
}

inline RuleId parse_rule_id(std::string_view name) {
  for (RuleId r : kAllRules)
    if (to_string(r) == name) return r;
  throw ConfigError("unknown rule: " + std::string(name));
}

inline bool is_delta_rule(RuleId r) { return r <= RuleId::bal; }
inline bool is_oracle_rule(RuleId r) { return r == RuleId::best_lmin || r == RuleId::best_lstar; }

inline DeltaRule delta_rule_of(RuleId r) {
  switch (r) {
    case RuleId::dp: return DeltaRule::dp;
    case RuleId::mdp: return DeltaRule::mdp;
    case RuleId::me: return DeltaRule::me;
    case RuleId::mee: return DeltaRule::mee;
    case RuleId::r1: return DeltaRule::r1;
    case RuleId::bal: return DeltaRule::bal;
    default: throw ConfigError("not a delta rule: " + std::string(to_string(r)));
  }
}

struct AnalysisConfig {
  ParameterGrid grid;
  double b{2.0};       // restriction phase 1
  double c0{2.0};      // restriction phase 2 and simplified rules
  double c_star{5.0};  // algorithm c
  double tau{1.0};     // Reginska exponent
  double b1{1.0};      // delta-rule band
  double b2{1.0};
  bool widen_window{false};

  void validate() const {
    if (!(b > 1.0)) throw ConfigError("b must be > 1");
    if (!(c0 > 1.0)) throw ConfigError("c0 must be > 1");
    if (!(c_star >= 1.0)) throw ConfigError("cstar must be >= 1");
    if (!(tau >= 1.0)) throw ConfigError("tau must be >= 1");
    if (!(b1 > 0.0) || !(b2 >= b1)) throw ConfigError("delta band: need 0 < b1 <= b2");
  }
};

struct Analysis {
  GridEvaluation eval;
  Window window;
  RuleProfile q, q_tilde, qd, hr, hme, re;
  ExtremumSequence ext;
  RestrictedSet restricted;
  AposterioriConstants constants;
  HeuristicAnchors anchors;

  const RuleProfile& heuristic(HeuristicRule r) const {
    switch (r) {
      case HeuristicRule::q: return q;
      case HeuristicRule::q_tilde: return q_tilde;
      case HeuristicRule::qd: return qd;
      case HeuristicRule::hr: return hr;
      case HeuristicRule::hme: return hme;
      case HeuristicRule::re: return re;
    }
    return q;
  }
};

inline Analysis analyze(const SingularSystem& sys, const AnalysisConfig& cfg) {
  cfg.validate();
  Analysis a;
  a.eval = evaluate_grid(sys, cfg.grid);
  a.window = admissible_window(sys, cfg.grid, cfg.widen_window);
  a.q = profile(HeuristicRule::q, sys, a.eval, a.window, cfg.tau);
  a.q_tilde = profile(HeuristicRule::q_tilde, sys, a.eval, a.window, cfg.tau);
  a.qd = profile(HeuristicRule::qd, sys, a.eval, a.window, cfg.tau);
  a.hr = profile(HeuristicRule::hr, sys, a.eval, a.window, cfg.tau);
  a.hme = profile(HeuristicRule::hme, sys, a.eval, a.window, cfg.tau);
  a.re = profile(HeuristicRule::re, sys, a.eval, a.window, cfg.tau);
  a.ext = extract_extrema(a.eval.psi_q);
  a.restricted = restrict_minimizers(a.ext, a.eval.psi_q, a.eval, cfg.b, cfg.c0);
  a.constants = aposteriori_constants(a.ext, a.restricted, a.eval);
  a.anchors = compute_anchors(a.q, a.hr, a.re);
  return a;
}

/// |L*_min| = 1, or two elements one of which is alpha_M.
inline bool singleton_or_alpha_m(const Analysis& a) {
  const auto& l = a.restricted.l_star_min;
  if (l.size() == 1) return true;
  return l.size() == 2 && (a.ext.is_alpha_m(l[0]) || a.ext.is_alpha_m(l[1]));
}

struct RuleOutcome {
  double alpha{};
  std::optional<std::size_t> grid_index;
  bool saturated{false};
  std::optional<SelectionResult> selection;
};

/// Parameter chosen by a rule. Delta rules need the noise level; the oracle
/// rules need the exact error curve.
inline RuleOutcome apply_rule(RuleId rule, const SingularSystem& sys, const Analysis& a,
                              const AnalysisConfig& cfg, std::optional<double> delta = {},
                              const std::vector<double>* exact_error = nullptr) {
  const auto& grid = a.eval.grid;
  auto at = [&](std::size_t j) {
    RuleOutcome o;
    o.alpha = grid[j];
    o.grid_index = j;
    return o;
  };
  auto with_selection = [&](const SelectionResult& s) {
    RuleOutcome o = at(s.chosen_index);
    o.selection = s;
    return o;
  };
  switch (rule) {
    case RuleId::dp:
    case RuleId::mdp:
    case RuleId::me:
    case RuleId::mee:
    case RuleId::r1:
    case RuleId::bal: {
      if (!delta) throw ConfigError("rule " + std::string(to_string(rule)) + " needs a noise level");
      DeltaRuleSpec spec{delta_rule_of(rule), cfg.b1, cfg.b2, *delta};
      spec.b1 = std::max(spec.b1, delta_rule_floor(spec.rule));
      spec.b2 = std::max(spec.b2, spec.b1);
      const auto c = choose_delta_parameter(spec, delta_profile(spec.rule, sys, a.eval), grid);
      return {c.alpha, c.grid_index, c.saturated, std::nullopt};
    }
    case RuleId::q: return at(a.q.global_min_index);
    case RuleId::q_tilde: return at(a.q_tilde.global_min_index);
    case RuleId::qd: return at(a.qd.global_min_index);
    case RuleId::hr: return at(a.hr.global_min_index);
    case RuleId::hme: return at(a.hme.global_min_index);
    case RuleId::re: return at(a.re.global_min_index);
    case RuleId::lstar_a:
      return with_selection(select(a.restricted, a.ext, a.eval, a.anchors, cfg.c_star, Algorithm::a));
    case RuleId::lstar_b:
      return with_selection(select(a.restricted, a.ext, a.eval, a.anchors, cfg.c_star, Algorithm::b));
    case RuleId::lstar_c:
      return with_selection(select(a.restricted, a.ext, a.eval, a.anchors, cfg.c_star, Algorithm::c));
    case RuleId::simple_1:
      return with_selection(select_simplified(1, a.ext, a.eval.psi_q, a.eval, a.anchors, cfg.c0));
    case RuleId::simple_2:
      return with_selection(select_simplified(2, a.ext, a.eval.psi_q, a.eval, a.anchors, cfg.c0));
    case RuleId::best_lmin:
    case RuleId::best_lstar: {
      if (exact_error == nullptr)
        throw ConfigError("rule " + std::string(to_string(rule)) + " needs the exact solution");
      const auto& set = rule == RuleId::best_lmin ? a.restricted.l_min : a.restricted.l_star_min;
      std::size_t best = set.front();
      for (std::size_t j : set)
        if ((*exact_error)[j] < (*exact_error)[best]) best = j;
      return at(best);
    }
  }
  throw ConfigError("unknown rule");
}

}  // namespace tikreg
