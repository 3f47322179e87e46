// Choose a Tikhonov parameter for a noisy shaw problem without using the
// noise level, then compare with the best parameter on the grid.

#include <cstdio>

#include "tikreg/tikreg.hpp"

int main() {
  using namespace tikreg;

  const Problem exact = generate({"shaw", 100, 0, true});
  NoiseModel noise;
  noise.levels = {1e-3};
  const Problem noisy = make_noisy(exact, noise, 0, 0);

  const SingularSystem sys = decompose(noisy);
  AnalysisConfig cfg;
  const Analysis analysis = analyze(sys, cfg);
  const RuleOutcome choice = apply_rule(RuleId::lstar_c, sys, analysis, cfg);

  std::printf("grid: %zu points from %.3g to %.3g\n", cfg.grid.size(), cfg.grid.alpha0(),
              cfg.grid.alpha_m());
  std::printf("local minimizers of psi_Q: %zu, after restriction: %zu\n",
              analysis.restricted.l_min.size(), analysis.restricted.l_star_min.size());
  std::printf("chosen alpha = %.4g (%s, %s), C1 = %.3g\n", choice.alpha,
              std::string(to_string(choice.selection->method)).c_str(),
              std::string(to_string(choice.selection->reliability)).c_str(),
              analysis.constants.c1);

  const ExactReference ref = make_exact_reference(sys, noisy);
  const GridErrors errors = evaluate_errors(sys, ref, cfg.grid);
  std::printf("error ratio E = %.4g (best alpha on grid %.4g)\n",
              errors.error[*choice.grid_index] / errors.min_error,
              cfg.grid[errors.argmin_error]);

  const Vector u = evaluate(sys, choice.alpha).u_alpha;
  std::printf("||u_alpha|| = %.6g, ||u_star|| = %.6g\n", u.norm(), noisy.u_star->norm());
  return 0;
}
