// tikreg: command-line front end for the parameter-choice library.
//
//   tikreg generate --problem shaw --noise-level 1e-3 --out shaw.rptp
//   tikreg solve    --input shaw.rptp --rule lstar-c
//   tikreg bench    --config suite.json --out records.ndjson
//   tikreg table    --records records.ndjson --group problem --format csv
//   tikreg profile  --problem heat --rule q --out heat_q.csv
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tikreg/tikreg.hpp"

namespace {

using namespace tikreg;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config_path;
  double grid_alpha0{1.0}, grid_q{0.95}, grid_floor{1e-18};
  double b{2.0}, c0{2.0}, cstar{5.0};
  std::uint64_t seed{1};
  CLI::Option *o_alpha0{}, *o_q{}, *o_floor{}, *o_b{}, *o_c0{}, *o_cstar{}, *o_seed{};
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config; flags override its values")
      ->check(CLI::ExistingFile);
  c.o_alpha0 = app->add_option("--grid-alpha0", c.grid_alpha0, "largest grid parameter");
  c.o_q = app->add_option("--grid-q", c.grid_q, "grid ratio in (0,1)");
  c.o_floor = app->add_option("--grid-floor", c.grid_floor, "smallest admissible alpha");
  c.o_b = app->add_option("--b", c.b, "restriction constant b > 1");
  c.o_c0 = app->add_option("--c0", c.c0, "restriction constant c0 > 1");
  c.o_cstar = app->add_option("--cstar", c.cstar, "algorithm c constant C*");
  c.o_seed = app->add_option("--seed", c.seed, "noise seed");
}

/// Config file first, then explicitly given flags.
SuiteConfig resolve(const Common& c) {
  SuiteConfig cfg;
  if (!c.config_path.empty()) {
    json j;
    try {
      j = json::parse(read_file(c.config_path));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.merge_json(j);
  }
  double a0 = cfg.analysis.grid.alpha0(), q = cfg.analysis.grid.q(), fl = cfg.analysis.grid.floor();
  if (c.o_alpha0->count()) a0 = c.grid_alpha0;
  if (c.o_q->count()) q = c.grid_q;
  if (c.o_floor->count()) fl = c.grid_floor;
  cfg.analysis.grid = ParameterGrid(a0, q, fl);
  if (c.o_b->count()) cfg.analysis.b = c.b;
  if (c.o_c0->count()) cfg.analysis.c0 = c.c0;
  if (c.o_cstar->count()) cfg.analysis.c_star = c.cstar;
  if (c.o_seed->count()) cfg.noise.seed = c.seed;
  return cfg;
}

struct ProblemSource {
  std::string input;
  std::string problem;
  int n{100};
  int p{0};
  double noise_level{0.0};
  int realization{0};
};

void add_source(CLI::App* app, ProblemSource& s, bool allow_input) {
  if (allow_input) app->add_option("--input", s.input, "problem file (.csv or .rptp)");
  app->add_option("--problem", s.problem, "built-in test problem");
  app->add_option("--n", s.n, "discretization size");
  app->add_option("--p", s.p, "solution smoothness index");
  app->add_option("--noise-level", s.noise_level, "||f - f_star|| of the synthetic noise");
  app->add_option("--realization", s.realization, "noise realization index");
}

Problem load_source(const ProblemSource& s, std::uint64_t seed) {
  if (!s.input.empty() && !s.problem.empty())
    throw ConfigError("give either --input or --problem, not both");
  if (!s.input.empty()) return load_problem(s.input);
  if (s.problem.empty()) throw ConfigError("missing --input or --problem");
  auto exact = generate({s.problem, s.n, s.p, true});
  if (s.noise_level == 0.0) return exact;
  NoiseModel model;
  model.levels = {s.noise_level};
  model.seed = seed;
  model.realizations = s.realization + 1;
  return make_noisy(exact, model, 0, s.realization);
}

std::string format_json(const json& j) { return j.dump(2) + "\n"; }

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out_path, text);
  }
}

std::vector<double> alphas_of(const std::vector<std::size_t>& idx, const ParameterGrid& grid) {
  std::vector<double> out;
  for (std::size_t j : idx) out.push_back(grid[j]);
  return out;
}

int cmd_generate(const Common& c, const ProblemSource& src, const std::string& out) {
  if (src.problem.empty()) throw ConfigError("generate: --problem is required");
  if (out.empty()) throw ConfigError("generate: --out is required");
  const auto cfg = resolve(c);
  save_problem(out, load_source(src, cfg.noise.seed));
  return 0;
}

int cmd_solve(const Common& c, const ProblemSource& src, const std::string& rule_name,
              std::optional<double> delta, const std::string& out) {
  const auto cfg = resolve(c);
  const RuleId rule = parse_rule_id(rule_name);
  const auto problem = load_source(src, cfg.noise.seed);
  const auto sys = decompose(problem);
  const auto& grid = cfg.analysis.grid;
  const auto analysis = analyze(sys, cfg.analysis);

  std::optional<ExactReference> ref;
  std::optional<GridErrors> errors;
  if (problem.has_exact()) {
    ref = make_exact_reference(sys, problem);
    errors = evaluate_errors(sys, *ref, grid);
  }
  if (!delta && problem.f_star) delta = problem.delta_true();
  if (is_oracle_rule(rule) && !errors)
    throw ConfigError("rule " + rule_name + " needs a problem with f_star and u_star");

  const auto outcome =
      apply_rule(rule, sys, analysis, cfg.analysis, delta, errors ? &errors->error : nullptr);
  const auto stats = lambda_stats(sys, grid);

  json j;
  j["rule"] = rule_name;
  j["chosen_alpha"] = outcome.alpha;
  if (outcome.grid_index) j["chosen_index"] = *outcome.grid_index;
  j["saturated"] = outcome.saturated;
  if (outcome.selection) {
    j["method"] = std::string(to_string(outcome.selection->method));
    j["reliability"] = std::string(to_string(outcome.selection->reliability));
  } else {
    j["method"] = rule_name;
    j["reliability"] = is_delta_rule(rule) ? "delta" : "heuristic";
  }
  j["L_min"] = alphas_of(analysis.restricted.l_min, grid);
  j["L_star_min"] = alphas_of(analysis.restricted.l_star_min, grid);
  j["C"] = analysis.constants.c;
  j["C1"] = analysis.constants.c1;
  j["C_cap"] = analysis.constants.c_cap;
  j["C1_cap"] = analysis.constants.c1_cap;
  j["delta_M"] = analysis.restricted.delta_m;
  j["alpha_MD"] = grid[analysis.restricted.alpha_md_index];
  j["alpha_Q"] = grid[analysis.anchors.alpha_q];
  j["alpha_HR"] = grid[analysis.anchors.alpha_hr];
  j["alpha_RE"] = grid[analysis.anchors.alpha_re];
  j["alpha_Q1"] = grid[analysis.anchors.alpha_q1];
  j["alpha_Q2"] = grid[analysis.anchors.alpha_q2];
  j["alpha_M"] = grid.alpha_m();
  j["lambda_1"] = sys.lambda_1();
  j["lambda_min"] = stats.lambda_min;
  j["Lambda"] = stats.gap;
  j["rank"] = sys.rank();
  if (delta) j["delta"] = *delta;
  const auto verdict = needs_regularization_check(sys, grid, ref ? &*ref : nullptr);
  j["regularization"] = std::string(to_string(verdict));
  if (errors) {
    const double err = outcome.grid_index ? errors->error[*outcome.grid_index]
                                          : solution_error(sys, *ref, outcome.alpha);
    j["error"] = err;
    j["E"] = err / errors->min_error;
    j["E1"] = err / errors->min_e1;
  }
  emit(out, format_json(j));
  return 0;
}

int cmd_bench(const Common& c, const std::vector<std::string>& problems, const std::vector<int>& ps,
              const std::vector<double>& levels, CLI::Option* o_real, int realizations,
              const std::vector<std::string>& rules, CLI::Option* o_n, int n,
              CLI::Option* o_threads, unsigned threads, const std::string& out) {
  if (out.empty()) throw ConfigError("bench: --out is required");
  auto cfg = resolve(c);
  if (!problems.empty()) cfg.problems = problems;
  if (!ps.empty()) cfg.p = ps;
  if (!levels.empty()) cfg.noise.levels = levels;
  if (o_real->count()) cfg.noise.realizations = realizations;
  if (!rules.empty()) {
    cfg.rules.clear();
    for (const auto& r : rules) cfg.rules.push_back(parse_rule_id(r));
  }
  if (o_n->count()) cfg.n = n;
  if (o_threads->count()) cfg.threads = threads;
  const auto records = run_suite(cfg);
  write_file_atomic(out, to_ndjson(records));
  std::fprintf(stderr, "%zu records written to %s\n", records.size(), out.c_str());
  return 0;
}

int cmd_table(const std::string& records_path, const std::string& group,
              const std::vector<std::string>& rule_filter, const std::string& format,
              const std::string& out) {
  if (records_path.empty()) throw ConfigError("table: --records is required");
  auto records = from_ndjson(read_file(records_path));
  if (!rule_filter.empty()) {
    for (const auto& r : rule_filter) parse_rule_id(r);
    std::vector<ExperimentRecord> kept;
    for (auto& r : records)
      if (std::find(rule_filter.begin(), rule_filter.end(), r.rule) != rule_filter.end())
        kept.push_back(std::move(r));
    records = std::move(kept);
  }
  std::vector<GroupKey> keys;
  std::stringstream ss(group);
  std::string part;
  while (std::getline(ss, part, ',')) keys.push_back(parse_group_key(part));
  if (keys.empty()) throw ConfigError("table: --group needs at least one key");
  const auto table = aggregate(records, keys);
  std::string text;
  if (format == "csv") text = render_csv(table);
  else if (format == "json") text = render_json(table);
  else if (format == "md" || format == "markdown") text = render_markdown(table);
  else throw ConfigError("table: unknown format '" + format + "'");
  emit(out, text);
  return 0;
}

int cmd_profile(const Common& c, const ProblemSource& src, const std::string& rule_name,
                const std::string& out) {
  const auto cfg = resolve(c);
  const auto problem = load_source(src, cfg.noise.seed);
  const auto sys = decompose(problem);
  const auto eval = evaluate_grid(sys, cfg.analysis.grid);
  std::vector<double> values;
  if (auto h = parse_heuristic_rule(rule_name)) {
    values = profile(*h, sys, eval, admissible_window(sys, cfg.analysis.grid)).values;
  } else if (auto d = parse_delta_rule(rule_name)) {
    values = delta_profile(*d, sys, eval);
  } else {
    throw ConfigError("profile: rule must be a heuristic or delta rule, got '" + rule_name + "'");
  }
  std::string text = "alpha," + rule_name + "\n";
  for (std::size_t j = 0; j < values.size(); ++j)
    text += format_float(cfg.analysis.grid[j]) + "," + format_float(values[j]) + "\n";
  emit(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tikhonov regularization parameter choice"};
  app.require_subcommand(1);

  Common gen_common, solve_common, bench_common, prof_common;
  ProblemSource source;
  std::string out;
  std::string rule = "lstar-c";
  double delta_value = 0.0;

  auto* gen = app.add_subcommand("generate", "write a test problem to a file");
  add_common(gen, gen_common);
  add_source(gen, source, false);
  gen->add_option("--out", out, "output path; .rptp selects the binary container");

  auto* solve = app.add_subcommand("solve", "choose alpha for one problem, JSON on stdout");
  add_common(solve, solve_common);
  add_source(solve, source, true);
  solve->add_option("--rule", rule, "rule id");
  auto* o_delta = solve->add_option("--delta", delta_value, "noise level for delta rules");
  solve->add_option("--out", out, "write JSON here instead of stdout");

  std::vector<std::string> problems, rules;
  std::vector<int> ps;
  std::vector<double> levels;
  int realizations = 20, n = 100;
  unsigned threads = 1;
  auto* bench = app.add_subcommand("bench", "run the experiment suite, NDJSON records");
  add_common(bench, bench_common);
  bench->add_option("--problems", problems, "test problems")->delimiter(',');
  bench->add_option("--p", ps, "smoothness indices")->delimiter(',');
  bench->add_option("--levels", levels, "noise levels")->delimiter(',');
  auto* o_real = bench->add_option("--realizations", realizations, "noise realizations");
  bench->add_option("--rule", rules, "rule ids")->delimiter(',');
  auto* o_n = bench->add_option("--n", n, "discretization size");
  auto* o_threads = bench->add_option("--threads", threads, "worker threads");
  bench->add_option("--out", out, "records file");

  std::string records_path, group = "problem", format = "csv";
  std::vector<std::string> rule_filter;
  auto* table = app.add_subcommand("table", "aggregate records into a table");
  table->add_option("--records", records_path, "NDJSON records")->check(CLI::ExistingFile);
  table->add_option("--group", group, "comma-separated keys: problem, rule, level");
  table->add_option("--rule", rule_filter, "keep only these rules")->delimiter(',');
  table->add_option("--format", format, "csv, json or md");
  table->add_option("--out", out, "output path; stdout when omitted");

  auto* prof = app.add_subcommand("profile", "emit (alpha, functional) as CSV");
  add_common(prof, prof_common);
  add_source(prof, source, true);
  std::string prof_rule = "q";
  prof->add_option("--rule", prof_rule, "heuristic or delta rule");
  prof->add_option("--out", out, "output path; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    std::optional<double> delta;
    if (o_delta->count()) delta = delta_value;
    if (gen->parsed()) return cmd_generate(gen_common, source, out);
    if (solve->parsed()) return cmd_solve(solve_common, source, rule, delta, out);
    if (bench->parsed())
      return cmd_bench(bench_common, problems, ps, levels, o_real, realizations, rules, o_n, n, o_threads,
                       threads, out);
    if (table->parsed()) return cmd_table(records_path, group, rule_filter, format, out);
    if (prof->parsed()) return cmd_profile(prof_common, source, prof_rule, out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
