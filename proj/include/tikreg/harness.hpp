#pragma once

// Experiment suite over the test problems: records, NDJSON persistence and
// aggregate tables.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tikreg/analysis.hpp"
#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"
#include "tikreg/spectral.hpp"
#include "tikreg/testproblems.hpp"

namespace tikreg {

inline constexpr double kFailThreshold = 100.0;

inline std::string format_float(double v) {
  if (std::isnan(v)) return "null";
  if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct SuiteConfig {
  std::vector<std::string> problems{kTestProblemNames.begin(), kTestProblemNames.end()};
  int n{100};
  std::vector<int> p{0};
  NoiseModel noise;
  std::vector<RuleId> rules{RuleId::lstar_c};
  AnalysisConfig analysis;
  unsigned threads{1};

  void validate() const {
    if (problems.empty()) throw ConfigError("config: no problems selected");
    for (const auto& name : problems)
      if (!is_test_problem(name)) throw ConfigError("config: unknown problem '" + name + "'");
    if (n < 4) throw ConfigError("config: n must be >= 4");
    if (p.empty()) throw ConfigError("config: no smoothness index selected");
    for (int v : p)
      if (v < 0) throw ConfigError("config: p must be >= 0");
    if (noise.levels.empty()) throw ConfigError("config: no noise levels");
    for (double l : noise.levels)
      if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("config: noise levels must be > 0");
    if (noise.realizations < 1) throw ConfigError("config: realizations must be >= 1");
    if (rules.empty()) throw ConfigError("config: no rules selected");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    analysis.validate();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["problems"] = problems;
    j["n"] = n;
    j["p"] = p;
    j["levels"] = noise.levels;
    j["seed"] = noise.seed;
    j["realizations"] = noise.realizations;
    std::vector<std::string> r;
    for (RuleId id : rules) r.emplace_back(to_string(id));
    j["rules"] = r;
    j["grid_alpha0"] = analysis.grid.alpha0();
    j["grid_q"] = analysis.grid.q();
    j["grid_floor"] = analysis.grid.floor();
    j["b"] = analysis.b;
    j["c0"] = analysis.c0;
    j["cstar"] = analysis.c_star;
    j["tau"] = analysis.tau;
    j["b1"] = analysis.b1;
    j["b2"] = analysis.b2;
    j["threads"] = threads;
    return j;
  }

  /// Keys absent from the document keep their current values.
  void merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    static const char* known[] = {"problems", "n",   "p",  "levels", "seed", "realizations",
                                  "rules",    "grid_alpha0", "grid_q", "grid_floor", "b",
                                  "c0",       "cstar", "tau", "b1", "b2", "threads"};
    for (const auto& [key, _] : j.items()) {
      if (std::find_if(std::begin(known), std::end(known),
                       [&](const char* k) { return key == k; }) == std::end(known))
        throw ConfigError("config: unknown key '" + key + "'");
    }
    try {
      if (j.contains("problems")) problems = j["problems"].get<std::vector<std::string>>();
      if (j.contains("n")) n = j["n"].get<int>();
      if (j.contains("p")) p = j["p"].get<std::vector<int>>();
      if (j.contains("levels")) noise.levels = j["levels"].get<std::vector<double>>();
      if (j.contains("seed")) noise.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("realizations")) noise.realizations = j["realizations"].get<int>();
      if (j.contains("rules")) {
        rules.clear();
        for (const auto& s : j["rules"].get<std::vector<std::string>>()) rules.push_back(parse_rule_id(s));
      }
      double a0 = analysis.grid.alpha0(), q = analysis.grid.q(), fl = analysis.grid.floor();
      if (j.contains("grid_alpha0")) a0 = j["grid_alpha0"].get<double>();
      if (j.contains("grid_q")) q = j["grid_q"].get<double>();
      if (j.contains("grid_floor")) fl = j["grid_floor"].get<double>();
      analysis.grid = ParameterGrid(a0, q, fl);
      if (j.contains("b")) analysis.b = j["b"].get<double>();
      if (j.contains("c0")) analysis.c0 = j["c0"].get<double>();
      if (j.contains("cstar")) analysis.c_star = j["cstar"].get<double>();
      if (j.contains("tau")) analysis.tau = j["tau"].get<double>();
      if (j.contains("b1")) analysis.b1 = j["b1"].get<double>();
      if (j.contains("b2")) analysis.b2 = j["b2"].get<double>();
      if (j.contains("threads")) threads = j["threads"].get<unsigned>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  /// Digest of everything that affects a record except the run coordinates.
  std::string digest() const {
    auto j = to_json();
    j.erase("problems");
    j.erase("p");
    j.erase("levels");
    j.erase("realizations");
    j.erase("rules");
    j.erase("threads");
    return fnv1a_hex(j.dump());
  }
};

struct ExperimentRecord {
  std::string problem;
  int n{};
  int p{};
  double noise_level{};
  int realization{};
  std::string rule;
  std::string config_digest;
  double chosen_alpha{};
  double e{};
  double e1{};
  std::size_t l_min_size{};
  std::size_t l_star_min_size{};
  double c{};
  double c1{};
  bool failed{};
  bool saturated{};
  bool singleton{};  // |L*_min| = 1, or two elements one of which is alpha_M
};

inline std::string to_ndjson_line(const ExperimentRecord& r) {
  std::string s = "{";
  auto str = [&](const char* k, const std::string& v, bool comma = true) {
    s += '"';
    s += k;
    s += "\":";
    s += nlohmann::json(v).dump();
    if (comma) s += ',';
  };
  auto num = [&](const char* k, const std::string& v) {
    s += '"';
    s += k;
    s += "\":";
    s += v;
    s += ',';
  };
  str("problem", r.problem);
  num("n", std::to_string(r.n));
  num("p", std::to_string(r.p));
  num("noise_level", format_float(r.noise_level));
  num("realization", std::to_string(r.realization));
  str("rule", r.rule);
  str("config_digest", r.config_digest);
  num("chosen_alpha", format_float(r.chosen_alpha));
  num("e", format_float(r.e));
  num("e1", format_float(r.e1));
  num("l_min_size", std::to_string(r.l_min_size));
  num("l_star_min_size", std::to_string(r.l_star_min_size));
  num("c", format_float(r.c));
  num("c1", format_float(r.c1));
  num("failed", r.failed ? "true" : "false");
  num("saturated", r.saturated ? "true" : "false");
  s += "\"singleton\":";
  s += r.singleton ? "true" : "false";
  s += "}";
  return s;
}

inline ExperimentRecord from_ndjson_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    ExperimentRecord r;
    r.problem = j.at("problem").get<std::string>();
    r.n = j.at("n").get<int>();
    r.p = j.at("p").get<int>();
    r.noise_level = j.at("noise_level").get<double>();
    r.realization = j.at("realization").get<int>();
    r.rule = j.at("rule").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.chosen_alpha = j.at("chosen_alpha").get<double>();
    r.e = j.at("e").get<double>();
    r.e1 = j.at("e1").get<double>();
    r.l_min_size = j.at("l_min_size").get<std::size_t>();
    r.l_star_min_size = j.at("l_star_min_size").get<std::size_t>();
    r.c = j.at("c").get<double>();
    r.c1 = j.at("c1").get<double>();
    r.failed = j.at("failed").get<bool>();
    r.saturated = j.at("saturated").get<bool>();
    r.singleton = j.at("singleton").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("records: ") + e.what());
  }
}

inline std::string to_ndjson(const std::vector<ExperimentRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_ndjson_line(r);
    out += '\n';
  }
  return out;
}

inline std::vector<ExperimentRecord> from_ndjson(const std::string& text) {
  std::vector<ExperimentRecord> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(from_ndjson_line(line));
  return out;
}

/// Exact data of one (problem, p) pair with its shared decomposition.
struct PreparedProblem {
  std::string name;
  int p{};
  Problem exact;
  std::shared_ptr<const Decomposition> decomposition;
};

inline PreparedProblem prepare_problem(const std::string& name, int n, int p) {
  PreparedProblem out;
  out.name = name;
  out.p = p;
  out.exact = generate({name, n, p, true});
  out.decomposition = decompose(out.exact).shared_decomposition();
  return out;
}

/// Everything computed for one noisy right-hand side.
struct RunContext {
  Problem problem;
  SingularSystem sys;
  ExactReference reference;
  GridErrors errors;
  Analysis analysis;
  double delta{};
};

inline RunContext make_run(const PreparedProblem& prep, const NoiseModel& noise,
                           std::size_t level_index, int realization,
                           const AnalysisConfig& cfg) {
  auto noisy = make_noisy(prep.exact, noise, level_index, realization);
  SingularSystem sys(prep.decomposition, noisy.f);
  auto ref = make_exact_reference(sys, noisy);
  auto errors = evaluate_errors(sys, ref, cfg.grid);
  auto analysis = analyze(sys, cfg);
  const double delta = ref.delta;
  return {std::move(noisy), std::move(sys), std::move(ref), std::move(errors), std::move(analysis),
          delta};
}

inline ExperimentRecord make_record(const RunContext& run, RuleId rule, const AnalysisConfig& cfg) {
  const auto outcome =
      apply_rule(rule, run.sys, run.analysis, cfg, run.delta, &run.errors.error);
  ExperimentRecord r;
  r.rule = std::string(to_string(rule));
  r.chosen_alpha = outcome.alpha;
  const double err = outcome.grid_index ? run.errors.error[*outcome.grid_index]
                                        : solution_error(run.sys, run.reference, outcome.alpha);
  r.e = run.errors.min_error > 0 ? err / run.errors.min_error
                                 : (err == 0 ? 1.0 : std::numeric_limits<double>::infinity());
  r.e1 = run.errors.min_e1 > 0 ? err / run.errors.min_e1
                               : (err == 0 ? 1.0 : std::numeric_limits<double>::infinity());
  r.l_min_size = run.analysis.ext.size();
  r.l_star_min_size = run.analysis.restricted.l_star_min.size();
  r.c = run.analysis.constants.c;
  r.c1 = run.analysis.constants.c1;
  r.failed = r.e > kFailThreshold;
  r.saturated = outcome.saturated;
  r.singleton = singleton_or_alpha_m(run.analysis);
  return r;
}

/// Per-run hook for callers that need more than the records.
using RunObserver = std::function<void(const PreparedProblem&, std::size_t level_index,
                                       int realization, const RunContext&)>;

/// One record per (problem, p, level, realization, rule), in that order.
inline std::vector<ExperimentRecord> run_suite(const SuiteConfig& cfg,
                                               const RunObserver& observer = {}) {
  cfg.validate();
  const std::string digest = cfg.digest();
  struct Task {
    std::size_t prep;
    std::size_t level;
    int realization;
  };
  std::vector<PreparedProblem> preps;
  for (const auto& name : cfg.problems)
    for (int p : cfg.p) preps.push_back(prepare_problem(name, cfg.n, p));
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < preps.size(); ++i)
    for (std::size_t l = 0; l < cfg.noise.levels.size(); ++l)
      for (int r = 0; r < cfg.noise.realizations; ++r) tasks.push_back({i, l, r});

  std::vector<std::vector<ExperimentRecord>> slots(tasks.size());
  std::mutex observer_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      try {
        const auto& task = tasks[t];
        const auto& prep = preps[task.prep];
        const auto run = make_run(prep, cfg.noise, task.level, task.realization, cfg.analysis);
        auto& out = slots[t];
        for (RuleId rule : cfg.rules) {
          auto rec = make_record(run, rule, cfg.analysis);
          rec.problem = prep.name;
          rec.n = cfg.n;
          rec.p = prep.p;
          rec.noise_level = cfg.noise.levels[task.level];
          rec.realization = task.realization;
          rec.config_digest = digest;
          out.push_back(std::move(rec));
        }
        if (observer) {
          std::lock_guard lock(observer_mutex);
          observer(prep, task.level, task.realization, run);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
        return;
      }
    }
  };
  const unsigned nthreads = std::min<unsigned>(cfg.threads, static_cast<unsigned>(tasks.size()));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ExperimentRecord> records;
  for (auto& s : slots)
    for (auto& r : s) records.push_back(std::move(r));
  return records;
}

enum class GroupKey { problem, rule, level };

inline GroupKey parse_group_key(std::string_view s) {
  if (s == "problem") return GroupKey::problem;
  if (s == "rule") return GroupKey::rule;
  if (s == "level") return GroupKey::level;
  throw ConfigError("unknown group key: " + std::string(s));
}

inline std::string_view to_string(GroupKey k) {
  switch (k) {
    case GroupKey::problem: return "problem";
    case GroupKey::rule: return "rule";
    case GroupKey::level: return "level";
  }
  return "?";
}

struct AggregateRow {
  std::vector<std::string> keys;
  std::size_t count{};
  double avg_e{}, max_e{}, fail_pct{};
  double avg_e1{}, max_e1{};
  double avg_l_min{}, max_l_min{};
  double avg_l_star{}, max_l_star{};
  double avg_c{}, max_c{};
  double avg_c1{}, max_c1{};
  double singleton_pct{};
};

struct AggregateTable {
  std::vector<GroupKey> group_by;
  std::vector<AggregateRow> rows;
  AggregateRow total;
  bool empty() const { return total.count == 0; }
};

namespace detail {

inline AggregateRow summarize(const std::vector<const ExperimentRecord*>& rs) {
  AggregateRow row;
  row.count = rs.size();
  if (rs.empty()) return row;
  std::size_t fails = 0, singles = 0;
  for (const auto* r : rs) {
    row.avg_e += r->e;
    row.max_e = std::max(row.max_e, r->e);
    row.avg_e1 += r->e1;
    row.max_e1 = std::max(row.max_e1, r->e1);
    row.avg_l_min += static_cast<double>(r->l_min_size);
    row.max_l_min = std::max(row.max_l_min, static_cast<double>(r->l_min_size));
    row.avg_l_star += static_cast<double>(r->l_star_min_size);
    row.max_l_star = std::max(row.max_l_star, static_cast<double>(r->l_star_min_size));
    row.avg_c += r->c;
    row.max_c = std::max(row.max_c, r->c);
    row.avg_c1 += r->c1;
    row.max_c1 = std::max(row.max_c1, r->c1);
    fails += r->failed ? 1 : 0;
    singles += r->singleton ? 1 : 0;
  }
  const double n = static_cast<double>(rs.size());
  row.avg_e /= n;
  row.avg_e1 /= n;
  row.avg_l_min /= n;
  row.avg_l_star /= n;
  row.avg_c /= n;
  row.avg_c1 /= n;
  row.fail_pct = 100.0 * static_cast<double>(fails) / n;
  row.singleton_pct = 100.0 * static_cast<double>(singles) / n;
  return row;
}

inline std::string key_of(const ExperimentRecord& r, GroupKey k) {
  switch (k) {
    case GroupKey::problem: return r.problem;
    case GroupKey::rule: return r.rule;
    case GroupKey::level: return format_float(r.noise_level);
  }
  return {};
}

}  // namespace detail

/// Rows appear in first-occurrence order of their keys.
inline AggregateTable aggregate(const std::vector<ExperimentRecord>& records,
                                const std::vector<GroupKey>& group_by) {
  AggregateTable t;
  t.group_by = group_by;
  std::vector<std::vector<std::string>> order;
  std::map<std::vector<std::string>, std::vector<const ExperimentRecord*>> groups;
  std::vector<const ExperimentRecord*> all;
  for (const auto& r : records) {
    std::vector<std::string> key;
    for (GroupKey k : group_by) key.push_back(detail::key_of(r, k));
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
    all.push_back(&r);
  }
  for (const auto& key : order) {
    auto row = detail::summarize(groups[key]);
    row.keys = key;
    t.rows.push_back(std::move(row));
  }
  t.total = detail::summarize(all);
  t.total.keys.assign(group_by.size(), "total");
  return t;
}

inline constexpr const char* kAggregateColumns[] = {
    "count",      "avg_e",      "max_e",  "fail_pct", "avg_e1", "max_e1", "avg_l_min",
    "max_l_min",  "avg_l_star", "max_l_star", "avg_c", "max_c", "avg_c1", "max_c1",
    "singleton_pct"};

namespace detail {

inline std::vector<double> row_values(const AggregateRow& r) {
  return {static_cast<double>(r.count), r.avg_e,    r.max_e,      r.fail_pct, r.avg_e1,
          r.max_e1,  r.avg_l_min, r.max_l_min, r.avg_l_star, r.max_l_star, r.avg_c,
          r.max_c,   r.avg_c1,    r.max_c1,    r.singleton_pct};
}

}  // namespace detail

inline std::string render_csv(const AggregateTable& t) {
  std::string out;
  for (GroupKey k : t.group_by) {
    out += to_string(k);
    out += ',';
  }
  for (std::size_t i = 0; i < std::size(kAggregateColumns); ++i) {
    if (i) out += ',';
    out += kAggregateColumns[i];
  }
  out += '\n';
  if (t.empty()) return out + "# empty\n";
  auto line = [&](const AggregateRow& r) {
    for (const auto& k : r.keys) out += k + ",";
    const auto v = detail::row_values(r);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      out += format_float(v[i]);
    }
    out += '\n';
  };
  for (const auto& r : t.rows) line(r);
  line(t.total);
  return out;
}

inline std::string render_markdown(const AggregateTable& t) {
  std::string out = "|";
  std::string rule = "|";
  for (GroupKey k : t.group_by) {
    out += " " + std::string(to_string(k)) + " |";
    rule += "---|";
  }
  for (const char* c : kAggregateColumns) {
    out += std::string(" ") + c + " |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  if (t.empty()) return out + "\n_empty table: no records matched_\n";
  auto line = [&](const AggregateRow& r) {
    out += "|";
    for (const auto& k : r.keys) out += " " + k + " |";
    for (double v : detail::row_values(r)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.4g |", v);
      out += buf;
    }
    out += "\n";
  };
  for (const auto& r : t.rows) line(r);
  line(t.total);
  return out;
}

inline std::string render_json(const AggregateTable& t) {
  // Assembled by hand so floats keep 17 significant digits.
  std::string out = "{\"group_by\":[";
  for (std::size_t i = 0; i < t.group_by.size(); ++i) {
    if (i) out += ',';
    out += "\"" + std::string(to_string(t.group_by[i])) + "\"";
  }
  out += "],\"empty\":";
  out += t.empty() ? "true" : "false";
  auto row = [&](const AggregateRow& r) {
    std::string s = "{\"keys\":" + nlohmann::json(r.keys).dump();
    const auto v = detail::row_values(r);
    for (std::size_t i = 0; i < v.size(); ++i)
      s += ",\"" + std::string(kAggregateColumns[i]) + "\":" + format_float(v[i]);
    return s + "}";
  };
  out += ",\"rows\":[";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i) out += ',';
    out += row(t.rows[i]);
  }
  out += "]";
  if (!t.empty()) out += ",\"total\":" + row(t.total);
  out += "}\n";
  return out;
}

}  // namespace tikreg
