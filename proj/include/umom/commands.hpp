#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "umom/diagnostics.hpp"
#include "umom/harness.hpp"
#include "umom/io.hpp"
#include "umom/version.hpp"

namespace umom {

// ---------------------------------------------------------------------------
// Shared option plumbing. Resolvers merge a config-file section with
// command-line overrides, validate everything up front (unknown keys are
// errors), and produce a canonical echo of the result-determining keys.
// Scheduling keys (threads) and output keys (out, format) are deliberately
// excluded from the echo: results are byte-identical regardless, and the
// echo fed back must reproduce them.
// ---------------------------------------------------------------------------

using Overrides = std::map<std::string, std::string>;

struct OutputSelection {
  bool csv = true;
  bool json = true;
};

inline OutputSelection parse_format(const std::string& f) {
  if (f == "csv") return {true, false};
  if (f == "json") return {false, true};
  if (f == "both") return {true, true};
  throw ConfigError("format must be csv, json or both");
}

inline unsigned parse_threads(const std::string& s) {
  if (s == "auto") return 0;
  const std::uint64_t v = parse_u64(s, "threads");
  if (v == 0 || v > 4096) throw ConfigError("threads must be in [1, 4096] or auto");
  return static_cast<unsigned>(v);
}

// Moment index used when deriving t ranges automatically: 1 when all
// moments exist, otherwise safely inside the open bound (0.9 * epsilon_max).
inline double auto_epsilon(const DistributionSpec& spec) {
  if (std::isinf(spec.epsilon_max)) return 1.0;
  return std::min(1.0, 0.9 * spec.epsilon_max);
}

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid(points);
  const double ratio = hi / lo;
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = lo * std::pow(ratio, static_cast<double>(i) /
                                       static_cast<double>(points - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

// Default 8-point t grid: geometric inside [max(L, 0.5), M] for the study's
// own geometry; falls back to [0.5, 8] when that range is empty.
inline std::vector<double> default_t_grid(const DistributionSpec& spec,
                                          std::size_t N, std::size_t k,
                                          std::size_t l) {
  const BlockPlan plan = make_block_plan(N, k, l);
  const TheoremRange r =
      theorem_range(plan.n, plan.l, plan.m, auto_epsilon(spec));
  double lo = std::max(r.L, 0.5);
  double hi = r.M;
  if (!(hi > lo)) {
    lo = 0.5;
    hi = 8.0;
  }
  return geometric_grid(lo, hi, 8);
}

inline std::vector<double> parse_t_grid(const std::string& text) {
  const auto pieces = split_list(text, ',');
  if (pieces.empty()) throw ConfigError("t_grid: empty list");
  std::vector<double> grid;
  grid.reserve(pieces.size());
  for (const auto& p : pieces) grid.push_back(parse_double(p, "t_grid"));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw ConfigError("t_grid must be strictly increasing");
  if (!(grid.front() > 0.0)) throw ConfigError("t_grid must be positive");
  return grid;
}

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

inline std::string join_strings(const std::vector<std::string>& xs,
                                const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  DeviationStudyConfig study;
  std::string distribution_text;
  std::string out_dir = ".";
  std::string format = "both";
};

inline SimulateOptions resolve_simulate(const ConfigFile& cfg,
                                        const Overrides& overrides) {
  Settings s = Settings::from(cfg, "simulate", overrides);
  const std::string dist_s = s.require("distribution");
  const std::string N_s = s.require("N");
  const std::string k_s = s.require("k");
  const std::string l_s = s.require("l");
  const std::string reps_s = s.require("replicates");
  const std::string seed_s = s.require("seed");
  const std::string T_s = s.take("T").value_or("auto");
  const std::string est_s =
      s.take("estimators").value_or("mom,block_umom_subsampled,sample_mean");
  const std::string grid_s = s.take("t_grid").value_or("auto");
  const std::string threads_s = s.take("threads").value_or("auto");
  SimulateOptions opt;
  opt.out_dir = s.take("out").value_or(".");
  opt.format = s.take("format").value_or("both");
  s.finish("simulate");

  opt.study.spec = parse_distribution(dist_s);
  opt.distribution_text = to_config_string(opt.study.spec);
  opt.study.N = parse_u64(N_s, "N");
  opt.study.k = parse_u64(k_s, "k");
  opt.study.l = parse_u64(l_s, "l");
  opt.study.replicates = parse_u64(reps_s, "replicates");
  if (opt.study.replicates < 1000)
    throw ConfigError("replicates must be at least 1000 for tail studies");
  opt.study.master_seed = parse_u64(seed_s, "seed");
  if (T_s == "auto") {
    opt.study.T = 0;
  } else {
    opt.study.T = parse_u64(T_s, "T");
    if (opt.study.T == 0) throw ConfigError("T must be positive or auto");
  }
  opt.study.estimators = split_list(est_s, ',');
  if (opt.study.estimators.empty()) throw ConfigError("estimators: empty list");
  for (std::size_t i = 0; i < opt.study.estimators.size(); ++i)
    for (std::size_t j = i + 1; j < opt.study.estimators.size(); ++j)
      if (opt.study.estimators[i] == opt.study.estimators[j])
        throw ConfigError("duplicate estimator: " + opt.study.estimators[i]);
  opt.study.threads = parse_threads(threads_s);
  parse_format(opt.format);

  // Validates the plan (and therefore l*k <= N) before any simulation.
  opt.study.t_grid =
      grid_s == "auto"
          ? default_t_grid(opt.study.spec, opt.study.N, opt.study.k, opt.study.l)
          : parse_t_grid(grid_s);
  make_block_plan(opt.study.N, opt.study.k, opt.study.l);
  return opt;
}

// Canonical echo of the result-determining simulate keys; T and t_grid are
// echoed in resolved form, so the echo is a fixed point of resolution.
inline std::string simulate_config_text(const SimulateOptions& opt) {
  const BlockPlan plan =
      make_block_plan(opt.study.N, opt.study.k, opt.study.l);
  const std::uint64_t T_eff =
      opt.study.T != 0 ? opt.study.T : default_T(plan.n, plan.l);
  std::string text = "[simulate]\n";
  text += "distribution = " + opt.distribution_text + "\n";
  text += "N = " + std::to_string(opt.study.N) + "\n";
  text += "k = " + std::to_string(opt.study.k) + "\n";
  text += "l = " + std::to_string(opt.study.l) + "\n";
  text += "T = " + std::to_string(T_eff) + "\n";
  text += "estimators = " + join_strings(opt.study.estimators) + "\n";
  text += "replicates = " + std::to_string(opt.study.replicates) + "\n";
  text += "t_grid = " + join_doubles(opt.study.t_grid) + "\n";
  text += "seed = " + std::to_string(opt.study.master_seed) + "\n";
  return text;
}

struct SimulateResult {
  std::vector<TailCurve> curves;
  std::optional<ComparisonTable> comparison;
  std::string config_text;
  std::string csv_text;
  std::string json_text;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
};

inline SimulateResult run_simulate_study(const SimulateOptions& opt) {
  DeviationStudyConfig study = opt.study;
  const BlockPlan plan = make_block_plan(study.N, study.k, study.l);
  if (study.T == 0) study.T = default_T(plan.n, plan.l);
  const ErrorMatrix matrix = run_replicates(study);

  SimulateResult result;
  result.config_text = simulate_config_text(opt);
  result.curves.reserve(matrix.estimator_ids.size());
  for (std::size_t e = 0; e < matrix.estimator_ids.size(); ++e)
    result.curves.push_back(tail_curve(matrix.column(e), study.spec.sigma,
                                       study.N, study.t_grid,
                                       matrix.estimator_ids[e]));
  const TailCurve* mom_curve = nullptr;
  const TailCurve* target_curve = nullptr;
  for (const auto& c : result.curves) {
    if (c.estimator_id == "mom") mom_curve = &c;
    if (c.estimator_id == "block_umom_exact") target_curve = &c;
  }
  if (!target_curve)
    for (const auto& c : result.curves)
      if (c.estimator_id == "block_umom_subsampled") target_curve = &c;
  if (mom_curve && target_curve)
    result.comparison = compare_estimators(*target_curve, *mom_curve);

  result.csv_text = tail_curves_csv(result.curves);
  nlohmann::json j{
      {"command", "simulate"},
      {"version", kVersion},
      {"master_seed", study.master_seed},
      {"config_text", result.config_text},
      {"curves", json_of_curves(result.curves)},
      {"comparison", result.comparison ? json_of_comparison(*result.comparison)
                                       : nlohmann::json(nullptr)}};
  result.json_text = j.dump(2) + "\n";
  return result;
}

inline SimulateResult cmd_simulate(const SimulateOptions& opt) {
  SimulateResult result = run_simulate_study(opt);
  const OutputSelection sel = parse_format(opt.format);
  const std::filesystem::path dir(opt.out_dir);
  const std::string base =
      "simulate_seed" + std::to_string(opt.study.master_seed);
  if (sel.csv) {
    result.csv_path = dir / (base + ".csv");
    atomic_write_file(result.csv_path, result.csv_text);
  }
  if (sel.json) {
    result.json_path = dir / (base + ".json");
    atomic_write_file(result.json_path, result.json_text);
  }
  return result;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

struct DiagnoseOptions {
  DistributionSpec spec;
  std::string distribution_text;
  std::vector<std::size_t> m_grid;  // empty: skip g(m)
  std::size_t g_replicates = 1'000'000;
  bool has_hajek = false;
  std::size_t k = 0, l = 0, b = 0;
  double t = 0.0;
  double epsilon = 1.0;
  std::size_t outer_replicates = 5000;
  std::size_t inner_replicates = 2000;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;
  std::string out_dir = ".";
  std::string format = "both";
};

inline DiagnoseOptions resolve_diagnose(const ConfigFile& cfg,
                                        const Overrides& overrides) {
  Settings s = Settings::from(cfg, "diagnose", overrides);
  const std::string dist_s = s.require("distribution");
  const std::string seed_s = s.require("seed");
  const auto m_grid_s = s.take("m_grid");
  const auto g_reps_s = s.take("g_replicates");
  const auto k_s = s.take("k");
  const auto l_s = s.take("l");
  const auto b_s = s.take("b");
  const auto t_s = s.take("t");
  const auto eps_s = s.take("epsilon");
  const auto outer_s = s.take("outer_replicates");
  const auto inner_s = s.take("inner_replicates");
  const std::string threads_s = s.take("threads").value_or("auto");
  DiagnoseOptions opt;
  opt.out_dir = s.take("out").value_or(".");
  opt.format = s.take("format").value_or("both");
  s.finish("diagnose");

  opt.spec = parse_distribution(dist_s);
  opt.distribution_text = to_config_string(opt.spec);
  opt.master_seed = parse_u64(seed_s, "seed");
  opt.threads = parse_threads(threads_s);
  parse_format(opt.format);

  if (m_grid_s) {
    for (const auto& piece : split_list(*m_grid_s, ','))
      opt.m_grid.push_back(parse_u64(piece, "m_grid"));
    if (opt.m_grid.empty()) throw ConfigError("m_grid: empty list");
    for (std::size_t i = 0; i + 1 < opt.m_grid.size(); ++i)
      if (!(opt.m_grid[i] < opt.m_grid[i + 1]))
        throw ConfigError("m_grid must be strictly increasing");
    if (opt.m_grid.front() == 0) throw ConfigError("m_grid entries must be positive");
    if (g_reps_s) opt.g_replicates = parse_u64(*g_reps_s, "g_replicates");
    if (opt.g_replicates < 100)
      throw ConfigError("g_replicates must be at least 100");
  } else if (g_reps_s) {
    throw ConfigError("g_replicates requires m_grid");
  }

  opt.has_hajek = k_s || l_s || b_s;
  if (opt.has_hajek) {
    if (!k_s || !l_s || !b_s)
      throw ConfigError("hajek variance needs all of k, l and b");
    opt.k = parse_u64(*k_s, "k");
    opt.l = parse_u64(*l_s, "l");
    opt.b = parse_u64(*b_s, "b");
    if (opt.k == 0 || opt.l == 0 || opt.b == 0)
      throw ConfigError("k, l and b must be positive");
    if (outer_s) opt.outer_replicates = parse_u64(*outer_s, "outer_replicates");
    if (inner_s) opt.inner_replicates = parse_u64(*inner_s, "inner_replicates");
    if (opt.outer_replicates < 100 || opt.inner_replicates < 100)
      throw ConfigError("outer_replicates and inner_replicates must be at least 100");
    const std::string eps_text = eps_s.value_or("auto");
    opt.epsilon = eps_text == "auto" ? auto_epsilon(opt.spec)
                                     : parse_double(eps_text, "epsilon");
    if (!(opt.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    const std::string t_text = t_s.value_or("auto");
    if (t_text == "auto") {
      const std::size_t n = opt.l * opt.k;
      const std::size_t m = opt.l * opt.b;
      const TheoremRange r = theorem_range(n, opt.l, m, opt.epsilon);
      const double mid = std::sqrt(r.L * r.M);
      if (!(mid > 0.0) || !std::isfinite(mid))
        throw ConfigError("cannot derive t automatically; specify t");
      opt.t = mid;
    } else {
      opt.t = parse_double(t_text, "t");
      if (!(opt.t > 0.0)) throw ConfigError("t must be positive");
    }
  } else if (t_s || eps_s || outer_s || inner_s) {
    throw ConfigError("t, epsilon, outer_replicates and inner_replicates require k, l and b");
  }

  if (opt.m_grid.empty() && !opt.has_hajek)
    throw ConfigError("nothing to diagnose: provide m_grid or (k, l, b)");
  return opt;
}

inline std::string diagnose_config_text(const DiagnoseOptions& opt) {
  std::string text = "[diagnose]\n";
  text += "distribution = " + opt.distribution_text + "\n";
  if (!opt.m_grid.empty()) {
    std::string grid;
    for (std::size_t i = 0; i < opt.m_grid.size(); ++i) {
      if (i) grid += ',';
      grid += std::to_string(opt.m_grid[i]);
    }
    text += "m_grid = " + grid + "\n";
    text += "g_replicates = " + std::to_string(opt.g_replicates) + "\n";
  }
  if (opt.has_hajek) {
    text += "k = " + std::to_string(opt.k) + "\n";
    text += "l = " + std::to_string(opt.l) + "\n";
    text += "b = " + std::to_string(opt.b) + "\n";
    text += "t = " + format_double(opt.t) + "\n";
    text += "epsilon = " + format_double(opt.epsilon) + "\n";
    text += "outer_replicates = " + std::to_string(opt.outer_replicates) + "\n";
    text += "inner_replicates = " + std::to_string(opt.inner_replicates) + "\n";
  }
  text += "seed = " + std::to_string(opt.master_seed) + "\n";
  return text;
}

struct DiagnosticsReport {
  std::vector<std::size_t> m_grid;
  std::vector<std::pair<double, double>> g;  // (estimate, stderr) per m
  bool has_hajek = false;
  std::size_t k = 0, l = 0, b = 0;
  double t_used = 0.0;
  double hajek_var = 0.0;
  double hajek_var_stderr = 0.0;
};

inline constexpr const char* kDiagnoseCsvHeader = "metric,m,l,b,t,estimate,stderr";

struct DiagnoseResult {
  DiagnosticsReport report;
  std::string config_text;
  std::string csv_text;
  std::string json_text;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
};

inline DiagnoseResult run_diagnose_study(const DiagnoseOptions& opt) {
  DiagnoseResult result;
  result.config_text = diagnose_config_text(opt);
  auto& report = result.report;
  report.m_grid = opt.m_grid;
  if (!opt.m_grid.empty()) {
    Rng rng(stream_seed(opt.master_seed, 0));
    report.g = g_of_m_grid(opt.spec, opt.m_grid, opt.g_replicates, rng);
  }
  if (opt.has_hajek) {
    report.has_hajek = true;
    report.k = opt.k;
    report.l = opt.l;
    report.b = opt.b;
    report.t_used = opt.t;
    const BlockPlan plan =
        make_block_plan(opt.l * opt.k * opt.b, opt.k, opt.l);
    const auto [est, se] =
        hajek_variance(opt.spec, plan, opt.t, opt.outer_replicates,
                       opt.inner_replicates, stream_seed(opt.master_seed, 1),
                       opt.threads);
    report.hajek_var = est;
    report.hajek_var_stderr = se;
  }

  std::string csv(kDiagnoseCsvHeader);
  csv += '\n';
  for (std::size_t i = 0; i < report.m_grid.size(); ++i) {
    csv += "g_m," + std::to_string(report.m_grid[i]) + ",,,," +
           format_double(report.g[i].first) + ',' +
           format_double(report.g[i].second) + '\n';
  }
  if (report.has_hajek) {
    csv += "hajek_var,," + std::to_string(report.l) + ',' +
           std::to_string(report.b) + ',' + format_double(report.t_used) +
           ',' + format_double(report.hajek_var) + ',' +
           format_double(report.hajek_var_stderr) + '\n';
  }
  result.csv_text = csv;

  nlohmann::json g_rows = nlohmann::json::array();
  for (std::size_t i = 0; i < report.m_grid.size(); ++i)
    g_rows.push_back({{"m", report.m_grid[i]},
                      {"estimate", report.g[i].first},
                      {"stderr", report.g[i].second}});
  nlohmann::json j{
      {"command", "diagnose"},
      {"version", kVersion},
      {"master_seed", opt.master_seed},
      {"config_text", result.config_text},
      {"g", g_rows},
      {"hajek", report.has_hajek
                    ? nlohmann::json{{"k", report.k},
                                     {"l", report.l},
                                     {"b", report.b},
                                     {"t", report.t_used},
                                     {"estimate", report.hajek_var},
                                     {"stderr", report.hajek_var_stderr}}
                    : nlohmann::json(nullptr)}};
  result.json_text = j.dump(2) + "\n";
  return result;
}

inline DiagnoseResult cmd_diagnose(const DiagnoseOptions& opt) {
  DiagnoseResult result = run_diagnose_study(opt);
  const OutputSelection sel = parse_format(opt.format);
  const std::filesystem::path dir(opt.out_dir);
  const std::string base =
      "diagnose_seed" + std::to_string(opt.master_seed);
  if (sel.csv) {
    result.csv_path = dir / (base + ".csv");
    atomic_write_file(result.csv_path, result.csv_text);
  }
  if (sel.json) {
    result.json_path = dir / (base + ".json");
    atomic_write_file(result.json_path, result.json_text);
  }
  return result;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateOptions {
  std::string input;
  std::size_t k = 0;
  std::size_t l = 1;
  std::string T_text = "exact";  // "exact", "auto" or a positive integer
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> shuffle_seed;
  std::string out_dir = ".";
  std::string format = "json";
};

inline EstimateOptions resolve_estimate(const ConfigFile& cfg,
                                        const Overrides& overrides) {
  Settings s = Settings::from(cfg, "estimate", overrides);
  const std::string input_s = s.require("input");
  const std::string k_s = s.require("k");
  const std::string l_s = s.take("l").value_or("1");
  EstimateOptions opt;
  opt.T_text = s.take("T").value_or("exact");
  const auto seed_s = s.take("seed");
  const auto shuffle_s = s.take("shuffle_seed");
  opt.out_dir = s.take("out").value_or(".");
  opt.format = s.take("format").value_or("json");
  s.finish("estimate");

  opt.input = input_s;
  opt.k = parse_u64(k_s, "k");
  opt.l = parse_u64(l_s, "l");
  if (opt.k == 0 || opt.l == 0) throw ConfigError("k and l must be positive");
  if (opt.T_text != "exact" && opt.T_text != "auto") {
    if (parse_u64(opt.T_text, "T") == 0)
      throw ConfigError("T must be positive, auto or exact");
  }
  if (seed_s) opt.seed = parse_u64(*seed_s, "seed");
  if (shuffle_s) opt.shuffle_seed = parse_u64(*shuffle_s, "shuffle_seed");
  if (opt.T_text != "exact" && !opt.seed)
    throw ConfigError("seed is required for the subsampled design");
  parse_format(opt.format);
  return opt;
}

struct EstimateResult {
  EstimateReport report;
  std::string value_line;  // full-precision value, newline-terminated
  std::string json_text;
  std::filesystem::path json_path;
};

inline EstimateResult cmd_estimate(const EstimateOptions& opt) {
  SampleBatch batch = make_batch(read_data_file(opt.input));
  if (opt.shuffle_seed) batch = shuffle_batch(batch, *opt.shuffle_seed);
  const BlockPlan plan = make_block_plan(batch.count(), opt.k, opt.l);

  EstimateResult result;
  if (opt.T_text == "exact") {
    result.report = opt.l == 1 ? mom_estimate(batch, opt.k)
                               : block_umom_exact(batch, plan);
  } else {
    const std::uint64_t T = opt.T_text == "auto"
                                ? default_T(plan.n, plan.l)
                                : parse_u64(opt.T_text, "T");
    result.report = block_umom_subsampled(batch, plan, T, *opt.seed);
  }
  result.value_line = format_double(result.report.value) + "\n";

  nlohmann::json j{{"command", "estimate"},
                   {"version", kVersion},
                   {"input", opt.input},
                   {"estimator_id", result.report.estimator_id},
                   {"value", result.report.value},
                   {"plan", json_of_plan(result.report.plan)},
                   {"design", json_of_design(result.report.design)},
                   {"subset_means_evaluated", result.report.subset_means_evaluated},
                   {"discarded_tail", result.report.discarded_tail},
                   {"shuffle_seed", opt.shuffle_seed
                                        ? nlohmann::json(*opt.shuffle_seed)
                                        : nlohmann::json(nullptr)}};
  result.json_text = j.dump(2) + "\n";
  result.json_path = std::filesystem::path(opt.out_dir) / "estimate.json";
  atomic_write_file(result.json_path, result.json_text);
  return result;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
  std::vector<DistributionSpec> specs;
  std::vector<std::string> spec_texts;
  std::size_t N = 0;
  std::vector<std::size_t> k_values;
  std::vector<std::size_t> l_values;
  std::vector<std::string> T_values;  // "auto" or positive integers
  std::vector<std::string> estimators;
  std::size_t replicates = 0;
  std::string t_grid_text = "auto";
  std::uint64_t master_seed = 0;
  unsigned threads = 0;
  std::string out_dir = ".";
  std::string format = "both";
};

inline constexpr std::size_t kMaxSweepCells = 10'000;

inline SweepOptions resolve_sweep(const ConfigFile& cfg,
                                  const Overrides& overrides) {
  Settings s = Settings::from(cfg, "sweep", overrides);
  const std::string dists_s = s.require("distributions");
  const std::string N_s = s.require("N");
  const std::string k_s = s.require("k_values");
  const std::string l_s = s.require("l_values");
  const std::string reps_s = s.require("replicates");
  const std::string seed_s = s.require("seed");
  const std::string T_s = s.take("T_values").value_or("auto");
  const std::string est_s =
      s.take("estimators").value_or("mom,block_umom_subsampled,sample_mean");
  SweepOptions opt;
  opt.t_grid_text = s.take("t_grid").value_or("auto");
  const std::string threads_s = s.take("threads").value_or("auto");
  opt.out_dir = s.take("out").value_or(".");
  opt.format = s.take("format").value_or("both");
  s.finish("sweep");

  for (const auto& piece : split_list(dists_s, ';')) {
    opt.specs.push_back(parse_distribution(piece));
    opt.spec_texts.push_back(to_config_string(opt.specs.back()));
  }
  if (opt.specs.empty()) throw ConfigError("distributions: empty list");
  opt.N = parse_u64(N_s, "N");
  for (const auto& piece : split_list(k_s, ','))
    opt.k_values.push_back(parse_u64(piece, "k_values"));
  for (const auto& piece : split_list(l_s, ','))
    opt.l_values.push_back(parse_u64(piece, "l_values"));
  if (opt.k_values.empty() || opt.l_values.empty())
    throw ConfigError("k_values and l_values must be nonempty");
  opt.T_values = split_list(T_s, ',');
  if (opt.T_values.empty()) throw ConfigError("T_values: empty list");
  for (const auto& t : opt.T_values)
    if (t != "auto" && parse_u64(t, "T_values") == 0)
      throw ConfigError("T_values entries must be positive or auto");
  opt.estimators = split_list(est_s, ',');
  if (opt.estimators.empty()) throw ConfigError("estimators: empty list");
  opt.replicates = parse_u64(reps_s, "replicates");
  if (opt.replicates < 1000)
    throw ConfigError("replicates must be at least 1000 for tail studies");
  opt.master_seed = parse_u64(seed_s, "seed");
  opt.threads = parse_threads(threads_s);
  parse_format(opt.format);
  if (opt.t_grid_text != "auto") parse_t_grid(opt.t_grid_text);

  const std::size_t cells = opt.specs.size() * opt.k_values.size() *
                            opt.l_values.size() * opt.T_values.size();
  if (cells > kMaxSweepCells)
    throw ConfigError("sweep grid too large: " + std::to_string(cells) +
                      " cells (max " + std::to_string(kMaxSweepCells) + ")");
  // Validate every cell before running any: plans must fit, and exact
  // designs must be under the enumeration cap.
  const bool wants_exact =
      std::find(opt.estimators.begin(), opt.estimators.end(),
                "block_umom_exact") != opt.estimators.end();
  for (const std::size_t k : opt.k_values)
    for (const std::size_t l : opt.l_values) {
      const BlockPlan plan = make_block_plan(opt.N, k, l);
      if (wants_exact) {
        const auto count = binomial_saturating(plan.n, plan.l);
        if (!count || *count > kEnumerationCap)
          throw CapacityError("design too large; use subsampled variant");
      }
    }
  return opt;
}

struct SweepCell {
  std::size_t index = 0;
  std::string distribution_text;
  std::size_t k = 0, l = 0;
  std::uint64_t T_eff = 0;
  std::filesystem::path csv_path;
  bool recomputed = false;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::filesystem::path merged_path;
  std::string merged_text;
};

inline constexpr const char* kSweepCsvPrefixHeader = "cell,distribution,k,l,T,";

// Runs the (distribution, k, l, T) grid. Each cell is a full simulate study
// sharing the master seed, so batches are paired across cells with the same
// distribution. Existing cell files are kept as-is (resume), and the merged
// long-format CSV is rebuilt from the cell files.
inline SweepResult cmd_sweep(const SweepOptions& opt) {
  SweepResult result;
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  std::size_t index = 0;
  for (std::size_t d = 0; d < opt.specs.size(); ++d)
    for (const std::size_t k : opt.k_values)
      for (const std::size_t l : opt.l_values)
        for (const std::string& T_text : opt.T_values) {
          SweepCell cell;
          cell.index = index++;
          cell.distribution_text = opt.spec_texts[d];
          cell.k = k;
          cell.l = l;
          const BlockPlan plan = make_block_plan(opt.N, k, l);
          cell.T_eff = T_text == "auto" ? default_T(plan.n, plan.l)
                                        : parse_u64(T_text, "T_values");
          cell.csv_path =
              dir / ("sweep_cell" + std::to_string(cell.index) + "_seed" +
                     std::to_string(opt.master_seed) + ".csv");
          if (!std::filesystem::exists(cell.csv_path)) {
            SimulateOptions sim;
            sim.study.spec = opt.specs[d];
            sim.distribution_text = opt.spec_texts[d];
            sim.study.N = opt.N;
            sim.study.k = k;
            sim.study.l = l;
            sim.study.T = cell.T_eff;
            sim.study.estimators = opt.estimators;
            sim.study.replicates = opt.replicates;
            sim.study.t_grid =
                opt.t_grid_text == "auto"
                    ? default_t_grid(sim.study.spec, opt.N, k, l)
                    : parse_t_grid(opt.t_grid_text);
            sim.study.master_seed = opt.master_seed;
            sim.study.threads = opt.threads;
            const SimulateResult cell_result = run_simulate_study(sim);
            atomic_write_file(cell.csv_path, cell_result.csv_text);
            cell.recomputed = true;
          }
          result.cells.push_back(cell);
        }

  std::string merged(kSweepCsvPrefixHeader);
  merged += kTailCsvHeader;
  merged += '\n';
  for (const auto& cell : result.cells) {
    const std::string text = read_text_file(cell.csv_path);
    std::string prefix = std::to_string(cell.index) + ",\"" +
                         cell.distribution_text + "\"," +
                         std::to_string(cell.k) + ',' +
                         std::to_string(cell.l) + ',' +
                         std::to_string(cell.T_eff) + ',';
    std::size_t pos = text.find('\n');  // skip the cell header line
    while (pos != std::string::npos && pos + 1 < text.size()) {
      const std::size_t end = text.find('\n', pos + 1);
      const std::string line =
          text.substr(pos + 1, end == std::string::npos ? std::string::npos
                                                        : end - pos - 1);
      if (!line.empty()) merged += prefix + line + '\n';
      pos = end;
    }
  }
  result.merged_text = merged;
  result.merged_path =
      dir / ("sweep_seed" + std::to_string(opt.master_seed) + ".csv");
  atomic_write_file(result.merged_path, result.merged_text);
  return result;
}

}  // namespace umom
