#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <umom/commands.hpp>
#include <umom/errors.hpp>
#include <umom/io.hpp>

#include "support.hpp"

using namespace umom;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("format_double round-trips and keeps integers short") {
  REQUIRE(format_double(4.0) == "4");
  REQUIRE(format_double(0.1) == "0.1");
  REQUIRE(format_double(-2.5) == "-2.5");
  const std::vector<double> probes = {1.0 / 3.0, 3.141592653589793, 1e-17,
                                      6.02e23,   -0.0,              42.0};
  for (const double v : probes)
    REQUIRE(parse_double(format_double(v), "probe") == v);
}

TEST_CASE("parse_double and parse_u64 reject junk") {
  REQUIRE(parse_double(" 1.5 ", "x") == 1.5);
  REQUIRE_THROWS_AS(parse_double("1.5q", "x"), ConfigError);
  REQUIRE_THROWS_AS(parse_double("", "x"), ConfigError);
  REQUIRE_THROWS_AS(parse_double("inf", "x"), ConfigError);
  REQUIRE_THROWS_WITH(parse_double("zz", "epsilon"),
                      ContainsSubstring("epsilon"));
  REQUIRE(parse_u64("42", "x") == 42);
  REQUIRE_THROWS_AS(parse_u64("-3", "x"), ConfigError);
  REQUIRE_THROWS_AS(parse_u64("4.2", "x"), ConfigError);
}

TEST_CASE("split_list trims pieces and drops empties") {
  REQUIRE(split_list("a, b ,c", ',') ==
          std::vector<std::string>{"a", "b", "c"});
  REQUIRE(split_list("", ',').empty());
  REQUIRE(split_list(" , ,", ',').empty());
}

TEST_CASE("config text parsing") {
  const auto cfg = parse_config_text(
      "# comment\n"
      "[simulate]\n"
      "N = 1024\n"
      "  k=16\n"
      "\n"
      "[estimate]\n"
      "input = data.txt\n");
  REQUIRE(cfg.sections.at("simulate").at("N") == "1024");
  REQUIRE(cfg.sections.at("simulate").at("k") == "16");
  REQUIRE(cfg.sections.at("estimate").at("input") == "data.txt");

  REQUIRE_THROWS_WITH(parse_config_text("[simulate]\nN = 1\nN = 2\n"),
                      ContainsSubstring("duplicate key"));
  REQUIRE_THROWS_WITH(parse_config_text("N = 1\n"),
                      ContainsSubstring("outside of a [section]"));
  REQUIRE_THROWS_WITH(parse_config_text("[simulate\nN = 1\n"),
                      ContainsSubstring("malformed section header"));
  REQUIRE_THROWS_WITH(parse_config_text("[simulate]\njust words\n"),
                      ContainsSubstring("expected 'key = value'"));
}

TEST_CASE("resolve_simulate reports missing and unknown keys by name") {
  const auto missing = parse_config_text("[simulate]\nN = 1024\n");
  REQUIRE_THROWS_WITH(resolve_simulate(missing, {}),
                      ContainsSubstring("missing required config keys") &&
                          ContainsSubstring("seed") &&
                          ContainsSubstring("distribution"));
  const auto unknown = parse_config_text(
      "[simulate]\ndistribution = gaussian\nN = 1024\nk = 16\nl = 4\n"
      "replicates = 1000\nseed = 1\nbogus_key = 3\n");
  REQUIRE_THROWS_WITH(resolve_simulate(unknown, {}),
                      ContainsSubstring("unknown config keys") &&
                          ContainsSubstring("bogus_key"));
}

TEST_CASE("distribution text round-trips through parse and print") {
  const std::vector<std::string> canon = {
      "gaussian(mu=0,sigma=1)", "gaussian(mu=-1.5,sigma=0.25)",
      "student_t(nu=4.5)", "pareto(alpha=3,scale=2)",
      "lognormal(mulog=0.5,sigmalog=0.75)", "rademacher"};
  for (const auto& text : canon)
    REQUIRE(to_config_string(parse_distribution(text)) == text);

  // defaults fill in; output is still canonical
  REQUIRE(to_config_string(parse_distribution("gaussian")) ==
          "gaussian(mu=0,sigma=1)");
  REQUIRE(to_config_string(parse_distribution("pareto(alpha=2.5)")) ==
          "pareto(alpha=2.5,scale=1)");

  REQUIRE_THROWS_WITH(parse_distribution("student_t"),
                      ContainsSubstring("missing parameter 'nu'"));
  REQUIRE_THROWS_WITH(parse_distribution("cauchy(x=1)"),
                      ContainsSubstring("unknown distribution family"));
  REQUIRE_THROWS_WITH(parse_distribution("gaussian(mu=1,mu=2)"),
                      ContainsSubstring("duplicate parameter"));
  REQUIRE_THROWS_WITH(parse_distribution("gaussian(width=3)"),
                      ContainsSubstring("unknown parameter"));
  REQUIRE_THROWS_AS(parse_distribution("gaussian(mu=1"), ConfigError);
}

TEST_CASE("read_data_file skips comments and reports bad lines") {
  testsupport::TempDir dir;
  const auto good = dir.path() / "good.txt";
  testsupport::write_file(good, "# header\n1.5\n\n  2.5 \n#x\n-3\n");
  REQUIRE(read_data_file(good) == std::vector<double>{1.5, 2.5, -3.0});

  const auto bad = dir.path() / "bad.txt";
  testsupport::write_file(bad, "1\nx\n3\n");
  REQUIRE_THROWS_WITH(read_data_file(bad),
                      ContainsSubstring("line 2: not a number"));

  const auto empty = dir.path() / "empty.txt";
  testsupport::write_file(empty, "# nothing\n\n");
  REQUIRE_THROWS_WITH(read_data_file(empty), ContainsSubstring("no data"));

  REQUIRE_THROWS_AS(read_data_file(dir.path() / "absent.txt"), DataError);
}

TEST_CASE("atomic_write_file leaves no temp files and creates directories") {
  testsupport::TempDir dir;
  const auto target = dir.path() / "sub" / "out.csv";
  atomic_write_file(target, "hello\n");
  REQUIRE(read_text_file(target) == "hello\n");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e :
       std::filesystem::directory_iterator(target.parent_path()))
    ++entries;
  REQUIRE(entries == 1);
  // overwrite in place
  atomic_write_file(target, "world\n");
  REQUIRE(read_text_file(target) == "world\n");
}

TEST_CASE("tail CSV header is pinned") {
  REQUIRE(std::string(kTailCsvHeader) ==
          "estimator,t,threshold,p_hat,p_stderr,c_hat,censored_flag,"
          "var_scaled,var_stderr");
  REQUIRE(std::string(kDiagnoseCsvHeader) == "metric,m,l,b,t,estimate,stderr");
  REQUIRE(std::string(kSweepCsvPrefixHeader) == "cell,distribution,k,l,T,");
}

TEST_CASE("simulate emits one CSV row per estimator and grid point") {
  const auto cfg = parse_config_text(
      "[simulate]\n"
      "distribution = gaussian\n"
      "N = 1024\nk = 16\nl = 4\n"
      "replicates = 1000\nseed = 99\n");
  const auto opt = resolve_simulate(cfg, {});
  REQUIRE(opt.study.t_grid.size() == 8);  // default grid
  REQUIRE(opt.study.estimators ==
          std::vector<std::string>{"mom", "block_umom_subsampled",
                                   "sample_mean"});
  const auto result = run_simulate_study(opt);
  std::size_t rows = 0;
  for (const char c : result.csv_text)
    if (c == '\n') ++rows;
  REQUIRE(rows == 1 + 8 * 3);
  REQUIRE(result.csv_text.rfind(kTailCsvHeader, 0) == 0);
  REQUIRE(result.comparison.has_value());
  REQUIRE(result.comparison->target_id == "block_umom_subsampled");
  REQUIRE(result.comparison->baseline_id == "mom");
}

TEST_CASE("echoed simulate config reproduces byte-identical outputs") {
  testsupport::TempDir dir_a, dir_b;
  const auto cfg = parse_config_text(
      "[simulate]\n"
      "distribution = student_t(nu=4)\n"
      "N = 256\nk = 8\nl = 2\n"
      "replicates = 1000\nseed = 31415\n"
      "out = " + dir_a.path().string() + "\n");
  const auto first = cmd_simulate(resolve_simulate(cfg, {}));
  REQUIRE(first.csv_path.filename() == "simulate_seed31415.csv");
  REQUIRE(first.json_path.filename() == "simulate_seed31415.json");

  const auto j = nlohmann::json::parse(read_text_file(first.json_path));
  const std::string echoed = j.at("config_text").get<std::string>();
  auto cfg2 = parse_config_text(echoed);
  Overrides overrides{{"out", dir_b.path().string()}};
  const auto second = cmd_simulate(resolve_simulate(cfg2, overrides));
  REQUIRE(read_text_file(second.csv_path) == read_text_file(first.csv_path));
  REQUIRE(read_text_file(second.json_path) == read_text_file(first.json_path));
}

TEST_CASE("diagnose emits exact rademacher rows") {
  DiagnoseOptions opt;
  opt.spec = make_rademacher();
  opt.distribution_text = to_config_string(opt.spec);
  opt.m_grid = {25, 100, 400};
  opt.g_replicates = 1000;
  opt.master_seed = 5;
  const auto result = run_diagnose_study(opt);
  REQUIRE(result.csv_text ==
          std::string(kDiagnoseCsvHeader) + "\n" +
              "g_m,25,,,,1.2,0\n"
              "g_m,100,,,,0.6,0\n"
              "g_m,400,,,,0.3,0\n");
  const auto j = nlohmann::json::parse(result.json_text);
  REQUIRE(j.at("hajek").is_null());
  REQUIRE(j.at("g").size() == 3);
}

TEST_CASE("resolve_diagnose validates option dependencies") {
  const auto no_work = parse_config_text(
      "[diagnose]\ndistribution = gaussian\nseed = 1\n");
  REQUIRE_THROWS_WITH(resolve_diagnose(no_work, {}),
                      ContainsSubstring("nothing to diagnose"));
  const auto orphan_g = parse_config_text(
      "[diagnose]\ndistribution = gaussian\nseed = 1\ng_replicates = 500\n");
  REQUIRE_THROWS_WITH(resolve_diagnose(orphan_g, {}),
                      ContainsSubstring("g_replicates requires m_grid"));
  const auto partial_plan = parse_config_text(
      "[diagnose]\ndistribution = gaussian\nseed = 1\nk = 4\nl = 4\n");
  REQUIRE_THROWS_WITH(resolve_diagnose(partial_plan, {}),
                      ContainsSubstring("all of k, l and b"));
  const auto orphan_t = parse_config_text(
      "[diagnose]\ndistribution = gaussian\nseed = 1\nm_grid = 4,16\nt = 1\n");
  REQUIRE_THROWS_WITH(resolve_diagnose(orphan_t, {}),
                      ContainsSubstring("require k, l and b"));
  const auto bad_grid = parse_config_text(
      "[diagnose]\ndistribution = gaussian\nseed = 1\nm_grid = 16,4\n");
  REQUIRE_THROWS_WITH(resolve_diagnose(bad_grid, {}),
                      ContainsSubstring("strictly increasing"));

  const auto auto_t = parse_config_text(
      "[diagnose]\ndistribution = gaussian\nseed = 1\n"
      "k = 16\nl = 8\nb = 16\nouter_replicates = 100\n"
      "inner_replicates = 100\n");
  const auto opt = resolve_diagnose(auto_t, {});
  const auto r = theorem_range(16 * 8, 8, 8 * 16, 1.0);
  REQUIRE(opt.t == Catch::Approx(std::sqrt(r.L * r.M)));
}

TEST_CASE("estimate resolution and defaults") {
  const auto cfg = parse_config_text(
      "[estimate]\ninput = x.txt\nk = 4\n");
  const auto opt = resolve_estimate(cfg, {});
  REQUIRE(opt.l == 1);
  REQUIRE(opt.T_text == "exact");
  REQUIRE(opt.format == "json");

  const auto sub_no_seed = parse_config_text(
      "[estimate]\ninput = x.txt\nk = 4\nl = 2\nT = 100\n");
  REQUIRE_THROWS_WITH(resolve_estimate(sub_no_seed, {}),
                      ContainsSubstring("seed is required"));
}

TEST_CASE("resolve_sweep validates the whole grid upfront") {
  const auto oversize = parse_config_text(
      "[sweep]\ndistributions = gaussian\nN = 4096\n"
      "k_values = 1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,"
      "23,24,25,26,27,28,29,30,31,32,33,34,35,36,37,38,39,40,41,42,43,44,45,"
      "46,47,48,49,50,51,52,53,54,55,56,57,58,59,60,61,62,63,64,65,66,67,68,"
      "69,70,71,72,73,74,75,76,77,78,79,80,81,82,83,84,85,86,87,88,89,90,91,"
      "92,93,94,95,96,97,98,99,100,101\n"
      "l_values = 1,2\nT_values = "
      "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23,24,25,26,"
      "27,28,29,30,31,32,33,34,35,36,37,38,39,40,41,42,43,44,45,46,47,48,49,"
      "50\nreplicates = 1000\nseed = 1\n");
  REQUIRE_THROWS_WITH(resolve_sweep(oversize, {}),
                      ContainsSubstring("sweep grid too large"));

  const auto bad_plan = parse_config_text(
      "[sweep]\ndistributions = gaussian\nN = 64\nk_values = 4,70\n"
      "l_values = 1\nreplicates = 1000\nseed = 1\n");
  REQUIRE_THROWS_AS(resolve_sweep(bad_plan, {}), ConfigError);

  const auto over_cap = parse_config_text(
      "[sweep]\ndistributions = gaussian\nN = 4096\nk_values = 8\n"
      "l_values = 16\nestimators = block_umom_exact\n"
      "replicates = 1000\nseed = 1\n");
  REQUIRE_THROWS_AS(resolve_sweep(over_cap, {}), CapacityError);
}
