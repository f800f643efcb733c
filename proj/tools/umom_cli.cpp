#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <umom/commands.hpp>
#include <umom/version.hpp>

namespace {

// Flags become config overrides only when the user actually passed them, so
// config-file values are never clobbered by defaults.
struct FlagSet {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> bound;

  void bind(CLI::App* sub, const char* flag, const std::string& key,
            const char* desc) {
    bound.emplace_back(key, sub->add_option(flag, values[key], desc));
  }

  umom::Overrides overrides() const {
    umom::Overrides out;
    for (const auto& [key, opt] : bound)
      if (opt->count() > 0) out[key] = values.at(key);
    return out;
  }
};

umom::ConfigFile load_config(const std::string& path) {
  if (path.empty()) return umom::ConfigFile{};
  try {
    return umom::parse_config_text(umom::read_text_file(path));
  } catch (const umom::DataError& e) {
    throw umom::ConfigError(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Overlapping-block median-of-means estimation and Monte Carlo "
      "benchmarking"};
  app.set_version_flag("--version", umom::kVersion);
  app.require_subcommand(1);

  std::string estimate_config, simulate_config, diagnose_config, sweep_config;

  auto* estimate =
      app.add_subcommand("estimate", "Estimate the mean of a data file");
  estimate->add_option("--config", estimate_config, "Config file with an [estimate] section");
  FlagSet estimate_flags;
  estimate_flags.bind(estimate, "--input", "input", "Data file, one number per line");
  estimate_flags.bind(estimate, "--k", "k", "Number of groups");
  estimate_flags.bind(estimate, "--l", "l", "Subset order (default 1)");
  estimate_flags.bind(estimate, "--T", "T", "Subsample count, 'auto' or 'exact' (default exact)");
  estimate_flags.bind(estimate, "--seed", "seed", "Seed for the subsampled design");
  estimate_flags.bind(estimate, "--shuffle-seed", "shuffle_seed", "Pre-shuffle the data with this seed");
  estimate_flags.bind(estimate, "--out", "out", "Output directory (default .)");
  estimate_flags.bind(estimate, "--format", "format", "Report format (json)");

  auto* simulate =
      app.add_subcommand("simulate", "Deviation tails over synthetic replicates");
  simulate->add_option("--config", simulate_config, "Config file with a [simulate] section")
      ->required();
  FlagSet simulate_flags;
  simulate_flags.bind(simulate, "--out", "out", "Output directory (default .)");
  simulate_flags.bind(simulate, "--seed", "seed", "Master seed");
  simulate_flags.bind(simulate, "--threads", "threads", "Worker threads or 'auto'");
  simulate_flags.bind(simulate, "--format", "format", "csv, json or both");
  simulate_flags.bind(simulate, "--k", "k", "Number of groups");
  simulate_flags.bind(simulate, "--l", "l", "Subset order");
  simulate_flags.bind(simulate, "--T", "T", "Subsample count or 'auto'");
  simulate_flags.bind(simulate, "--replicates", "replicates", "Monte Carlo replicates");
  simulate_flags.bind(simulate, "--grid", "t_grid", "Comma-separated t grid or 'auto'");

  auto* diagnose =
      app.add_subcommand("diagnose", "Normal-approximation and projection diagnostics");
  diagnose->add_option("--config", diagnose_config, "Config file with a [diagnose] section")
      ->required();
  FlagSet diagnose_flags;
  diagnose_flags.bind(diagnose, "--out", "out", "Output directory (default .)");
  diagnose_flags.bind(diagnose, "--seed", "seed", "Master seed");
  diagnose_flags.bind(diagnose, "--threads", "threads", "Worker threads or 'auto'");
  diagnose_flags.bind(diagnose, "--format", "format", "csv, json or both");

  auto* sweep =
      app.add_subcommand("sweep", "Grid of simulate studies with a merged CSV");
  sweep->add_option("--config", sweep_config, "Config file with a [sweep] section")
      ->required();
  FlagSet sweep_flags;
  sweep_flags.bind(sweep, "--out", "out", "Output directory (default .)");
  sweep_flags.bind(sweep, "--seed", "seed", "Master seed");
  sweep_flags.bind(sweep, "--threads", "threads", "Worker threads or 'auto'");
  sweep_flags.bind(sweep, "--format", "format", "csv, json or both");
  sweep_flags.bind(sweep, "--replicates", "replicates", "Monte Carlo replicates per cell");
  sweep_flags.bind(sweep, "--grid", "t_grid", "Comma-separated t grid or 'auto'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(estimate)) {
      const auto opt = umom::resolve_estimate(load_config(estimate_config),
                                              estimate_flags.overrides());
      const auto result = umom::cmd_estimate(opt);
      std::cout << result.value_line;
      std::cerr << "wrote " << result.json_path.string() << '\n';
    } else if (app.got_subcommand(simulate)) {
      const auto opt = umom::resolve_simulate(load_config(simulate_config),
                                              simulate_flags.overrides());
      const auto result = umom::cmd_simulate(opt);
      if (!result.csv_path.empty())
        std::cout << result.csv_path.string() << '\n';
      if (!result.json_path.empty())
        std::cout << result.json_path.string() << '\n';
    } else if (app.got_subcommand(diagnose)) {
      const auto opt = umom::resolve_diagnose(load_config(diagnose_config),
                                              diagnose_flags.overrides());
      const auto result = umom::cmd_diagnose(opt);
      if (!result.csv_path.empty())
        std::cout << result.csv_path.string() << '\n';
      if (!result.json_path.empty())
        std::cout << result.json_path.string() << '\n';
    } else if (app.got_subcommand(sweep)) {
      const auto opt = umom::resolve_sweep(load_config(sweep_config),
                                           sweep_flags.overrides());
      const auto result = umom::cmd_sweep(opt);
      std::size_t computed = 0;
      for (const auto& cell : result.cells) computed += cell.recomputed ? 1 : 0;
      std::cerr << "cells: " << result.cells.size() << " (" << computed
                << " computed, " << (result.cells.size() - computed)
                << " reused)\n";
      std::cout << result.merged_path.string() << '\n';
    }
  } catch (const umom::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const umom::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const umom::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
