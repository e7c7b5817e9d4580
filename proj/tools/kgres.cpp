// kgres: resonance analysis, dissipativity checks, full PDE runs and decay
// diagnostics for 1D cubic Klein-Gordon systems.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "kgres/scenario.hpp"

namespace {

using namespace kgres;

ScenarioConfig load_config_or_builtin(const std::string& ref) {
  if (std::filesystem::exists(ref)) return load_scenario_file(ref);
  if (auto builtin = find_builtin(ref)) return *builtin;
  throw std::invalid_argument("'" + ref + "' is neither a config file nor a built-in scenario (see `kgres scenarios`)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1D cubic Klein-Gordon mass-resonance toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir;
  bool quiet = false;
  int threads = 1;
  app.add_option("--out", out_dir, "Base directory for run outputs");
  app.add_flag("--quiet", quiet, "Suppress progress output");
  app.add_option("--threads", threads, "Concurrent scenarios in batch runs")->check(CLI::PositiveNumber);

  // run
  auto* run_cmd = app.add_subcommand("run", "Execute scenarios (configs or built-in names)");
  std::vector<std::string> run_refs;
  bool batch = false;
  run_cmd->add_option("scenario", run_refs, "Config file path or built-in name")->required();
  run_cmd->add_flag("--batch", batch, "Run the given scenarios concurrently (--threads workers)");

  // check-condition
  auto* check_cmd = app.add_subcommand("check-condition", "Verify or search the dissipativity matrix");
  std::string check_ref;
  int k_override = -1;
  bool do_search = false;
  check_cmd->add_option("scenario", check_ref, "Config file path or built-in name")->required();
  check_cmd->add_option("--k", k_override, "Condition exponent (0, 1 or 3)")
      ->check(CLI::IsMember({0, 1, 3}));
  check_cmd->add_flag("--search", do_search, "Search for a matrix instead of checking the configured one");

  // reduce
  auto* reduce_cmd = app.add_subcommand("reduce", "Print the resonance table and the reduced nonlinearity");
  std::string reduce_ref;
  reduce_cmd->add_option("scenario", reduce_ref, "Config file path or built-in name")->required();

  // scenarios
  auto* scen_cmd = app.add_subcommand("scenarios", "List built-in scenarios");
  std::string emit_name;
  scen_cmd->add_option("--emit", emit_name, "Print the full JSON config of one built-in");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Re-fit decay exponents of an existing run directory");
  std::string fit_dir;
  fit_cmd->add_option("directory", fit_dir, "Run directory containing manifest.json and series.csv")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    RunSettings settings;
    settings.out_override = out_dir;
    settings.quiet = quiet;

    if (*run_cmd) {
      std::vector<ScenarioConfig> configs;
      for (const auto& ref : run_refs) configs.push_back(load_config_or_builtin(ref));

      bool all_ok = true;
      if (batch && configs.size() > 1) {
        std::vector<std::future<RunOutcome>> futures;
        size_t next = 0;
        while (next < configs.size() || !futures.empty()) {
          while (next < configs.size() && static_cast<int>(futures.size()) < threads) {
            const ScenarioConfig cfg = configs[next++];
            RunSettings s = settings;
            s.quiet = true;  // interleaved output is useless
            futures.push_back(std::async(std::launch::async,
                                         [cfg, s] { return run_scenario(cfg, s); }));
          }
          auto outcome = futures.front().get();
          futures.erase(futures.begin());
          all_ok = all_ok && outcome.all_passed;
          if (!quiet)
            std::printf("%s: %s\n", outcome.directory.c_str(),
                        outcome.all_passed ? "pass" : "FAIL");
        }
      } else {
        for (const auto& cfg : configs) {
          auto outcome = run_scenario(cfg, settings);
          all_ok = all_ok && outcome.all_passed;
          if (!quiet)
            std::printf("%s: %s\n", outcome.directory.c_str(),
                        outcome.all_passed ? "pass" : "FAIL");
        }
      }
      return all_ok ? 0 : 1;
    }

    if (*check_cmd) {
      ScenarioConfig cfg = load_config_or_builtin(check_ref);
      if (k_override >= 0) cfg.condition.k = k_override;
      if (do_search) {
        cfg.condition.search = true;
        cfg.condition.matrix_diagonal.clear();
        cfg.condition.matrix_rows.clear();
      }
      auto outcome = run_condition_only(cfg, settings);
      if (!quiet) std::printf("report written to %s/condition.json\n", outcome.directory.c_str());
      return outcome.all_passed ? 0 : 1;
    }

    if (*reduce_cmd) {
      ScenarioConfig cfg = load_config_or_builtin(reduce_ref);
      const MassVector masses{cfg.masses};
      const CubicNonlinearity force(static_cast<int>(cfg.masses.size()), cfg.terms);
      const ReducedSystem sys(masses, force);
      std::fputs(describe_reduced(sys).c_str(), stdout);
      return 0;
    }

    if (*scen_cmd) {
      if (!emit_name.empty()) {
        auto builtin = find_builtin(emit_name);
        if (!builtin) {
          std::fprintf(stderr, "no built-in scenario named '%s'\n", emit_name.c_str());
          return 1;
        }
        std::fputs((serialize_scenario(resolve_defaults(*builtin)) + "\n").c_str(), stdout);
        return 0;
      }
      for (const auto& cfg : builtin_scenarios())
        std::printf("%-26s %s\n", cfg.name.c_str(), cfg.notes.c_str());
      return 0;
    }

    if (*fit_cmd) {
      auto outcome = refit_run_directory(fit_dir, settings);
      return outcome.all_passed ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
