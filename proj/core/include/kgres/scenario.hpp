#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgres/analysis.hpp"
#include "kgres/condition.hpp"
#include "kgres/profile.hpp"
#include "kgres/solver.hpp"

namespace kgres {

struct ConditionStageConfig {
  bool enabled = false;
  int k = 0;
  bool search = false;
  bool diagonal_search = false;
  std::vector<double> matrix_diagonal;            // diagonal shortcut
  std::vector<std::vector<Complex>> matrix_rows;  // or full Hermitian entries
  double z_max = 5.0;
  int z_count = 21;
  int sphere_count = 256;
  bool has_matrix() const { return !matrix_diagonal.empty() || !matrix_rows.empty(); }
};

struct ProfileStageConfig {
  bool enabled = false;
  double kappa = 2.0;
  double tau0 = 0.0;      // 0: resolved to 1 + 2B + 0.15
  double tau_max = 0.0;   // 0: resolved from t_final and z_max
  double tau_ratio = 1.05;
  double z_max = 3.0;
  int z_count = 33;
  bool ray_diagnostics = true;  // z = 0 extraction, slow variation, ODE comparison
};

struct FitStageConfig {
  bool enabled = false;
  double t_min = 0.0;  // 0: resolved to max(10, t_final / 8)
  double t_max = 0.0;  // 0: resolved to t_final
};

struct ClaimsConfig {
  std::optional<std::array<double, 2>> sup_exponent_band;  // a(inf) for u, dtu, dxu, all components
  std::optional<std::array<double, 2>> l2_exponent_band;   // a(2) likewise
  std::optional<double> growth_r2_min;                     // log-growth correlation threshold
  int growth_component = 0;                                // 1-based; 0 means the last component
  bool any() const { return sup_exponent_band || l2_exponent_band || growth_r2_min; }
};

struct OutputConfig {
  std::string directory;        // empty: runs/<name>
  double series_stride = 0.0;   // 0: resolved to max(dt, t_final / 2000)
  double snapshot_stride = 0.0; // 0: resolved to t_final / 4
};

struct ScenarioConfig {
  std::string name;
  std::vector<Rational> masses;
  std::vector<CubicTerm> terms;
  CauchyData data;
  double grid_half_length = 0.0;
  int grid_points = 0;
  double dt = 0.0;  // 0: resolved to 0.25 min(dx, 1/m_N)
  double t_final = 0.0;
  double blowup_factor = 1e3;
  bool exploratory = false;  // blow-up is an observation, not a failure
  std::string notes;
  ConditionStageConfig condition;
  ProfileStageConfig profile;
  FitStageConfig fits;
  ClaimsConfig claims;
  OutputConfig output;
};

// Parsing reports errors with json-pointer-style field paths; serialization
// emits every field explicitly (resolved configs round-trip losslessly).
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario_file(const std::string& path);
std::string serialize_scenario(const ScenarioConfig& config);
ScenarioConfig resolve_defaults(const ScenarioConfig& config);

std::vector<ScenarioConfig> builtin_scenarios();
std::optional<ScenarioConfig> find_builtin(const std::string& name);

// Deterministic human-readable dump of the resonance sets and the reduced
// nonlinearity as a merged symbolic term list.
std::string describe_reduced(const ReducedSystem& sys);

struct StageStatus {
  std::string status = "skipped";  // ok | failed | skipped
  bool pass = true;
  std::string detail;
};

struct RunOutcome {
  std::string directory;
  bool all_passed = false;
  std::map<std::string, StageStatus> stages;
};

struct RunSettings {
  std::string out_override;  // base directory override
  bool quiet = false;
};

// Executes condition check -> solve -> profile extraction -> fits, writing
// manifest.json, series.csv, profile.csv, energy.csv, condition.json,
// report.json and state_<t>.bin snapshots into the run directory.
RunOutcome run_scenario(const ScenarioConfig& config, const RunSettings& settings = {});

// Re-runs the fit stage of an existing run directory from its manifest and
// series.csv, rewriting report.json.
RunOutcome refit_run_directory(const std::string& directory, const RunSettings& settings = {});

// check-condition entry point shared by the CLI: runs the check (or search)
// described by the config and writes condition.json into the directory.
RunOutcome run_condition_only(const ScenarioConfig& config, const RunSettings& settings = {});

}  // namespace kgres
