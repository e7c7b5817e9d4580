#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kgres/scenario.hpp"
#include "kgres/sha1.hpp"

using namespace kgres;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string mini_config(const std::string& name) {
  return R"({
    "name": ")" + name + R"(",
    "masses": ["1", "3"],
    "nonlinearity": [
      {"target": 1, "coeff": 1.0, "factors": [
        {"component": 1, "deriv": "none"},
        {"component": 1, "deriv": "none"},
        {"component": 2, "deriv": "none"}]},
      {"target": 2, "coeff": 1.0, "factors": [
        {"component": 1, "deriv": "none"},
        {"component": 1, "deriv": "none"},
        {"component": 1, "deriv": "none"}]}
    ],
    "data": {"epsilon": 0.05, "support_radius": 1.0, "components": [
      {"f": "bump", "f_amplitude": 1.0, "g": "zero", "g_amplitude": 0.0},
      {"f": "bump", "f_amplitude": 1.0, "g": "zero", "g_amplitude": 0.0}]},
    "grid": {"half_length": 16.0, "points": 256},
    "time": {"t_final": 8.0},
    "condition": {"enabled": true, "k": 0, "matrix": {"diagonal": [1.0, 3.0]}},
    "profile": {"enabled": true, "z_max": 0.5, "z_count": 5},
    "fits": {"enabled": false}
  })";
}

}  // namespace

TEST_CASE("config parse errors carry field paths") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_scenario(text);
      FAIL("expected a parse error containing '" << needle << "'");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_error("{ not json", "not valid JSON");
  expect_error(R"({"name":"x","masses":["-1"],"data":{},"grid":{},"time":{}})", "masses[0]");
  expect_error(R"({"name":"x","masses":[1.5],"data":{},"grid":{},"time":{}})", "rationals");
  expect_error(R"({"name":"x","masses":["1.5"],"data":{},"grid":{},"time":{}})", "p/q");
  expect_error(R"({"name":"x","masses":["3","1"],"data":{},"grid":{},"time":{}})", "non-decreasing");

  const std::string base = R"({"name":"x","masses":["1"],
    "data":{"epsilon":0.1,"support_radius":1.0,"components":[{"f":"bump"}]},
    "grid":{"half_length":10.0,"points":100},"time":{"t_final":1.0}})";
  expect_error(base, "grid.points");

  expect_error(R"({"name":"x","masses":["1"],
    "data":{"epsilon":-1,"support_radius":1.0,"components":[{"f":"bump"}]},
    "grid":{"half_length":10.0,"points":128},"time":{"t_final":1.0}})",
               "data.epsilon");

  expect_error(R"({"name":"x","masses":["1"],
    "nonlinearity":[{"target":2,"coeff":1.0,"factors":[
      {"component":1,"deriv":"none"},{"component":1,"deriv":"none"},{"component":1,"deriv":"none"}]}],
    "data":{"epsilon":0.1,"support_radius":1.0,"components":[{"f":"bump"}]},
    "grid":{"half_length":10.0,"points":128},"time":{"t_final":1.0}})",
               "nonlinearity[0].target");

  expect_error(R"({"name":"x","masses":["1"],
    "nonlinearity":[{"target":1,"coeff":1.0,"factors":[
      {"component":1,"deriv":"dz"},{"component":1,"deriv":"none"},{"component":1,"deriv":"none"}]}],
    "data":{"epsilon":0.1,"support_radius":1.0,"components":[{"f":"bump"}]},
    "grid":{"half_length":10.0,"points":128},"time":{"t_final":1.0}})",
               "deriv");
}

TEST_CASE("config round trip is semantically lossless") {
  const auto cfg = parse_scenario(mini_config("roundtrip"));
  const auto resolved = resolve_defaults(cfg);
  const std::string once = serialize_scenario(resolved);
  const auto reparsed = parse_scenario(once);
  const std::string twice = serialize_scenario(resolve_defaults(reparsed));
  CHECK(once == twice);
  // resolution filled the optional knobs in
  CHECK(resolved.dt > 0.0);
  CHECK(resolved.output.series_stride > 0.0);
  CHECK_FALSE(resolved.output.directory.empty());
}

TEST_CASE("builtin scenarios are available and well formed") {
  const auto all = builtin_scenarios();
  CHECK(all.size() >= 7);
  for (const auto& cfg : all) {
    CAPTURE(cfg.name);
    CHECK_NOTHROW(MassVector{cfg.masses});
    CHECK_NOTHROW(CubicNonlinearity(static_cast<int>(cfg.masses.size()), cfg.terms));
    CHECK_NOTHROW(resolve_defaults(cfg));
    // every builtin must survive a serialize/parse round trip
    CHECK_NOTHROW(parse_scenario(serialize_scenario(resolve_defaults(cfg))));
  }
  CHECK(find_builtin("cubic-resonant-pair").has_value());
  CHECK(find_builtin("derivative-dissipative").has_value());
  CHECK_FALSE(find_builtin("no-such-scenario").has_value());
}

TEST_CASE("mini scenario end to end") {
  const auto cfg = parse_scenario(mini_config("mini-e2e"));
  RunSettings settings;
  settings.out_override = (fs::temp_directory_path() / "kgres-test-e2e").string();
  settings.quiet = true;
  fs::remove_all(settings.out_override);

  const auto outcome = run_scenario(cfg, settings);
  CAPTURE(outcome.directory);
  for (const auto& [stage, st] : outcome.stages) {
    CAPTURE(stage);
    CAPTURE(st.detail);
    CHECK(st.pass);
  }
  CHECK(outcome.all_passed);

  const fs::path dir(outcome.directory);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "series.csv"));
  CHECK(fs::exists(dir / "condition.json"));
  CHECK(fs::exists(dir / "profile.csv"));
  CHECK(fs::exists(dir / "energy.csv"));
  CHECK(fs::exists(dir / "report.json"));
  // snapshots at every stride multiple (T = 8, stride T/4 = 2)
  CHECK(fs::exists(dir / "state_000000.00000.bin"));
  CHECK(fs::exists(dir / "state_000002.00000.bin"));
  CHECK(fs::exists(dir / "state_000004.00000.bin"));
  CHECK(fs::exists(dir / "state_000006.00000.bin"));

  // series header carries the fixed column order
  const std::string series = slurp(dir / "series.csv");
  CHECK(series.rfind("t,u1_l2,u1_l4,u1_linf,dtu1_l2,", 0) == 0);

  // manifest echoes every resolved default
  const std::string manifest = slurp(dir / "manifest.json");
  CHECK(manifest.find("\"config_hash\"") != std::string::npos);
  CHECK(manifest.find("\"dt\": 0.03125") != std::string::npos);
  CHECK(manifest.find("\"series_stride\"") != std::string::npos);
  CHECK(manifest.find("\"tau0\": 3.15") != std::string::npos);

  // snapshot layout: n, m, L, t header then payload
  const std::string snap = slurp(dir / "state_000000.00000.bin");
  CHECK(snap.size() == 4 + 4 + 8 + 8 + 2ull * 256 * 8 * 2);
  std::uint32_t n_comp = 0, m_pts = 0;
  std::memcpy(&n_comp, snap.data(), 4);
  std::memcpy(&m_pts, snap.data() + 4, 4);
  CHECK(n_comp == 2);
  CHECK(m_pts == 256);
}

TEST_CASE("identical configs produce bitwise-identical series") {
  const auto cfg = parse_scenario(mini_config("mini-determinism"));
  RunSettings a, b;
  a.out_override = (fs::temp_directory_path() / "kgres-test-det-a").string();
  b.out_override = (fs::temp_directory_path() / "kgres-test-det-b").string();
  a.quiet = b.quiet = true;
  fs::remove_all(a.out_override);
  fs::remove_all(b.out_override);
  const auto ra = run_scenario(cfg, a);
  const auto rb = run_scenario(cfg, b);
  CHECK(slurp(fs::path(ra.directory) / "series.csv") == slurp(fs::path(rb.directory) / "series.csv"));
  CHECK(slurp(fs::path(ra.directory) / "profile.csv") == slurp(fs::path(rb.directory) / "profile.csv"));
}

TEST_CASE("refit recomputes the report from an existing run") {
  auto cfg = parse_scenario(mini_config("mini-refit"));
  cfg.t_final = 60.0;
  cfg.grid_half_length = 70.0;
  cfg.grid_points = 1024;
  cfg.profile.enabled = false;
  cfg.fits.enabled = true;
  RunSettings settings;
  settings.out_override = (fs::temp_directory_path() / "kgres-test-refit").string();
  settings.quiet = true;
  fs::remove_all(settings.out_override);
  const auto outcome = run_scenario(cfg, settings);
  REQUIRE(fs::exists(fs::path(outcome.directory) / "report.json"));
  const auto refit = refit_run_directory(outcome.directory, settings);
  CHECK(refit.stages.at("fits").status == "ok");
  const std::string report = slurp(fs::path(outcome.directory) / "report.json");
  CHECK(report.find("per_component") != std::string::npos);
}

TEST_CASE("condition-only entry point writes a report") {
  auto cfg = *find_builtin("derivative-dissipative");
  RunSettings settings;
  settings.out_override = (fs::temp_directory_path() / "kgres-test-cond").string();
  settings.quiet = true;
  fs::remove_all(settings.out_override);
  const auto outcome = run_condition_only(cfg, settings);
  CHECK(outcome.all_passed);
  const std::string report = slurp(fs::path(outcome.directory) / "condition.json");
  CHECK(report.find("\"k\": 3") != std::string::npos);
  CHECK(report.find("c_tilde") != std::string::npos);
}

TEST_CASE("git-style content hash matches reference blob hashes") {
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("reduced description lists resonance sets and terms") {
  auto cfg = *find_builtin("cubic-resonant-pair");
  const ReducedSystem sys(MassVector{cfg.masses},
                          CubicNonlinearity(static_cast<int>(cfg.masses.size()), cfg.terms));
  const std::string text = describe_reduced(sys);
  CHECK(text.find("S[j=2, a=(1,1,1)] = {(+,+,+)}") != std::string::npos);
  CHECK(text.find("F_1^red") != std::string::npos);
  CHECK(text.find("conj(Y1) conj(Y1) Y2") != std::string::npos);
}
