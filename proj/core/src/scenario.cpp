#include "kgres/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "kgres/sha1.hpp"

namespace kgres {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using njson = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw std::invalid_argument(path + ": " + message);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double as_number(const njson& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int as_int(const njson& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool as_bool(const njson& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const njson& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Deriv deriv_from_string(const std::string& s, const std::string& path) {
  if (s == "none") return Deriv::None;
  if (s == "dt") return Deriv::Dt;
  if (s == "dx") return Deriv::Dx;
  fail(path, "unknown derivative '" + s + "' (use none, dt or dx)");
}

std::string deriv_to_string(Deriv d) {
  switch (d) {
    case Deriv::None: return "none";
    case Deriv::Dt: return "dt";
    default: return "dx";
  }
}

ScenarioConfig config_from_json(const njson& root) {
  if (!root.is_object()) fail("config", "expected a JSON object");
  ScenarioConfig cfg;

  cfg.name = root.contains("name") ? as_string(root["name"], "name") : "";
  if (cfg.name.empty()) fail("name", "scenario needs a nonempty name");

  if (!root.contains("masses") || !root["masses"].is_array() || root["masses"].empty())
    fail("masses", "expected a nonempty array of rational strings");
  for (size_t i = 0; i < root["masses"].size(); ++i) {
    const auto& mj = root["masses"][i];
    const std::string path = "masses[" + std::to_string(i) + "]";
    if (mj.is_number())
      fail(path, "write masses as exact rationals, e.g. \"3/2\" (floating-point masses are rejected)");
    if (!mj.is_string()) fail(path, "expected a rational string \"p/q\"");
    Rational r;
    try {
      r = Rational::parse(mj.get<std::string>());
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
    if (!(Rational(0) < r)) fail(path, "mass must be strictly positive");
    cfg.masses.push_back(r);
  }
  for (size_t i = 1; i < cfg.masses.size(); ++i)
    if (cfg.masses[i] < cfg.masses[i - 1])
      fail("masses[" + std::to_string(i) + "]",
           "masses must be non-decreasing; reorder the components");
  const int n = static_cast<int>(cfg.masses.size());

  if (root.contains("nonlinearity")) {
    if (!root["nonlinearity"].is_array()) fail("nonlinearity", "expected an array of cubic terms");
    for (size_t i = 0; i < root["nonlinearity"].size(); ++i) {
      const auto& tj = root["nonlinearity"][i];
      const std::string path = "nonlinearity[" + std::to_string(i) + "]";
      CubicTerm term;
      term.target = as_int(tj.at("target"), path + ".target");
      if (term.target < 1 || term.target > n) fail(path + ".target", "component index out of range");
      term.coeff = as_number(tj.at("coeff"), path + ".coeff");
      if (!tj.contains("factors") || !tj["factors"].is_array() || tj["factors"].size() != 3)
        fail(path + ".factors", "expected exactly three factors");
      for (int l = 0; l < 3; ++l) {
        const auto& fj = tj["factors"][static_cast<size_t>(l)];
        const std::string fpath = path + ".factors[" + std::to_string(l) + "]";
        Factor f;
        f.component = as_int(fj.at("component"), fpath + ".component");
        if (f.component < 1 || f.component > n) fail(fpath + ".component", "component index out of range");
        f.deriv = deriv_from_string(as_string(fj.at("deriv"), fpath + ".deriv"), fpath + ".deriv");
        term.factors[static_cast<size_t>(l)] = f;
      }
      cfg.terms.push_back(term);
    }
  }

  if (!root.contains("data")) fail("data", "missing Cauchy data block");
  {
    const auto& d = root["data"];
    cfg.data.epsilon = as_number(d.at("epsilon"), "data.epsilon");
    if (!(cfg.data.epsilon > 0.0)) fail("data.epsilon", "must be > 0");
    cfg.data.support_radius = as_number(d.at("support_radius"), "data.support_radius");
    if (!(cfg.data.support_radius > 0.0)) fail("data.support_radius", "must be > 0");
    if (!d.contains("components") || !d["components"].is_array() ||
        static_cast<int>(d["components"].size()) != n)
      fail("data.components", "expected one entry per component (" + std::to_string(n) + ")");
    for (size_t i = 0; i < d["components"].size(); ++i) {
      const auto& c = d["components"][i];
      const std::string path = "data.components[" + std::to_string(i) + "]";
      ComponentData comp;
      try {
        comp.f = shape_from_name(c.value("f", "zero"));
        comp.g = shape_from_name(c.value("g", "zero"));
      } catch (const std::exception& e) {
        fail(path, e.what());
      }
      comp.f_amplitude = c.contains("f_amplitude") ? as_number(c["f_amplitude"], path + ".f_amplitude") : 1.0;
      comp.g_amplitude = c.contains("g_amplitude") ? as_number(c["g_amplitude"], path + ".g_amplitude") : 0.0;
      cfg.data.components.push_back(comp);
    }
  }

  if (!root.contains("grid")) fail("grid", "missing grid block");
  cfg.grid_half_length = as_number(root["grid"].at("half_length"), "grid.half_length");
  if (!(cfg.grid_half_length > 0.0)) fail("grid.half_length", "must be > 0");
  cfg.grid_points = as_int(root["grid"].at("points"), "grid.points");
  if (cfg.grid_points < 16 || (cfg.grid_points & (cfg.grid_points - 1)) != 0)
    fail("grid.points", "must be a power of two, at least 16");

  if (!root.contains("time")) fail("time", "missing time block");
  cfg.t_final = as_number(root["time"].at("t_final"), "time.t_final");
  if (!(cfg.t_final > 0.0)) fail("time.t_final", "must be > 0");
  if (root["time"].contains("dt")) {
    cfg.dt = as_number(root["time"]["dt"], "time.dt");
    if (cfg.dt < 0.0) fail("time.dt", "must be >= 0 (0 selects the default)");
  }

  if (root.contains("blowup_factor")) {
    cfg.blowup_factor = as_number(root["blowup_factor"], "blowup_factor");
    if (!(cfg.blowup_factor > 1.0)) fail("blowup_factor", "must exceed 1");
  }
  if (root.contains("exploratory")) cfg.exploratory = as_bool(root["exploratory"], "exploratory");
  if (root.contains("notes")) cfg.notes = as_string(root["notes"], "notes");

  if (root.contains("condition")) {
    const auto& c = root["condition"];
    auto& cc = cfg.condition;
    cc.enabled = c.contains("enabled") ? as_bool(c["enabled"], "condition.enabled") : true;
    cc.k = c.contains("k") ? as_int(c["k"], "condition.k") : 0;
    if (cc.k != 0 && cc.k != 1 && cc.k != 3) fail("condition.k", "k must be 0, 1 or 3");
    if (c.contains("search")) cc.search = as_bool(c["search"], "condition.search");
    if (c.contains("diagonal_search"))
      cc.diagonal_search = as_bool(c["diagonal_search"], "condition.diagonal_search");
    if (c.contains("z_max")) cc.z_max = as_number(c["z_max"], "condition.z_max");
    if (c.contains("z_count")) cc.z_count = as_int(c["z_count"], "condition.z_count");
    if (c.contains("sphere_count")) cc.sphere_count = as_int(c["sphere_count"], "condition.sphere_count");
    if (c.contains("matrix")) {
      const auto& m = c["matrix"];
      if (m.contains("diagonal")) {
        if (!m["diagonal"].is_array() || static_cast<int>(m["diagonal"].size()) != n)
          fail("condition.matrix.diagonal", "expected " + std::to_string(n) + " entries");
        for (size_t i = 0; i < m["diagonal"].size(); ++i)
          cc.matrix_diagonal.push_back(
              as_number(m["diagonal"][i], "condition.matrix.diagonal[" + std::to_string(i) + "]"));
      } else if (m.contains("rows")) {
        const auto& rows = m["rows"];
        if (!rows.is_array() || static_cast<int>(rows.size()) != n)
          fail("condition.matrix.rows", "expected " + std::to_string(n) + " rows");
        for (size_t i = 0; i < rows.size(); ++i) {
          if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != n)
            fail("condition.matrix.rows[" + std::to_string(i) + "]", "expected " + std::to_string(n) + " entries");
          std::vector<Complex> row;
          for (size_t jj = 0; jj < rows[i].size(); ++jj) {
            const auto& e = rows[i][jj];
            const std::string path =
                "condition.matrix.rows[" + std::to_string(i) + "][" + std::to_string(jj) + "]";
            if (e.is_number()) {
              row.emplace_back(e.get<double>(), 0.0);
            } else if (e.is_array() && e.size() == 2) {
              row.emplace_back(as_number(e[0], path + "[0]"), as_number(e[1], path + "[1]"));
            } else {
              fail(path, "expected a number or [re, im]");
            }
          }
          cc.matrix_rows.push_back(std::move(row));
        }
      } else {
        fail("condition.matrix", "expected 'diagonal' or 'rows'");
      }
    }
  }

  if (root.contains("profile")) {
    const auto& p = root["profile"];
    auto& pc = cfg.profile;
    pc.enabled = p.contains("enabled") ? as_bool(p["enabled"], "profile.enabled") : true;
    if (p.contains("kappa")) {
      pc.kappa = as_number(p["kappa"], "profile.kappa");
      if (!(pc.kappa >= 1.0)) fail("profile.kappa", "must be >= 1");
    }
    if (p.contains("tau0")) pc.tau0 = as_number(p["tau0"], "profile.tau0");
    if (p.contains("tau_max")) pc.tau_max = as_number(p["tau_max"], "profile.tau_max");
    if (p.contains("tau_ratio")) {
      pc.tau_ratio = as_number(p["tau_ratio"], "profile.tau_ratio");
      if (!(pc.tau_ratio > 1.0)) fail("profile.tau_ratio", "must exceed 1");
    }
    if (p.contains("z_max")) pc.z_max = as_number(p["z_max"], "profile.z_max");
    if (p.contains("z_count")) pc.z_count = as_int(p["z_count"], "profile.z_count");
    if (p.contains("ray_diagnostics")) pc.ray_diagnostics = as_bool(p["ray_diagnostics"], "profile.ray_diagnostics");
  }

  if (root.contains("fits")) {
    const auto& f = root["fits"];
    cfg.fits.enabled = f.contains("enabled") ? as_bool(f["enabled"], "fits.enabled") : true;
    if (f.contains("t_min")) cfg.fits.t_min = as_number(f["t_min"], "fits.t_min");
    if (f.contains("t_max")) cfg.fits.t_max = as_number(f["t_max"], "fits.t_max");
  }

  if (root.contains("claims")) {
    const auto& c = root["claims"];
    auto band = [&](const char* key) -> std::optional<std::array<double, 2>> {
      if (!c.contains(key) || c[key].is_null()) return std::nullopt;
      if (!c[key].is_array() || c[key].size() != 2)
        fail(std::string("claims.") + key, "expected [lo, hi]");
      return std::array<double, 2>{as_number(c[key][0], key), as_number(c[key][1], key)};
    };
    cfg.claims.sup_exponent_band = band("sup_exponent_band");
    cfg.claims.l2_exponent_band = band("l2_exponent_band");
    if (c.contains("growth_r2_min") && !c["growth_r2_min"].is_null())
      cfg.claims.growth_r2_min = as_number(c["growth_r2_min"], "claims.growth_r2_min");
    if (c.contains("growth_component"))
      cfg.claims.growth_component = as_int(c["growth_component"], "claims.growth_component");
    if (cfg.claims.growth_component < 0 || cfg.claims.growth_component > n)
      fail("claims.growth_component", "component index out of range");
  }

  if (root.contains("output")) {
    const auto& o = root["output"];
    if (o.contains("directory")) cfg.output.directory = as_string(o["directory"], "output.directory");
    if (o.contains("series_stride")) cfg.output.series_stride = as_number(o["series_stride"], "output.series_stride");
    if (o.contains("snapshot_stride"))
      cfg.output.snapshot_stride = as_number(o["snapshot_stride"], "output.snapshot_stride");
  }
  return cfg;
}

ordered_json config_to_json(const ScenarioConfig& cfg) {
  ordered_json j;
  j["name"] = cfg.name;
  j["masses"] = ordered_json::array();
  for (const auto& m : cfg.masses) j["masses"].push_back(m.str());
  j["nonlinearity"] = ordered_json::array();
  for (const auto& t : cfg.terms) {
    ordered_json tj;
    tj["target"] = t.target;
    tj["coeff"] = t.coeff;
    tj["factors"] = ordered_json::array();
    for (const auto& f : t.factors)
      tj["factors"].push_back({{"component", f.component}, {"deriv", deriv_to_string(f.deriv)}});
    j["nonlinearity"].push_back(tj);
  }
  ordered_json comps = ordered_json::array();
  for (const auto& c : cfg.data.components)
    comps.push_back({{"f", shape_name(c.f)},
                     {"f_amplitude", c.f_amplitude},
                     {"g", shape_name(c.g)},
                     {"g_amplitude", c.g_amplitude}});
  j["data"] = {{"epsilon", cfg.data.epsilon},
               {"support_radius", cfg.data.support_radius},
               {"components", comps}};
  j["grid"] = {{"half_length", cfg.grid_half_length}, {"points", cfg.grid_points}};
  j["time"] = {{"dt", cfg.dt}, {"t_final", cfg.t_final}};
  j["blowup_factor"] = cfg.blowup_factor;
  j["exploratory"] = cfg.exploratory;
  j["notes"] = cfg.notes;

  ordered_json cj;
  cj["enabled"] = cfg.condition.enabled;
  cj["k"] = cfg.condition.k;
  cj["search"] = cfg.condition.search;
  cj["diagonal_search"] = cfg.condition.diagonal_search;
  cj["z_max"] = cfg.condition.z_max;
  cj["z_count"] = cfg.condition.z_count;
  cj["sphere_count"] = cfg.condition.sphere_count;
  if (!cfg.condition.matrix_diagonal.empty()) {
    cj["matrix"] = {{"diagonal", cfg.condition.matrix_diagonal}};
  } else if (!cfg.condition.matrix_rows.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : cfg.condition.matrix_rows) {
      ordered_json rj = ordered_json::array();
      for (const auto& e : row) rj.push_back({e.real(), e.imag()});
      rows.push_back(rj);
    }
    cj["matrix"] = {{"rows", rows}};
  }
  j["condition"] = cj;

  j["profile"] = {{"enabled", cfg.profile.enabled},   {"kappa", cfg.profile.kappa},
                  {"tau0", cfg.profile.tau0},         {"tau_max", cfg.profile.tau_max},
                  {"tau_ratio", cfg.profile.tau_ratio}, {"z_max", cfg.profile.z_max},
                  {"z_count", cfg.profile.z_count},   {"ray_diagnostics", cfg.profile.ray_diagnostics}};
  j["fits"] = {{"enabled", cfg.fits.enabled}, {"t_min", cfg.fits.t_min}, {"t_max", cfg.fits.t_max}};

  ordered_json claims;
  claims["sup_exponent_band"] =
      cfg.claims.sup_exponent_band
          ? ordered_json::array({(*cfg.claims.sup_exponent_band)[0], (*cfg.claims.sup_exponent_band)[1]})
          : ordered_json(nullptr);
  claims["l2_exponent_band"] =
      cfg.claims.l2_exponent_band
          ? ordered_json::array({(*cfg.claims.l2_exponent_band)[0], (*cfg.claims.l2_exponent_band)[1]})
          : ordered_json(nullptr);
  claims["growth_r2_min"] =
      cfg.claims.growth_r2_min ? ordered_json(*cfg.claims.growth_r2_min) : ordered_json(nullptr);
  claims["growth_component"] = cfg.claims.growth_component;
  j["claims"] = claims;

  j["output"] = {{"directory", cfg.output.directory},
                 {"series_stride", cfg.output.series_stride},
                 {"snapshot_stride", cfg.output.snapshot_stride}};
  return j;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  njson root;
  try {
    root = njson::parse(json_text);
  } catch (const njson::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(root);
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string serialize_scenario(const ScenarioConfig& config) {
  return config_to_json(config).dump(2);
}

ScenarioConfig resolve_defaults(const ScenarioConfig& config) {
  ScenarioConfig cfg = config;
  const Grid1D grid(cfg.grid_half_length, cfg.grid_points);
  const MassVector masses{cfg.masses};
  if (cfg.dt == 0.0) cfg.dt = 0.25 * std::min(grid.dx(), 1.0 / masses.largest());
  if (cfg.output.directory.empty()) cfg.output.directory = "runs/" + cfg.name;
  if (cfg.output.series_stride == 0.0)
    cfg.output.series_stride = std::max(cfg.dt, cfg.t_final / 2000.0);
  if (cfg.output.snapshot_stride == 0.0) cfg.output.snapshot_stride = cfg.t_final / 4.0;
  if (cfg.profile.enabled) {
    const double B = cfg.data.support_radius;
    if (cfg.profile.tau0 == 0.0) cfg.profile.tau0 = 1.0 + 2.0 * B + 0.15;
    if (cfg.profile.tau_max == 0.0)
      cfg.profile.tau_max = 0.995 * (cfg.t_final + 2.0 * B) / std::cosh(cfg.profile.z_max);
    if (!(cfg.profile.tau_max > cfg.profile.tau0))
      throw std::invalid_argument(
          "profile.tau_max: horizon too short for the requested chart (tau_max <= tau0)");
  }
  if (cfg.fits.enabled) {
    if (cfg.fits.t_min == 0.0) cfg.fits.t_min = std::max(10.0, cfg.t_final / 8.0);
    if (cfg.fits.t_max == 0.0) cfg.fits.t_max = cfg.t_final;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Built-in scenarios

namespace {

ScenarioConfig base_scenario(const std::string& name, std::vector<Rational> masses,
                             std::vector<CubicTerm> terms) {
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.masses = std::move(masses);
  cfg.terms = std::move(terms);
  cfg.data.epsilon = 0.01;
  cfg.data.support_radius = 1.0;
  cfg.data.components.assign(cfg.masses.size(), ComponentData{Shape::Bump, 1.0, Shape::Zero, 0.0});
  return cfg;
}

}  // namespace

std::vector<ScenarioConfig> builtin_scenarios() {
  std::vector<ScenarioConfig> out;

  {  // (box+1) u1 = u1^2 u2, (box+9) u2 = u1^3: resonant pair with decay 1/2
    auto cfg = base_scenario(
        "cubic-resonant-pair", {Rational(1), Rational(3)},
        {CubicNonlinearity::term(1, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {2, Deriv::None}}),
         CubicNonlinearity::term(2, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})});
    cfg.grid_half_length = 600.0;
    cfg.grid_points = 16384;
    cfg.t_final = 400.0;
    cfg.condition.enabled = true;
    cfg.condition.k = 0;
    cfg.condition.matrix_diagonal = {1.0, 3.0};
    cfg.profile.enabled = true;
    cfg.fits.enabled = true;
    cfg.fits.t_min = 100.0;  // the light component's derivative sup norms settle late
    cfg.claims.sup_exponent_band = {{0.4, 0.6}};
    cfg.claims.l2_exponent_band = {{-0.1, 0.1}};
    cfg.notes = "mass-resonant two-component cubic system; amplitudes decay like t^{-1/2}";
    out.push_back(cfg);
  }

  {  // four components with m4 = m1 + m2 + m3
    auto cfg = base_scenario(
        "four-component-chain", {Rational(1), Rational(2), Rational(3), Rational(6)},
        {CubicNonlinearity::term(1, 1.0, {{2, Deriv::None}, {3, Deriv::None}, {4, Deriv::None}}),
         CubicNonlinearity::term(2, 1.0, {{3, Deriv::None}, {4, Deriv::None}, {1, Deriv::None}}),
         CubicNonlinearity::term(3, 1.0, {{4, Deriv::None}, {1, Deriv::None}, {2, Deriv::None}}),
         CubicNonlinearity::term(4, 1.0, {{1, Deriv::None}, {2, Deriv::None}, {3, Deriv::None}})});
    cfg.grid_half_length = 160.0;
    cfg.grid_points = 4096;
    cfg.t_final = 120.0;
    cfg.condition.enabled = true;
    cfg.condition.matrix_diagonal = {1.0 / 3.0, 2.0 / 3.0, 1.0, 6.0};
    cfg.profile.enabled = true;
    cfg.fits.enabled = true;
    cfg.notes = "sum-resonance m4 = m1 + m2 + m3 with cyclic triple couplings";
    out.push_back(cfg);
  }

  {  // derivative coupling suspected to blow up at equal masses
    auto cfg = base_scenario(
        "derivative-blowup-probe", {Rational(1), Rational(1)},
        {CubicNonlinearity::term(1, 1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dx}}),
         CubicNonlinearity::term(2, 1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {1, Deriv::Dx}})});
    cfg.data.epsilon = 1.0;
    cfg.grid_half_length = 48.0;
    cfg.grid_points = 2048;
    cfg.t_final = 40.0;
    cfg.exploratory = true;
    cfg.fits.enabled = false;
    cfg.notes =
        "equal-mass derivative coupling; finite-time breakdown depends on the data, so runs are "
        "exploratory (the guard reports a breakdown time instead of failing; sweep epsilon to "
        "explore, e.g. 0.5 survives the horizon while 2.0 trips the guard within t ~ 1.4)";
    out.push_back(cfg);
  }

  {  // (box+1) u1 = 0, (box+9) u2 = u1^3: resonant forcing without decay gain
    auto cfg = base_scenario(
        "forced-nondecay", {Rational(1), Rational(3)},
        {CubicNonlinearity::term(2, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})});
    cfg.data.epsilon = 0.05;
    // the forced component starts from rest so its norm isolates the
    // resonantly accumulated response
    cfg.data.components[1] = ComponentData{Shape::Zero, 0.0, Shape::Zero, 0.0};
    cfg.grid_half_length = 600.0;
    cfg.grid_points = 16384;
    cfg.t_final = 400.0;
    cfg.fits.enabled = true;
    cfg.claims.growth_r2_min = 0.9;
    cfg.claims.growth_component = 2;
    cfg.profile.enabled = false;
    cfg.notes = "free first component resonantly forces the second; sup norm picks up a log factor";
    out.push_back(cfg);
  }

  {  // equal masses, (u1^2 + u2^2) u_j
    auto cfg = base_scenario(
        "equal-mass-cubic", {Rational(1), Rational(1)},
        {CubicNonlinearity::term(1, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}}),
         CubicNonlinearity::term(1, 1.0, {{2, Deriv::None}, {2, Deriv::None}, {1, Deriv::None}}),
         CubicNonlinearity::term(2, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {2, Deriv::None}}),
         CubicNonlinearity::term(2, 1.0, {{2, Deriv::None}, {2, Deriv::None}, {2, Deriv::None}})});
    cfg.grid_half_length = 160.0;
    cfg.grid_points = 4096;
    cfg.t_final = 120.0;
    cfg.condition.enabled = true;
    cfg.condition.matrix_diagonal = {1.0, 1.0};
    cfg.profile.enabled = true;
    cfg.fits.enabled = true;
    cfg.notes = "equal-mass cubic interaction with identity dissipativity matrix";
    out.push_back(cfg);
  }

  {  // equal masses, -|dt u|^2 dt u_j
    auto cfg = base_scenario(
        "equal-mass-dissipative", {Rational(1), Rational(1)},
        {CubicNonlinearity::term(1, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {1, Deriv::Dt}}),
         CubicNonlinearity::term(1, -1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {1, Deriv::Dt}}),
         CubicNonlinearity::term(2, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dt}}),
         CubicNonlinearity::term(2, -1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {2, Deriv::Dt}})});
    cfg.grid_half_length = 160.0;
    cfg.grid_points = 4096;
    cfg.t_final = 120.0;
    cfg.condition.enabled = true;
    cfg.condition.k = 3;
    cfg.condition.matrix_diagonal = {1.0, 1.0};
    cfg.profile.enabled = true;
    cfg.fits.enabled = true;
    cfg.notes = "equal-mass nonlinear friction; strictly dissipative with the identity matrix";
    out.push_back(cfg);
  }

  {  // m2 = 3 m1 with derivative dissipation and a resonant sign-indefinite tail
    auto cfg = base_scenario(
        "derivative-dissipative", {Rational(1), Rational(3)},
        {CubicNonlinearity::term(1, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {1, Deriv::Dt}}),
         CubicNonlinearity::term(1, -1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {1, Deriv::Dt}}),
         CubicNonlinearity::term(1, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dt}}),
         CubicNonlinearity::term(2, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dt}}),
         CubicNonlinearity::term(2, -1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {2, Deriv::Dt}}),
         CubicNonlinearity::term(2, 1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {1, Deriv::Dt}})});
    cfg.grid_half_length = 160.0;
    cfg.grid_points = 4096;
    cfg.t_final = 120.0;
    cfg.condition.enabled = true;
    cfg.condition.k = 3;
    cfg.condition.matrix_diagonal = {1.0, 9.0};
    cfg.profile.enabled = true;
    cfg.fits.enabled = true;
    cfg.notes = "resonant masses with cubic friction; pairing decays at rate w0^3 |Y|^4";
    out.push_back(cfg);
  }

  return out;
}

std::optional<ScenarioConfig> find_builtin(const std::string& name) {
  for (auto& cfg : builtin_scenarios())
    if (cfg.name == name) return cfg;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// reduce pretty-printer

std::string describe_reduced(const ReducedSystem& sys) {
  std::ostringstream os;
  const auto md = sys.masses().as_doubles();
  const int n = sys.n_components();

  os << "masses:";
  for (const auto& m : sys.masses().values()) os << ' ' << m.str();
  os << "\n\nresonance sets (empty ones omitted):\n";
  bool any = false;
  for (int j = 1; j <= n; ++j) {
    for (const auto& a : sys.table().m_set(j)) {
      any = true;
      os << "  S[j=" << j << ", a=(" << a[0] << ',' << a[1] << ',' << a[2] << ")] = {";
      bool first = true;
      for (const auto& s : sys.table().resonant_signs(j, a)) {
        if (!first) os << ", ";
        first = false;
        os << '(' << (s[0] > 0 ? '+' : '-') << ',' << (s[1] > 0 ? '+' : '-') << ','
           << (s[2] > 0 ? '+' : '-') << ')';
      }
      os << "}\n";
    }
  }
  if (!any) os << "  (none: no mass resonance among the component masses)\n";

  // merged symbolic monomials of F^{c,red}: key = (target, w0 pow, w1 pow, factors)
  struct Key {
    int target;
    int p0, p1;
    std::vector<std::pair<int, bool>> factors;  // (component, conjugated)
    bool operator<(const Key& o) const {
      return std::tie(target, p0, p1, factors) < std::tie(o.target, o.p0, o.p1, o.factors);
    }
  };
  std::map<Key, Complex> monomials;
  for (const auto& term : sys.nonlinearity().terms()) {
    int p0 = 0, p1 = 0;
    double mass_prod = 1.0;
    for (const auto& f : term.factors) {
      if (f.deriv == Deriv::Dt) {
        ++p0;
        mass_prod *= md[static_cast<size_t>(f.component - 1)];
      } else if (f.deriv == Deriv::Dx) {
        ++p1;
        mass_prod *= md[static_cast<size_t>(f.component - 1)];
      }
    }
    Complex unit{1.0, 0.0};
    for (int k = 0; k < p0; ++k) unit *= Complex(0, 1);
    for (int k = 0; k < p1; ++k) unit *= Complex(0, -1);
    const Complex base = term.coeff * unit * mass_prod / md[static_cast<size_t>(term.target - 1)];
    const std::array<int, 3> a{term.factors[0].component, term.factors[1].component,
                               term.factors[2].component};
    for (const auto& s : sys.table().resonant_signs(term.target, a)) {
      double sign = 1.0;
      Key key;
      key.target = term.target;
      key.p0 = p0;
      key.p1 = p1;
      for (int l = 0; l < 3; ++l) {
        if (term.factors[static_cast<size_t>(l)].deriv != Deriv::None && s[static_cast<size_t>(l)] < 0)
          sign = -sign;
        key.factors.emplace_back(a[static_cast<size_t>(l)], s[static_cast<size_t>(l)] < 0);
      }
      std::sort(key.factors.begin(), key.factors.end());
      monomials[key] += base * sign;
    }
  }

  os << "\nreduced nonlinearity F^red (resonant part on the hyperbola):\n";
  int last_target = 0;
  bool printed = false;
  for (const auto& [key, coeff] : monomials) {
    if (std::abs(coeff) < 1e-15) continue;
    printed = true;
    if (key.target != last_target) {
      os << "  F_" << key.target << "^red =\n";
      last_target = key.target;
    }
    os << "      + (";
    if (coeff.imag() == 0.0) {
      os << fmt(coeff.real());
    } else if (coeff.real() == 0.0) {
      os << fmt(coeff.imag()) << "*i";
    } else {
      os << fmt(coeff.real()) << (coeff.imag() >= 0 ? " + " : " - ") << fmt(std::abs(coeff.imag()))
         << "*i";
    }
    os << ')';
    if (key.p0 > 0) os << " * w0" << (key.p0 > 1 ? "^" + std::to_string(key.p0) : "");
    if (key.p1 > 0) os << " * w1" << (key.p1 > 1 ? "^" + std::to_string(key.p1) : "");
    for (const auto& [comp, conj] : key.factors)
      os << (conj ? " conj(Y" : " Y") << comp << (conj ? ")" : "");
    os << '\n';
  }
  if (!printed) os << "  (identically zero: no resonant monomials)\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Run pipeline

namespace {

struct SeriesTable {
  std::vector<std::string> columns;          // without the leading "t"
  std::vector<double> t;
  std::vector<std::vector<double>> values;   // per column

  std::span<const double> column(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return values[i];
    throw std::invalid_argument("series column '" + name + "' not found");
  }
};

void write_series_csv(const fs::path& path, const std::vector<std::string>& columns,
                      const std::vector<NormRow>& rows) {
  std::ofstream out(path);
  out << "t";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (const auto& row : rows) {
    out << fmt(row.t);
    for (double v : row.values) out << ',' << fmt(v);
    out << '\n';
  }
}

SeriesTable read_series_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  SeriesTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty series file");
  std::stringstream header(line);
  std::string cell;
  bool first = true;
  while (std::getline(header, cell, ',')) {
    if (first) {
      first = false;
      continue;
    }
    table.columns.push_back(cell);
  }
  table.values.resize(table.columns.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    size_t idx = 0;
    bool lead = true;
    while (std::getline(row, cell, ',')) {
      const double v = std::stod(cell);
      if (lead) {
        table.t.push_back(v);
        lead = false;
      } else {
        table.values.at(idx++).push_back(v);
      }
    }
  }
  return table;
}

void write_snapshot(const fs::path& path, const Grid1D& grid, const FieldState& state) {
  std::ofstream out(path, std::ios::binary);
  const std::uint32_t n = static_cast<std::uint32_t>(state.n_components);
  const std::uint32_t m = static_cast<std::uint32_t>(state.points);
  const double L = grid.half_length();
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&m), 4);
  out.write(reinterpret_cast<const char*>(&L), 8);
  out.write(reinterpret_cast<const char*>(&state.t), 8);
  out.write(reinterpret_cast<const char*>(state.u.data()),
            static_cast<std::streamsize>(state.u.size() * 8));
  out.write(reinterpret_cast<const char*>(state.ut.data()),
            static_cast<std::streamsize>(state.ut.size() * 8));
}

std::string snapshot_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "state_%012.5f.bin", t);
  return buf;
}

ordered_json condition_report_json(const ConditionReport& r) {
  ordered_json wp;
  wp["z"] = r.worst_point.z;
  ordered_json y = ordered_json::array();
  for (const auto& c : r.worst_point.Y) y.push_back({c.real(), c.imag()});
  wp["Y"] = y;
  return ordered_json{{"k", r.k},
                      {"pass", r.pass},
                      {"worst_ratio", r.worst_ratio},
                      {"c_tilde", r.c_tilde},
                      {"worst_point", wp},
                      {"samples_used", r.samples_used},
                      {"tolerance", r.tolerance}};
}

ordered_json matrix_json(const Eigen::MatrixXcd& a) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back({a(i, j).real(), a(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

struct FitOutcome {
  ordered_json report;
  bool pass = true;
};

FitOutcome run_fit_stage(const ScenarioConfig& cfg, const SeriesTable& series) {
  FitOutcome outcome;
  const int n = static_cast<int>(cfg.masses.size());
  const FitWindow window{cfg.fits.t_min, cfg.fits.t_max};
  DecayFitOptions fit_opt;
  fit_opt.fix_gamma = true;

  ordered_json per_component = ordered_json::array();
  ordered_json claim_list = ordered_json::array();
  bool claims_pass = true;

  const char* fields[3] = {"u", "dtu", "dxu"};
  for (int j = 1; j <= n; ++j) {
    ordered_json comp;
    comp["component"] = j;
    for (const char* field : fields) {
      const std::string base = std::string(field) + std::to_string(j);
      ordered_json fj;
      for (const char* p : {"l2", "l4", "linf"}) {
        const auto fit = fit_decay(series.t, series.column(base + "_" + p), window, fit_opt);
        fj[std::string("a_") + p] = fit.a;
        fj[std::string("residual_") + p] = fit.residual_rms;
      }
      comp[field] = fj;

      if (cfg.claims.sup_exponent_band) {
        const double a = fj["a_linf"].get<double>();
        const auto band = *cfg.claims.sup_exponent_band;
        const bool ok = a >= band[0] && a <= band[1];
        claims_pass = claims_pass && ok;
        claim_list.push_back({{"claim", "sup_exponent_band"},
                              {"series", base + "_linf"},
                              {"value", a},
                              {"band", {band[0], band[1]}},
                              {"pass", ok}});
      }
      if (cfg.claims.l2_exponent_band) {
        const double a = fj["a_l2"].get<double>();
        const auto band = *cfg.claims.l2_exponent_band;
        const bool ok = a >= band[0] && a <= band[1];
        claims_pass = claims_pass && ok;
        claim_list.push_back({{"claim", "l2_exponent_band"},
                              {"series", base + "_l2"},
                              {"value", a},
                              {"band", {band[0], band[1]}},
                              {"pass", ok}});
      }
    }

    // L^2 / L^4 / L^inf exponent interpolation, informational
    const std::string ub = "u" + std::to_string(j);
    const auto lp = lp_interpolation_check(series.t, series.column(ub + "_l2"),
                                           series.column(ub + "_l4"), series.column(ub + "_linf"),
                                           window);
    comp["lp_interpolation"] = {{"a2", lp.a2}, {"a4", lp.a4}, {"a_inf", lp.a_inf},
                                {"tolerance", lp.tolerance}, {"consistent", lp.pass}};
    per_component.push_back(comp);
  }

  if (cfg.claims.growth_r2_min) {
    const int comp = cfg.claims.growth_component == 0 ? n : cfg.claims.growth_component;
    const std::string col = "u" + std::to_string(comp) + "_linf";
    const auto g = growth_correlation(series.t, series.column(col), window);
    const bool ok = g.r_squared >= *cfg.claims.growth_r2_min && g.slope > 0.0;
    claims_pass = claims_pass && ok;
    claim_list.push_back({{"claim", "log_growth_correlation"},
                          {"series", col},
                          {"slope", g.slope},
                          {"r_squared", g.r_squared},
                          {"r2_min", *cfg.claims.growth_r2_min},
                          {"pass", ok}});
    outcome.report["growth"] = {{"series", col},
                                {"slope", g.slope},
                                {"intercept", g.intercept},
                                {"r_squared", g.r_squared}};
  }

  outcome.report["window"] = {{"t_min", window.t_min}, {"t_max", window.t_max}};
  outcome.report["per_component"] = per_component;
  outcome.report["claims"] = claim_list;
  outcome.pass = claims_pass;
  return outcome;
}

double log_log_slope(const std::vector<std::pair<double, double>>& series, double t_lo) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& [tau, e] : series) {
    if (tau < t_lo || !(e > 0.0)) continue;
    const double x = std::log(tau), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 5) return std::numeric_limits<double>::quiet_NaN();
  return (sxy - sx * sy / m) / (sxx - sx * sx / m);
}

}  // namespace

RunOutcome run_scenario(const ScenarioConfig& raw_config, const RunSettings& settings) {
  ScenarioConfig cfg = resolve_defaults(raw_config);
  RunOutcome outcome;
  const fs::path dir = settings.out_override.empty()
                           ? fs::path(cfg.output.directory)
                           : fs::path(settings.out_override) / cfg.name;
  outcome.directory = dir.string();
  fs::create_directories(dir);

  auto log = [&](const std::string& line) {
    if (!settings.quiet) std::fputs((line + "\n").c_str(), stdout);
  };

  const MassVector masses{cfg.masses};
  const CubicNonlinearity force(static_cast<int>(cfg.masses.size()), cfg.terms);
  const Grid1D grid(cfg.grid_half_length, cfg.grid_points);
  const int n = masses.size();

  ordered_json report;
  report["scenario"] = cfg.name;

  // ---- condition stage ----
  bool pipeline_broken = false;  // a stage raising an error skips later stages
  std::optional<ConditionMatrix> condition_matrix;
  if (cfg.condition.enabled) {
    StageStatus st;
    try {
      const ReducedSystem sys(masses, force);
      const SamplingSpec spec{cfg.condition.z_max, cfg.condition.z_count, cfg.condition.sphere_count};
      ordered_json cj;
      if (cfg.condition.has_matrix()) {
        Eigen::MatrixXcd a(n, n);
        if (!cfg.condition.matrix_diagonal.empty()) {
          a.setZero();
          for (int i = 0; i < n; ++i) a(i, i) = cfg.condition.matrix_diagonal[static_cast<size_t>(i)];
        } else {
          for (int i = 0; i < n; ++i)
            for (int jj = 0; jj < n; ++jj)
              a(i, jj) = cfg.condition.matrix_rows[static_cast<size_t>(i)][static_cast<size_t>(jj)];
        }
        condition_matrix.emplace(std::move(a));
        const auto rep = check_condition(*condition_matrix, sys, cfg.condition.k, spec);
        cj = condition_report_json(rep);
        cj["mode"] = "check";
        cj["matrix"] = matrix_json(condition_matrix->entries());
        st.pass = rep.pass;
        log("condition: " + rep.summary());
      } else if (cfg.condition.search) {
        SearchOptions opt;
        opt.k = cfg.condition.k;
        opt.diagonal_only = cfg.condition.diagonal_search;
        opt.verify_samples = spec;
        const auto result = search_matrix(sys, opt);
        cj = condition_report_json(result.report);
        cj["mode"] = "search";
        cj["status"] = result.status == SearchResult::Status::Found ? "found"
                       : result.status == SearchResult::Status::CertifiedFailure
                           ? "certified_failure"
                           : "no_convergence";
        cj["matrix"] = matrix_json(result.matrix.entries());
        st.pass = result.status == SearchResult::Status::Found;
        if (st.pass) condition_matrix.emplace(result.matrix);
        log("condition: " + result.summary());
      } else {
        throw std::invalid_argument("condition stage enabled without a matrix or search=true");
      }
      std::ofstream(dir / "condition.json") << cj.dump(2) << '\n';
      st.status = "ok";
      st.detail = st.pass ? "condition satisfied at sampling resolution" : "condition violated";
    } catch (const std::exception& e) {
      st.status = "failed";
      st.pass = false;
      st.detail = e.what();
      pipeline_broken = true;
      log(std::string("condition stage failed: ") + e.what());
    }
    outcome.stages["condition"] = st;
  }

  // ---- solve stage ----
  bool solved = false;
  bool blew_up = false;
  StageStatus solve_status;
  std::unique_ptr<FieldProbeObserver> probe;
  size_t n_chart_probes = 0;
  HyperbolicChart chart;
  std::vector<double> ray_taus;
  if (pipeline_broken) {
    solve_status.status = "skipped";
    solve_status.pass = false;
    solve_status.detail = "earlier stage failed";
    outcome.stages["solve"] = solve_status;
  } else
  try {
    EvolveOptions opt;
    opt.dt = cfg.dt;
    opt.t_final = cfg.t_final;
    opt.blowup_factor = cfg.blowup_factor;

    NormObserver norms(grid, cfg.output.series_stride);
    std::vector<StepObserver*> observers{&norms};

    if (cfg.profile.enabled) {
      chart.B = cfg.data.support_radius;
      chart.tau0 = cfg.profile.tau0;
      chart.tau_max = cfg.profile.tau_max;
      chart.tau_ratio = cfg.profile.tau_ratio;
      chart.z_max = cfg.profile.z_max;
      chart.z_count = cfg.profile.z_count;
      auto requests = chart_probe_requests(chart);
      n_chart_probes = requests.size();
      if (cfg.profile.ray_diagnostics) {
        ray_taus = geometric_taus(cfg.profile.tau0, 0.98 * (cfg.t_final + 2.0 * chart.B),
                                  cfg.profile.tau_ratio);
        auto ray_reqs = ray_probe_requests(chart.B, 0.0, ray_taus);
        requests.insert(requests.end(), ray_reqs.begin(), ray_reqs.end());
      }
      probe = std::make_unique<FieldProbeObserver>(grid, n, std::move(requests));
      observers.push_back(probe.get());
    }

    CallbackObserver snapper(cfg.output.snapshot_stride, [&](const FieldState& s) {
      write_snapshot(dir / snapshot_name(s.t), grid, s);
    });
    observers.push_back(&snapper);

    log("solve: evolving to t = " + fmt(cfg.t_final) + " (dt = " + fmt(cfg.dt) + ", M = " +
        std::to_string(cfg.grid_points) + ")");
    const auto record = evolve(masses, force, cfg.data, grid, opt, observers, 1.0);
    solved = true;
    blew_up = record.blew_up;

    write_series_csv(dir / "series.csv", NormObserver::columns(n), norms.rows());

    solve_status.status = "ok";
    solve_status.pass = !record.blew_up || cfg.exploratory;
    if (record.blew_up) {
      solve_status.detail = "blow-up guard tripped at t = " + fmt(record.blowup_time) +
                            (cfg.exploratory ? " (exploratory run: recorded, not failed)" : "");
      report["blow_up"] = {{"detected", true}, {"time", record.blowup_time}};
      log("solve: " + solve_status.detail);
    } else {
      report["blow_up"] = {{"detected", false}};
      log("solve: completed " + std::to_string(record.steps) + " steps");
    }
  } catch (const std::exception& e) {
    solve_status.status = "failed";
    solve_status.pass = false;
    solve_status.detail = e.what();
    log(std::string("solve stage failed: ") + e.what());
  }
  outcome.stages["solve"] = solve_status;

  // ---- profile stage ----
  if (cfg.profile.enabled) {
    StageStatus st;
    if (!solved || blew_up) {
      st.status = "skipped";
      st.detail = "no complete field history";
      st.pass = !solved ? false : cfg.exploratory;
    } else {
      try {
        const WeightFunction chi{cfg.profile.kappa};
        const auto& samples = probe->samples();
        auto traj = extract_profile(masses, chi,  chart,
                                    std::span(samples).subspan(0, n_chart_probes));

        // profile.csv
        {
          std::ofstream out(dir / "profile.csv");
          out << "tau,z";
          for (int j = 1; j <= n; ++j) out << ",re_alpha" << j << ",im_alpha" << j;
          out << ",abs_alpha";
          if (condition_matrix) out << ",pairing";
          out << '\n';
          for (const auto& s : traj.samples) {
            out << fmt(s.tau) << ',' << fmt(s.z);
            double norm2 = 0.0;
            for (const auto& a : s.alpha) {
              out << ',' << fmt(a.real()) << ',' << fmt(a.imag());
              norm2 += std::norm(a);
            }
            out << ',' << fmt(std::sqrt(norm2));
            if (condition_matrix) {
              Eigen::VectorXcd y(n);
              for (int j = 0; j < n; ++j) y(j) = s.alpha[static_cast<size_t>(j)];
              out << ',' << fmt((y.dot(condition_matrix->entries() * y)).real());
            }
            out << '\n';
          }
        }

        const auto energy = energy_diagnostic(traj);
        {
          std::ofstream out(dir / "energy.csv");
          out << "tau,E0\n";
          for (const auto& [tau, e] : energy) out << fmt(tau) << ',' << fmt(e) << '\n';
        }

        ordered_json pj;
        pj["kappa"] = cfg.profile.kappa;
        pj["reconstruction_residual"] = traj.max_reconstruction_residual;
        pj["max_abs_u"] = traj.max_abs_u;
        const double delta = log_log_slope(energy, std::max(10.0, chart.tau0));
        pj["energy_growth_exponent"] = std::isnan(delta) ? ordered_json(nullptr) : ordered_json(delta);

        if (cfg.profile.ray_diagnostics) {
          auto ray = extract_profile_ray(masses, chi, chart.B, 0.0, ray_taus,
                                         std::span(samples).subspan(n_chart_probes));
          const auto slow = slow_variation_check(ray, cfg.data.epsilon);
          pj["slow_variation"] = {{"sup", slow.sup},
                                  {"bucket_sup", slow.bucket_sup},
                                  {"max_bucket_ratio", slow.max_bucket_ratio},
                                  {"bounded", slow.bounded}};

          // resonant-only ODE started from the extracted amplitude
          const double tau_end = ray.taus.back();
          double tau_lo = std::min(20.0, tau_end / 10.0);
          size_t i_lo = 0;
          while (i_lo + 2 < ray.taus.size() && ray.taus[i_lo] < tau_lo) ++i_lo;
          tau_lo = ray.taus[i_lo];
          const double tau_hi = std::min(10.0 * tau_lo, tau_end);
          std::vector<double> ode_taus;
          for (size_t i = i_lo; i < ray.taus.size() && ray.taus[i] <= tau_hi * (1 + 1e-12); ++i)
            ode_taus.push_back(ray.taus[i]);
          const ReducedSystem sys(masses, force);
          auto ode = integrate_profile_ode(sys, chi, 0.0, ray.samples[i_lo].alpha, ode_taus);
          double worst = 0.0;
          for (size_t i = 0; i < ode_taus.size(); ++i) {
            double d2 = 0.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
              d2 += std::norm(ode.samples[i].alpha[static_cast<size_t>(j)] -
                              ray.samples[i_lo + i].alpha[static_cast<size_t>(j)]);
              p2 += std::norm(ray.samples[i_lo + i].alpha[static_cast<size_t>(j)]);
            }
            if (p2 > 0.0) worst = std::max(worst, std::sqrt(d2 / p2));
          }
          pj["ode_comparison"] = {{"tau_lo", tau_lo},
                                  {"tau_hi", tau_hi},
                                  {"max_relative_deviation", worst}};
        }
        report["profile_diagnostics"] = pj;
        st.status = "ok";
        st.pass = true;
      } catch (const std::exception& e) {
        st.status = "failed";
        st.pass = false;
        st.detail = e.what();
        log(std::string("profile stage failed: ") + e.what());
      }
    }
    outcome.stages["profile"] = st;
  }

  // ---- fit stage ----
  if (cfg.fits.enabled) {
    StageStatus st;
    if (!solved || (blew_up && !cfg.exploratory)) {
      st.status = "skipped";
      st.detail = "no usable series";
      st.pass = false;
    } else if (blew_up) {
      st.status = "skipped";
      st.detail = "exploratory blow-up: series truncated";
    } else {
      try {
        const auto series = read_series_csv(dir / "series.csv");
        auto fit = run_fit_stage(cfg, series);
        for (auto it = fit.report.begin(); it != fit.report.end(); ++it) report[it.key()] = it.value();
        st.status = "ok";
        st.pass = fit.pass;
        st.detail = fit.pass ? "claims satisfied" : "claims violated";
        log("fits: " + st.detail);
      } catch (const std::exception& e) {
        st.status = "failed";
        st.pass = false;
        st.detail = e.what();
        log(std::string("fit stage failed: ") + e.what());
      }
    }
    outcome.stages["fits"] = st;
  }

  outcome.all_passed = true;
  for (const auto& [name, st] : outcome.stages)
    outcome.all_passed = outcome.all_passed && st.pass;
  report["pass"] = outcome.all_passed;
  std::ofstream(dir / "report.json") << report.dump(2) << '\n';

  // ---- manifest ----
  ordered_json manifest;
  manifest["format"] = "kgres-run-1";
  manifest["name"] = cfg.name;
  const std::string config_dump = serialize_scenario(cfg);
  manifest["config"] = config_to_json(cfg);
  manifest["config_hash"] = git_blob_hash(config_dump);
  ordered_json stages;
  for (const auto& [name, st] : outcome.stages)
    stages[name] = {{"status", st.status}, {"pass", st.pass}, {"detail", st.detail}};
  manifest["stages"] = stages;
  manifest["all_passed"] = outcome.all_passed;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';

  return outcome;
}

RunOutcome refit_run_directory(const std::string& directory, const RunSettings& settings) {
  const fs::path dir(directory);
  RunOutcome outcome;
  outcome.directory = directory;

  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::invalid_argument("no manifest.json in '" + directory + "'");
  njson manifest = njson::parse(in);
  const ScenarioConfig cfg = config_from_json(manifest.at("config"));

  const auto series = read_series_csv(dir / "series.csv");
  ScenarioConfig fit_cfg = cfg;
  fit_cfg.fits.enabled = true;
  auto fit = run_fit_stage(resolve_defaults(fit_cfg), series);

  // keep prior profile diagnostics, replace the fit sections
  ordered_json report;
  {
    std::ifstream rin(dir / "report.json");
    if (rin) {
      const ordered_json old = ordered_json::parse(rin);
      if (old.contains("profile_diagnostics")) report["profile_diagnostics"] = old["profile_diagnostics"];
      if (old.contains("blow_up")) report["blow_up"] = old["blow_up"];
    }
  }
  report["scenario"] = cfg.name;
  for (auto it = fit.report.begin(); it != fit.report.end(); ++it) report[it.key()] = it.value();
  report["pass"] = fit.pass;
  std::ofstream(dir / "report.json") << report.dump(2) << '\n';

  StageStatus st;
  st.status = "ok";
  st.pass = fit.pass;
  st.detail = fit.pass ? "claims satisfied" : "claims violated";
  outcome.stages["fits"] = st;
  outcome.all_passed = fit.pass;
  if (!settings.quiet) std::fputs(("refit: " + st.detail + "\n").c_str(), stdout);
  return outcome;
}

RunOutcome run_condition_only(const ScenarioConfig& raw_config, const RunSettings& settings) {
  ScenarioConfig cfg = raw_config;
  cfg.condition.enabled = true;
  cfg.profile.enabled = false;
  cfg.fits.enabled = false;

  RunOutcome outcome;
  const fs::path dir = settings.out_override.empty()
                           ? fs::path("runs") / (cfg.name + "-condition")
                           : fs::path(settings.out_override) / cfg.name;
  outcome.directory = dir.string();
  fs::create_directories(dir);

  const MassVector masses{cfg.masses};
  const CubicNonlinearity force(static_cast<int>(cfg.masses.size()), cfg.terms);
  const ReducedSystem sys(masses, force);
  const SamplingSpec spec{cfg.condition.z_max, cfg.condition.z_count, cfg.condition.sphere_count};

  StageStatus st;
  ordered_json cj;
  if (cfg.condition.has_matrix()) {
    const int n = masses.size();
    Eigen::MatrixXcd a(n, n);
    if (!cfg.condition.matrix_diagonal.empty()) {
      a.setZero();
      for (int i = 0; i < n; ++i) a(i, i) = cfg.condition.matrix_diagonal[static_cast<size_t>(i)];
    } else {
      for (int i = 0; i < n; ++i)
        for (int jj = 0; jj < n; ++jj)
          a(i, jj) = cfg.condition.matrix_rows[static_cast<size_t>(i)][static_cast<size_t>(jj)];
    }
    ConditionMatrix A(std::move(a));
    const auto rep = check_condition(A, sys, cfg.condition.k, spec);
    cj = condition_report_json(rep);
    cj["mode"] = "check";
    cj["matrix"] = matrix_json(A.entries());
    st.pass = rep.pass;
    if (!settings.quiet) std::fputs((rep.summary() + "\n").c_str(), stdout);
  } else {
    SearchOptions opt;
    opt.k = cfg.condition.k;
    opt.diagonal_only = cfg.condition.diagonal_search;
    opt.verify_samples = spec;
    const auto result = search_matrix(sys, opt);
    cj = condition_report_json(result.report);
    cj["mode"] = "search";
    cj["status"] = result.status == SearchResult::Status::Found ? "found"
                   : result.status == SearchResult::Status::CertifiedFailure ? "certified_failure"
                                                                             : "no_convergence";
    cj["matrix"] = matrix_json(result.matrix.entries());
    st.pass = result.status == SearchResult::Status::Found;
    if (!settings.quiet) std::fputs((result.summary() + "\n").c_str(), stdout);
  }
  std::ofstream(dir / "condition.json") << cj.dump(2) << '\n';
  st.status = "ok";
  outcome.stages["condition"] = st;
  outcome.all_passed = st.pass;
  return outcome;
}

}  // namespace kgres
