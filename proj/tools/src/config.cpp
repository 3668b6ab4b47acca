#include "crystab/workbench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace crystab::workbench {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ConfigError(std::string("config: ") + what + " must be positive");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(j,
                   {"density", "e", "Z", "ion_mass", "basis_cutoff", "grid", "scan", "e_grid", "time", "counterexample",
                    "solver", "output_dir", "seed"},
                   "config");
    if (!j.contains("density") || !j.at("density").is_object()) throw ConfigError("config: missing 'density' object");
    c.density = j.at("density").dump();
    read(j, "e", c.e);
    read(j, "Z", c.Z);
    read(j, "ion_mass", c.ion_mass);
    read(j, "basis_cutoff", c.basis_cutoff);
    read(j, "e_grid", c.e_grid);
    read(j, "output_dir", c.output_dir);
    read(j, "seed", c.seed);
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      reject_unknown(g, {"L", "exclusion", "cell_centred"}, "config.grid");
      read(g, "L", c.grid_L);
      read(g, "exclusion", c.exclusion);
      read(g, "cell_centred", c.cell_centred);
    }
    if (j.contains("scan")) {
      reject_unknown(j.at("scan"), {"kind"}, "config.scan");
      read(j.at("scan"), "kind", c.scan_kind);
    }
    if (j.contains("time")) {
      const json& t = j.at("time");
      reject_unknown(t, {"horizon", "samples", "supercell_L", "initial"}, "config.time");
      read(t, "horizon", c.horizon);
      read(t, "samples", c.samples);
      read(t, "supercell_L", c.supercell_L);
      read(t, "initial", c.initial);
    }
    if (j.contains("solver")) {
      reject_unknown(j.at("solver"), {"tol", "max_iterations"}, "config.solver");
      read(j.at("solver"), "tol", c.solver_tol);
      read(j.at("solver"), "max_iterations", c.solver_max_iterations);
    }
    c.counterexample.base = json{{"family", "gaussian"}, {"params", {{"width", 0.05}}}}.dump();
    if (j.contains("counterexample")) {
      const json& x = j.at("counterexample");
      reject_unknown(x, {"base", "m0", "s", "width"}, "config.counterexample");
      if (x.contains("base")) c.counterexample.base = x.at("base").dump();
      if (x.contains("m0")) {
        const auto m = x.at("m0").get<std::vector<int>>();
        if (m.size() != 3) throw ConfigError("config.counterexample: m0 needs three integers");
        c.counterexample.m0 = {m[0], m[1], m[2]};
      }
      read(x, "s", c.counterexample.s);
      read(x, "width", c.counterexample.width);
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }

  require_positive(c.e, "e");
  require_positive(c.Z, "Z");
  require_positive(c.ion_mass, "ion_mass");
  require_positive(c.solver_tol, "solver.tol");
  if (c.basis_cutoff < 1) throw ConfigError("config: basis_cutoff must be >= 1");
  if (c.grid_L < 1) throw ConfigError("config: grid.L must be >= 1");
  if (!(c.exclusion >= 0.0)) throw ConfigError("config: grid.exclusion must be >= 0");
  if (c.scan_kind != "positivity" && c.scan_kind != "wiener")
    throw ConfigError("config: scan.kind must be 'positivity' or 'wiener'");
  for (double e : c.e_grid) require_positive(e, "e_grid entries");
  if (!(c.horizon >= 0.0)) throw ConfigError("config: time.horizon must be >= 0");
  if (c.samples < 1) throw ConfigError("config: time.samples must be >= 1");
  if (c.supercell_L < 1) throw ConfigError("config: time.supercell_L must be >= 1");
  if (c.initial != "random" && c.initial != "zero") throw ConfigError("config: time.initial must be 'random' or 'zero'");
  if (!(c.counterexample.s > 0.0 && c.counterexample.s <= 1.0))
    throw ConfigError("config: counterexample.s must lie in (0, 1]");
  require_positive(c.counterexample.width, "counterexample.width");
  if (c.solver_max_iterations < 1) throw ConfigError("config: solver.max_iterations must be >= 1");
  if (c.output_dir.empty()) throw ConfigError("config: output_dir is empty");
  c.make_density();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

IonDensity RunConfig::make_density() const {
  try {
    return density_from_json(density, e * Z);
  } catch (const InvalidArgument& ex) {
    throw ConfigError(ex.what());
  }
}

GroundStateOptions RunConfig::solver_options() const {
  GroundStateOptions o;
  o.tol = solver_tol;
  o.max_iterations = solver_max_iterations;
  return o;
}

std::vector<double> RunConfig::times() const {
  std::vector<double> t(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) t[static_cast<std::size_t>(i)] = samples == 1 ? horizon : horizon * i / (samples - 1);
  return t;
}

std::string RunConfig::canonical_json() const {
  json j;
  j["density"] = json::parse(density);
  j["e"] = e;
  j["Z"] = Z;
  j["ion_mass"] = ion_mass;
  j["basis_cutoff"] = basis_cutoff;
  j["grid"] = {{"L", grid_L}, {"exclusion", exclusion}, {"cell_centred", cell_centred}};
  j["scan"] = {{"kind", scan_kind}};
  j["e_grid"] = e_grid;
  j["time"] = {{"horizon", horizon}, {"samples", samples}, {"supercell_L", supercell_L}, {"initial", initial}};
  j["counterexample"] = {{"base", json::parse(counterexample.base)},
                         {"m0", {counterexample.m0[0], counterexample.m0[1], counterexample.m0[2]}},
                         {"s", counterexample.s},
                         {"width", counterexample.width}};
  j["solver"] = {{"tol", solver_tol}, {"max_iterations", solver_max_iterations}};
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  return j.dump();
}

}  // namespace crystab::workbench
