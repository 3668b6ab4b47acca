#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crystab/crystab.hpp"

namespace crystab::workbench {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct CounterexampleConfig {
  std::string base;  // density spec JSON of the base shape
  IVec3 m0{1, 0, 0};
  double s = 0.05;
  double width = 0.5;
};

struct RunConfig {
  std::string density;  // density spec JSON
  double e = 0.1;
  double Z = 1.0;
  double ion_mass = 1.0;
  int basis_cutoff = 2;

  int grid_L = 8;
  double exclusion = 0.05 * kTwoPi;
  bool cell_centred = true;
  std::string scan_kind = "positivity";

  std::vector<double> e_grid{0.02, 0.04, 0.08, 0.16};

  double horizon = 100.0;
  int samples = 11;
  int supercell_L = 2;
  std::string initial = "random";

  CounterexampleConfig counterexample;

  double solver_tol = 1e-9;
  int solver_max_iterations = 10000;

  std::string output_dir = "out";
  std::uint64_t seed = 1;

  /// Every field with defaults filled in, keys sorted; the config hash is taken over this text.
  std::string canonical_json() const;
  GroundStateOptions solver_options() const;
  /// The ion density with sigma~(0) = e Z unless the density entry pins eZ.
  IonDensity make_density() const;
  std::vector<double> times() const;
};

/// Throws ConfigError on malformed JSON, unknown keys, missing density or non-positive parameters.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace crystab::workbench
