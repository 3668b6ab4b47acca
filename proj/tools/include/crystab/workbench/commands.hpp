#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "crystab/workbench/config.hpp"

namespace crystab::workbench {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kNegativeVerdict = 3,
  kNotConverged = 4,
  kNotPositive = 5,
};

struct Context {
  RunConfig config;
  std::filesystem::path out;
  unsigned threads = 1;
  bool force = false;
  std::string config_hash;
  std::ostream* log = nullptr;
};

/// Applies the command-line overrides and hashes the resulting config.
Context make_context(RunConfig config, const std::optional<std::filesystem::path>& out, unsigned threads,
                     const std::optional<std::uint64_t>& seed, bool force, std::ostream* log = nullptr);

struct CachedGroundState {
  GroundState gs;
  std::string key;
  bool cache_hit = false;
};

/// Loads <out>/cache/<key> or solves and stores it.
CachedGroundState obtain_ground_state(const Context& ctx, const IonDensity& d, double e);

int run_groundstate(const Context& ctx);
/// kind overrides config.scan_kind when non-empty.
int run_scan(const Context& ctx, const std::string& kind = {});
int run_evolve(const Context& ctx);
int run_counterexample(const Context& ctx);
int run_verify(const Context& ctx);

/// Dispatches a verb and maps library errors to exit codes.
int run_command(const std::string& verb, const Context& ctx, const std::string& scan_kind = {});

}  // namespace crystab::workbench
