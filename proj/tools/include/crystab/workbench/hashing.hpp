#pragma once

#include <string>
#include <string_view>

#include "crystab/workbench/config.hpp"

namespace crystab::workbench {

std::string sha256_hex(std::string_view data);

std::string config_hash(const RunConfig& config);

/// SHA-256 over (density spec, e, Z, M_basis).
std::string ground_state_key(const IonDensity& d, double e, double Z, int cutoff);

}  // namespace crystab::workbench
