#pragma once

#include <string>

#include "fluidic/parser.hpp"

namespace fluidic::testing {

inline std::string fixture_path(const std::string& name) { return std::string(FLUIDIC_CIRCUITS_DIR) + "/" + name; }

inline CircuitGraph fixture(const std::string& name) { return load_netlist(fixture_path(name)); }

}  // namespace fluidic::testing
