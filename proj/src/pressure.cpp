#include "fluidic/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fluidic/error.hpp"

namespace fluidic {

Pressure Pressure::kpa(double value, double max_kpa) {
  if (!std::isfinite(value)) {
    throw Error("pressure must be finite");
  }
  if (value < 0.0) {
    throw Error("negative gauge pressure " + std::to_string(value) + " kPa");
  }
  if (value > max_kpa) {
    throw Error("pressure " + std::to_string(value) + " kPa exceeds system maximum " +
                std::to_string(max_kpa) + " kPa");
  }
  return Pressure(value);
}

std::string_view to_string(LogicLevel level) {
  switch (level) {
    case LogicLevel::Low:
      return "LOW";
    case LogicLevel::High:
      return "HIGH";
    case LogicLevel::Undefined:
      break;
  }
  return "UNDEFINED";
}

char logic_char(LogicLevel level) {
  switch (level) {
    case LogicLevel::Low:
      return '0';
    case LogicLevel::High:
      return '1';
    case LogicLevel::Undefined:
      break;
  }
  return 'X';
}

bool RailConfig::valid() const noexcept {
  return p_low < logic_threshold && logic_threshold < p_high && p_high <= p_supply;
}

void RailConfig::check() const {
  if (!valid()) {
    throw Error("rail configuration requires p_low < logic_threshold < p_high <= p_supply");
  }
}

LogicLevel kpa_to_logic(double kpa, const RailConfig& cfg) {
  return kpa >= cfg.logic_threshold ? LogicLevel::High : LogicLevel::Low;
}

LogicLevel kpa_to_logic(Pressure p, const RailConfig& cfg) { return kpa_to_logic(p.value(), cfg); }

Pressure logic_to_kpa(LogicLevel level, const RailConfig& cfg) {
  switch (level) {
    case LogicLevel::High:
      return Pressure::kpa(cfg.p_high, std::max(cfg.p_high, kDefaultMaxPressureKpa));
    case LogicLevel::Low:
      return Pressure::kpa(cfg.p_low, std::max(cfg.p_high, kDefaultMaxPressureKpa));
    case LogicLevel::Undefined:
      break;
  }
  throw Error("cannot synthesize a rail pressure for an UNDEFINED logic level");
}

}  // namespace fluidic
