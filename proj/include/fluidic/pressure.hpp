#pragma once

#include <string_view>

namespace fluidic {

inline constexpr double kDefaultMaxPressureKpa = 300.0;

/// Gauge pressure in kPa (0 = atmospheric). Construction checks the range
/// [0, max]; vacuum is not modeled.
class Pressure {
 public:
  constexpr Pressure() = default;

  static Pressure kpa(double value, double max_kpa = kDefaultMaxPressureKpa);

  constexpr double value() const noexcept { return value_; }

  friend constexpr bool operator==(Pressure, Pressure) = default;
  friend constexpr auto operator<=>(Pressure, Pressure) = default;

 private:
  constexpr explicit Pressure(double v) : value_(v) {}
  double value_ = 0.0;
};

enum class LogicLevel { Low, High, Undefined };

std::string_view to_string(LogicLevel level);

/// `0`, `1` or `X`.
char logic_char(LogicLevel level);

struct RailConfig {
  double p_supply = 160.0;
  double p_high = 150.0;
  double p_low = 0.0;
  double logic_threshold = 80.0;

  bool valid() const noexcept;
  /// Throws Error when p_low < logic_threshold < p_high <= p_supply fails.
  void check() const;
};

LogicLevel kpa_to_logic(Pressure p, const RailConfig& cfg = {});
LogicLevel kpa_to_logic(double kpa, const RailConfig& cfg = {});

/// Throws Error for LogicLevel::Undefined.
Pressure logic_to_kpa(LogicLevel level, const RailConfig& cfg = {});

}  // namespace fluidic
