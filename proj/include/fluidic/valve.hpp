#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fluidic {

enum class Stability { Monostable, Bistable };

std::string_view to_string(Stability s);

/// Snap thresholds of one membrane valve. A pressure differential
/// top-minus-bottom at or above `snap_through_kpa` flips the membrane Down;
/// the return threshold depends on the stability mode (see membrane_update).
struct ValveSpec {
  double snap_through_kpa = 134.0;
  double snap_back_kpa = 56.0;
  Stability stability = Stability::Monostable;
  std::string label;

  double hysteresis_width() const noexcept { return snap_through_kpa - snap_back_kpa; }

  bool valid() const noexcept;
  void check() const;

  friend bool operator==(const ValveSpec&, const ValveSpec&) = default;
};

enum class MembraneState { Up, Down };

std::string_view to_string(MembraneState s);

enum class TubeState { Open, Kinked };

/// Up kinks the top tube and opens the bottom one; Down is the mirror image.
struct TubeStates {
  TubeState top;
  TubeState bottom;

  friend bool operator==(const TubeStates&, const TubeStates&) = default;
};

TubeStates tube_states(MembraneState state) noexcept;

/// Monostable: Up->Down iff delta >= snap_through, Down->Up iff delta <= snap_back.
/// Bistable:   Up->Down iff delta >= snap_through, Down->Up iff delta <= -snap_back.
/// `delta_p_kpa` is P(top chamber) - P(bottom chamber).
MembraneState membrane_update(const ValveSpec& spec, MembraneState state, double delta_p_kpa) noexcept;

/// Geometric design parameters of the printed membrane. Carried for
/// documentation only; none of these feed the simulation.
struct ValveDesignParams {
  double t_top_mm = 0.0;
  double t_base_mm = 0.0;
  double theta_deg = 0.0;
  double r_t_mm = 0.0;
  double r_w_mm = 0.0;
  double v_id_mm = 0.0;

  /// Qualitative trend only: larger values require a higher control
  /// pressure, with the inner diameter as the exception.
  static constexpr std::string_view kTrend =
      "larger t_top, t_base, theta, r_t, r_w raise the actuation pressure; v_id does not";

  bool valid() const noexcept;
};

struct SweepPoint {
  double control_kpa;
  double output_kpa;

  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

/// Quasi-static characterization: supply feeds the bottom tube, atmosphere the
/// top tube, both tubes join at the output. The membrane starts Up and is
/// updated once per control point.
std::vector<SweepPoint> sweep_hysteresis(const ValveSpec& spec, double p_supply_kpa,
                                         std::span<const double> ramp);

/// 0, step, ..., peak, ..., step, 0. `peak` is always included.
std::vector<double> triangle_ramp(double peak_kpa, double step_kpa);

struct SwitchPoints {
  double rising_kpa;   // first control value on the rising leg where output drops
  double falling_kpa;  // first control value on the falling leg where output recovers

  double width() const noexcept { return rising_kpa - falling_kpa; }
};

/// Locates the two output transitions in a triangle sweep. Empty when either
/// transition is missing (e.g. bistable valves never reset on a positive ramp).
std::optional<SwitchPoints> measure_switch_points(std::span<const SweepPoint> curve);

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> curve);

}  // namespace fluidic
