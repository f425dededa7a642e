#include "fluidic/valve.hpp"

#include <cmath>

#include "fluidic/error.hpp"
#include "fluidic/numeric.hpp"

namespace fluidic {

std::string_view to_string(Stability s) {
  return s == Stability::Bistable ? "bistable" : "monostable";
}

std::string_view to_string(MembraneState s) { return s == MembraneState::Down ? "down" : "up"; }

bool ValveSpec::valid() const noexcept {
  return std::isfinite(snap_through_kpa) && std::isfinite(snap_back_kpa) && snap_back_kpa > 0.0 &&
         snap_back_kpa < snap_through_kpa;
}

void ValveSpec::check() const {
  if (!valid()) {
    throw Error("valve '" + label + "': requires 0 < snap_back (" + format_number(snap_back_kpa) +
                ") < snap_through (" + format_number(snap_through_kpa) + ")");
  }
}

TubeStates tube_states(MembraneState state) noexcept {
  if (state == MembraneState::Up) {
    return {TubeState::Kinked, TubeState::Open};
  }
  return {TubeState::Open, TubeState::Kinked};
}

MembraneState membrane_update(const ValveSpec& spec, MembraneState state, double delta_p_kpa) noexcept {
  if (state == MembraneState::Up) {
    return delta_p_kpa >= spec.snap_through_kpa ? MembraneState::Down : MembraneState::Up;
  }
  const double reset =
      spec.stability == Stability::Monostable ? spec.snap_back_kpa : -spec.snap_back_kpa;
  return delta_p_kpa <= reset ? MembraneState::Up : MembraneState::Down;
}

bool ValveDesignParams::valid() const noexcept {
  return t_top_mm > 0 && t_base_mm > 0 && theta_deg > 0 && r_t_mm > 0 && r_w_mm > 0 && v_id_mm > 0;
}

std::vector<SweepPoint> sweep_hysteresis(const ValveSpec& spec, double p_supply_kpa,
                                         std::span<const double> ramp) {
  spec.check();
  if (!std::isfinite(p_supply_kpa)) {
    throw Error("supply pressure must be finite");
  }
  std::vector<SweepPoint> curve;
  curve.reserve(ramp.size());
  MembraneState state = MembraneState::Up;
  for (double control : ramp) {
    if (!std::isfinite(control)) {
      throw Error("sweep control values must be finite");
    }
    // Atmosphere on the bottom chamber, so the differential is the control.
    state = membrane_update(spec, state, control);
    const bool bottom_open = tube_states(state).bottom == TubeState::Open;
    curve.push_back({control, bottom_open ? p_supply_kpa : 0.0});
  }
  return curve;
}

std::vector<double> triangle_ramp(double peak_kpa, double step_kpa) {
  if (!(step_kpa > 0.0) || !std::isfinite(step_kpa) || !std::isfinite(peak_kpa) || peak_kpa < 0.0) {
    throw Error("triangle ramp needs a positive step and a non-negative peak");
  }
  std::vector<double> rising;
  for (long k = 0;; ++k) {
    const double v = static_cast<double>(k) * step_kpa;
    if (v >= peak_kpa) {
      break;
    }
    rising.push_back(v);
  }
  std::vector<double> ramp = rising;
  ramp.push_back(peak_kpa);
  ramp.insert(ramp.end(), rising.rbegin(), rising.rend());
  return ramp;
}

std::optional<SwitchPoints> measure_switch_points(std::span<const SweepPoint> curve) {
  if (curve.empty()) {
    return std::nullopt;
  }
  std::size_t peak = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].control_kpa > curve[peak].control_kpa) {
      peak = i;
    }
  }
  std::optional<double> rising;
  for (std::size_t i = 1; i <= peak && !rising; ++i) {
    if (curve[i - 1].output_kpa > 0.0 && curve[i].output_kpa == 0.0) {
      rising = curve[i].control_kpa;
    }
  }
  std::optional<double> falling;
  for (std::size_t i = peak + 1; i < curve.size() && !falling; ++i) {
    if (curve[i - 1].output_kpa == 0.0 && curve[i].output_kpa > 0.0) {
      falling = curve[i].control_kpa;
    }
  }
  if (!rising || !falling) {
    return std::nullopt;
  }
  return SwitchPoints{*rising, *falling};
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> curve) {
  out << "control_kpa,output_kpa\n";
  for (const auto& p : curve) {
    out << format_number(p.control_kpa) << ',' << format_number(p.output_kpa) << '\n';
  }
}

}  // namespace fluidic
