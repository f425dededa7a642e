#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluidic/pressure.hpp"
#include "fluidic/valve.hpp"

namespace fluidic {

inline constexpr std::string_view kSupplyNet = "SUPPLY";
inline constexpr std::string_view kAtmNet = "ATM";

enum class GateKind { Not, And, Or, Inhibit, Buffer, SrLatch, Xor5, Xor3, DLatch6, DLatch3 };

std::string_view to_string(GateKind kind);
/// Case-insensitive.
std::optional<GateKind> parse_gate_kind(std::string_view text);

/// Input pin names in canonical order: {in}, {a,b}, {s,r} or {d,clk}.
std::span<const std::string_view> input_pins(GateKind kind);
bool is_macro(GateKind kind);
/// SRLATCH and the D-latch macros carry an initial Q.
bool has_initial_state(GateKind kind);

struct Gate {
  GateKind kind = GateKind::Not;
  std::string name;
  std::vector<std::string> inputs;
  std::string output;
  bool init_high = false;

  friend bool operator==(const Gate&, const Gate&) = default;
};

struct ValvePorts {
  std::string ctrl_top;
  std::string ctrl_bottom{kAtmNet};
  std::string top_in;
  std::string top_out;
  std::string bot_in;
  std::string bot_out;

  friend bool operator==(const ValvePorts&, const ValvePorts&) = default;
};

struct ValveInstance {
  std::string name;
  ValveSpec spec;
  MembraneState initial = MembraneState::Up;
  ValvePorts ports;

  friend bool operator==(const ValveInstance&, const ValveInstance&) = default;
};

enum class SourceKind { Fixed, Input };

struct Source {
  std::string net;
  SourceKind kind = SourceKind::Fixed;
  double kpa = 0.0;

  friend bool operator==(const Source&, const Source&) = default;
};

enum class Level { Gate, Valve };

/// A pneumatic circuit at gate level (gates only) or valve level (valves only).
/// Nets are implicit: every name referenced by a source, port, pin or output.
struct CircuitGraph {
  Level level = Level::Gate;
  std::vector<Source> sources;
  std::vector<std::string> outputs;
  std::vector<Gate> gates;
  std::vector<ValveInstance> valves;
  /// Thresholds for the valves that gates elaborate into.
  ValveSpec gate_spec;

  std::vector<std::string> inputs() const;
  const Source* find_source(std::string_view net) const;
  /// Every net in first-appearance order: sources, outputs, then elements.
  std::vector<std::string> nets() const;
  bool empty() const noexcept { return gates.empty() && valves.empty(); }

  friend bool operator==(const CircuitGraph&, const CircuitGraph&) = default;
};

struct Violation {
  std::string subject;
  std::string rule;
  std::string message;
};

/// Empty iff every structural invariant holds. Rules: "conflicting fixed sources",
/// "conflicting sources", "duplicate name", "arity mismatch", "dangling port",
/// "undriven net", "multiple drivers", "unreachable output", "self-controlled valve",
/// "invalid valve spec", "mixed levels".
std::vector<Violation> validate(const CircuitGraph& g);

/// Throws ValidationError listing every violation.
void check_valid(const CircuitGraph& g);

/// Gate level -> valve level, one valve per primitive gate after macro expansion.
/// SUPPLY and ATM rails are added from `rails` when the netlist does not declare them.
CircuitGraph elaborate(const CircuitGraph& gate_level, const RailConfig& rails = {});

/// Valve-level graphs pass through; gate-level graphs are elaborated.
CircuitGraph to_valve_level(const CircuitGraph& g, const RailConfig& rails = {});

struct GateCount {
  std::map<GateKind, int> by_kind;
  int total = 0;

  int operator[](GateKind kind) const;
  /// "AND=2 NOT=2 OR=1 total=5"
  std::string summary() const;

  friend bool operator==(const GateCount&, const GateCount&) = default;
};

/// Counts after macro expansion. Valve-level graphs count one per valve under
/// no kind.
GateCount gate_count(const CircuitGraph& g);

/// True when the circuit can hold state: SRLATCH or D-latch macros, bistable
/// valves, or a feedback cycle through gates or valve control chambers.
bool holds_state(const CircuitGraph& g);

}  // namespace fluidic
