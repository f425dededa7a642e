#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluidic/netlist.hpp"
#include "fluidic/parser.hpp"
#include "fluidic/pressure.hpp"
#include "fluidic/valve.hpp"

namespace fluidic {

enum class NetStatus { Driven, Trapped, Conflict };

std::string_view to_string(NetStatus s);

struct NetValue {
  double kpa = 0.0;
  NetStatus status = NetStatus::Trapped;

  friend bool operator==(const NetValue&, const NetValue&) = default;
};

struct NetSolution {
  std::vector<NetValue> nets;

  bool has_conflict() const noexcept;

  friend bool operator==(const NetSolution&, const NetSolution&) = default;
};

/// A valve-level circuit compiled to net indices. Gate-level graphs are
/// elaborated on construction.
class Network {
 public:
  struct Valve {
    std::string name;
    ValveSpec spec;
    MembraneState initial = MembraneState::Up;
    std::size_t ctrl_top = 0;
    std::size_t ctrl_bottom = 0;
    std::size_t top_in = 0;
    std::size_t top_out = 0;
    std::size_t bot_in = 0;
    std::size_t bot_out = 0;
  };

  explicit Network(const CircuitGraph& g, const RailConfig& rails = {});

  const CircuitGraph& graph() const noexcept { return graph_; }
  const RailConfig& rails() const noexcept { return rails_; }
  const std::vector<std::string>& net_names() const noexcept { return net_names_; }
  std::optional<std::size_t> net_index(std::string_view name) const;
  const std::vector<std::string>& input_names() const noexcept { return input_names_; }
  std::span<const std::size_t> input_nets() const noexcept { return input_nets_; }
  std::span<const std::size_t> output_nets() const noexcept { return output_nets_; }
  std::span<const Valve> valves() const noexcept { return valves_; }
  /// Fixed source pressure per net, if any.
  const std::vector<std::optional<double>>& fixed_sources() const noexcept { return fixed_; }

  /// Replaces valve thresholds (stability and state stay); `specs` follow valve order.
  void set_valve_thresholds(std::span<const ValveSpec> specs);
  void set_fixed_source(std::string_view net, double kpa);
  void set_rails(const RailConfig& rails);

 private:
  CircuitGraph graph_;
  RailConfig rails_;
  std::vector<std::string> net_names_;
  std::vector<std::string> input_names_;
  std::vector<std::size_t> input_nets_;
  std::vector<std::size_t> output_nets_;
  std::vector<Valve> valves_;
  std::vector<std::optional<double>> fixed_;
};

struct SimOptions {
  /// A net trapped for this many consecutive ticks vents to 0 kPa. 0 = never.
  std::uint32_t leak_after_ticks = 0;
  /// Global states kept for cycle detection.
  std::size_t history_window = 256;
};

/// Everything the next tick depends on besides the inputs.
struct SimState {
  std::vector<MembraneState> membranes;
  std::vector<double> pressures;
  std::vector<std::uint32_t> trapped_age;
  std::vector<std::uint8_t> ever_driven;

  friend bool operator==(const SimState&, const SimState&) = default;
};

SimState initial_state(const Network& net);

/// Open tubes merge their end nets; each merged component takes its unique
/// source pressure, holds its previous (mean) pressure when sourceless, or is a
/// Conflict carrying the mean of the disagreeing sources.
NetSolution resolve_nets(const Network& net, std::span<const MembraneState> membranes,
                         std::span<const double> input_kpa, std::span<const double> previous_kpa);

LogicLevel net_logic(const NetValue& value, bool ever_driven, const RailConfig& rails);

struct TickResult {
  SimState next;
  NetSolution solution;
};

/// Resolves nets with the current membranes, then updates every membrane at
/// once from its chamber differential (unit delay).
TickResult tick(const Network& net, const SimState& state, std::span<const double> input_kpa,
                const SimOptions& options = {});

enum class RunStatusKind { Settled, Oscillating, Conflict, Truncated };

struct RunStatus {
  RunStatusKind kind = RunStatusKind::Truncated;
  /// Settled: first tick of the fixed point. Conflict: first conflicting tick.
  /// Truncated: the tick budget.
  std::uint64_t tick = 0;
  /// Oscillating: cycle length in ticks.
  std::uint64_t period = 0;

  /// `status=Settled tick=4`, `status=Oscillating period=6`, ...
  std::string to_string() const;

  friend bool operator==(const RunStatus&, const RunStatus&) = default;
};

struct Frame {
  std::uint64_t tick = 0;
  std::vector<double> inputs_kpa;
  std::vector<MembraneState> membranes;
  NetSolution solution;
  std::vector<LogicLevel> logic;
};

struct Waveform {
  std::vector<std::string> net_names;
  std::vector<std::string> valve_names;
  std::vector<Frame> frames;
  RunStatus status;
  /// Settled/Oscillating/Truncated outcome even when a conflict took precedence.
  RunStatus dynamics;

  const Frame& final_frame() const { return frames.back(); }
  LogicLevel logic(std::string_view net, std::size_t frame) const;
  double kpa(std::string_view net, std::size_t frame) const;
};

/// Detects settling and cycles over a window of global states.
class CycleDetector {
 public:
  /// `leak_after_ticks` as in SimOptions; trapped ages beyond it are equivalent.
  CycleDetector(std::size_t window, std::uint32_t leak_after_ticks)
      : window_(window), leak_after_(leak_after_ticks) {}

  void clear() { history_.clear(); }
  /// 1 for a repeat of the previous state (settled), p >= 2 for a cycle, 0 otherwise.
  std::uint64_t observe(const SimState& pre_update, const NetSolution& solution);

 private:
  struct Snapshot {
    std::vector<MembraneState> membranes;
    NetSolution solution;
    std::vector<std::uint32_t> trapped_age;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
  };
  std::size_t window_;
  std::uint32_t leak_after_;
  std::deque<Snapshot> history_;
};

struct SettleResult {
  RunStatus status;
  NetSolution solution;
  std::vector<MembraneState> membranes;
  std::uint64_t ticks = 0;
  bool conflict = false;
};

/// Stateful stepping over one Network, used by the analyses.
class Simulator {
 public:
  explicit Simulator(const Network& net, SimOptions options = {});

  void reset();
  const SimState& state() const noexcept { return state_; }
  void restore(SimState state) { state_ = std::move(state); }

  NetSolution step(std::span<const double> input_kpa);
  /// Holds the inputs until a fixed point, a cycle or the budget.
  SettleResult settle(std::span<const double> input_kpa, std::uint64_t budget);

  std::vector<LogicLevel> output_logic(const NetSolution& solution) const;

 private:
  const Network* net_;
  SimOptions options_;
  SimState state_;
};

/// Runs the stimulus from the initial state. Settling and cycles are only
/// declared once the last stimulus change has been applied.
Waveform run(const Network& net, const Stimulus& stimulus, std::uint64_t max_ticks = 10000,
             const SimOptions& options = {});

/// `tick,signal,pressure_kpa,logic`, one row per net per tick, then
/// `# status=...`.
void write_waveform_csv(std::ostream& out, const Waveform& waveform);

}  // namespace fluidic
