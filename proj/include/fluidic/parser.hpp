#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fluidic/netlist.hpp"
#include "fluidic/pressure.hpp"

namespace fluidic {

struct ParseOptions {
  double max_pressure_kpa = kDefaultMaxPressureKpa;
};

/// Line-oriented netlist text (`.fnl`). One statement per line, `#` comments:
///
///   source SUPPLY 160
///   input A B
///   output Q
///   param snap_through=134 snap_back=56
///   gate INHIBIT g1 a=A b=B out=Q
///   valve v1 mode=bistable ctrl_top=S ctrl_bottom=R top_in=SUPPLY top_out=Q
///         bot_in=ATM bot_out=Q snap_through=134 snap_back=56 init=up
///
/// (a valve statement is a single line). The result is validated; any error is
/// a ParseError carrying the offending line.
CircuitGraph parse_netlist(std::string_view text, const ParseOptions& options = {});

CircuitGraph load_netlist(const std::filesystem::path& path, const ParseOptions& options = {});

/// Text that parses back to an equal graph.
std::string serialize_netlist(const CircuitGraph& g);

struct StimulusCell {
  enum class Kind { Logic, Kpa };
  Kind kind = Kind::Logic;
  LogicLevel level = LogicLevel::Low;
  double kpa = 0.0;

  static StimulusCell logic(bool high) {
    return {Kind::Logic, high ? LogicLevel::High : LogicLevel::Low, 0.0};
  }
  static StimulusCell pressure(double kpa) { return {Kind::Kpa, LogicLevel::Low, kpa}; }

  double resolve(const RailConfig& rails) const;

  friend bool operator==(const StimulusCell&, const StimulusCell&) = default;
};

struct StimulusRow {
  std::uint64_t tick = 0;
  std::vector<StimulusCell> cells;

  friend bool operator==(const StimulusRow&, const StimulusRow&) = default;
};

/// Input assignments that change at row ticks and hold until the next row.
/// Cells line up with `inputs`, which follows the netlist's declaration order.
/// Before the first row every input sits at p_low.
struct Stimulus {
  std::vector<std::string> inputs;
  std::vector<StimulusRow> rows;

  std::uint64_t last_change_tick() const noexcept { return rows.empty() ? 0 : rows.back().tick; }
  std::vector<double> pressures_at(std::uint64_t tick, const RailConfig& rails) const;

  friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

/// CSV with header `tick,<signal>,...`. Cells are `0`/`1` (logic levels), any
/// other decimal (kPa), or `hold` (repeat the previous row).
Stimulus parse_stimulus(std::string_view text, const CircuitGraph& netlist, const ParseOptions& options = {});

Stimulus load_stimulus(const std::filesystem::path& path, const CircuitGraph& netlist,
                       const ParseOptions& options = {});

std::string serialize_stimulus(const Stimulus& stimulus);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fluidic
