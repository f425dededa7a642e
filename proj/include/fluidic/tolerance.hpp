#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fluidic/netlist.hpp"
#include "fluidic/parser.hpp"
#include "fluidic/valve.hpp"

namespace fluidic {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
};

/// Independent uniform snap thresholds per valve.
struct ToleranceModel {
  Range snap_through{103.0, 153.0};
  Range snap_back{40.0, 73.0};
  std::uint64_t seed = 42;

  /// Throws Error for lo > hi, non-finite or negative bounds, or ranges that
  /// admit no spec with snap_back < snap_through.
  void check() const;
};

struct SpecSample {
  std::vector<ValveSpec> specs;
  /// Draws rejected because snap_back >= snap_through.
  std::uint64_t redraws = 0;
};

/// Deterministic in (model.seed, trial). Specs are monostable and unlabeled.
SpecSample sample_specs(const ToleranceModel& model, std::size_t n_valves, std::uint64_t trial);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Wilson score interval at 95 % confidence.
Interval wilson_interval(std::uint64_t passes, std::uint64_t trials);

/// A valve resting at a threshold keeps its state when its control
/// differential is pushed back by `d`: held Down at snap-through, or held Up at
/// snap-back. True iff d < hysteresis width.
bool disturbance_retained(const ValveSpec& spec, double d);

enum class CheckMode { TruthTable, Stimulus, Disturbance };

struct MarginCheck {
  CheckMode mode = CheckMode::TruthTable;
  std::optional<Stimulus> stimulus;
  double disturbance_kpa = 0.0;
};

enum class FailureCategory { None, NoSnap, SpuriousSnap, LogicMismatch };

std::string_view to_string(FailureCategory c);

struct TrialResult {
  std::uint64_t trial = 0;
  bool pass = false;
  FailureCategory category = FailureCategory::None;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct ValveMargin {
  std::string valve;
  double worst_kpa = 0.0;

  friend bool operator==(const ValveMargin&, const ValveMargin&) = default;
};

struct MarginOptions {
  double p_high = 153.0;
  std::uint64_t trials = 1000;
  MarginCheck check;
  /// 0 = hardware concurrency.
  unsigned threads = 0;
  std::uint64_t settle_budget = 1000;
  std::uint64_t max_ticks = 10000;
};

struct MarginReport {
  std::uint64_t trials = 0;
  std::uint64_t passes = 0;
  double pass_fraction = 0.0;
  Interval wilson;
  std::uint64_t no_snap = 0;
  std::uint64_t spurious_snap = 0;
  std::uint64_t logic_mismatch = 0;
  std::uint64_t redraws = 0;
  double p_high = 0.0;
  std::uint64_t seed = 0;
  /// Closest approach to the wrong side of a threshold over all trials, in
  /// valve order. Negative where some trial switched the wrong way.
  std::vector<ValveMargin> valve_margins;
  std::vector<TrialResult> results;

  /// key=value lines.
  std::string text() const;
  /// `trial,pass,failure_category`
  void write_csv(std::ostream& out) const;

  friend bool operator==(const MarginReport&, const MarginReport&) = default;
};

/// Runs the check once per trial with sampled thresholds on every valve.
/// Inputs drive at p_high and the supply at max(160, p_high); the reference
/// is the nominal circuit at default rails.
MarginReport margin_analysis(const CircuitGraph& g, const ToleranceModel& model, const MarginOptions& options);

}  // namespace fluidic
