#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fluidic/netlist.hpp"
#include "fluidic/parser.hpp"
#include "fluidic/pressure.hpp"
#include "fluidic/simulator.hpp"

namespace fluidic {

/// Row i assigns input j the bit (i >> (k-1-j)) & 1: the first input is the
/// most significant, rows run 00..0 to 11..1.
struct TruthTable {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::vector<LogicLevel>> rows;

  bool input_bit(std::size_t row, std::size_t input) const;
  void write_csv(std::ostream& out) const;

  friend bool operator==(const TruthTable&, const TruthTable&) = default;
};

struct AnalysisOptions {
  RailConfig rails;
  std::uint64_t settle_budget = 1000;
};

/// Each row starts from the reset state. Throws NotCombinational when the
/// circuit holds state or a row oscillates or conflicts, BudgetExceeded when a
/// row does not settle within the budget.
TruthTable truth_table(const CircuitGraph& g, const AnalysisOptions& options = {});
TruthTable truth_table(const Network& net, std::uint64_t settle_budget);

enum class Verdict { Equivalent, Counterexample };
enum class Method { Exhaustive, BoundedSequence };

struct EquivalenceVerdict {
  Verdict verdict = Verdict::Equivalent;
  Method method = Method::Exhaustive;
  std::size_t bound = 0;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  /// One input row (combinational) or one row per step (sequential).
  std::vector<std::vector<bool>> counterexample;
  /// Outputs of each circuit per counterexample row, in `output_names` order.
  std::vector<std::vector<LogicLevel>> outputs_first;
  std::vector<std::vector<LogicLevel>> outputs_second;
  std::string context;
  std::uint64_t cases_checked = 0;

  bool equivalent() const noexcept { return verdict == Verdict::Equivalent; }
  std::string text() const;
};

/// Exhaustive truth-table comparison. Inputs and outputs are matched by name;
/// throws InterfaceMismatch when the name sets differ.
EquivalenceVerdict equiv_comb(const CircuitGraph& first, const CircuitGraph& second,
                              const AnalysisOptions& options = {});

struct SequenceOptions {
  std::size_t length = 6;
  RailConfig rails;
  std::uint64_t settle_budget = 1000;
  /// Allowed input rows (in the first circuit's input order); empty = all 2^k.
  std::vector<std::vector<bool>> alphabet;
};

/// Every input sequence of exactly `length` steps from reset, settling after
/// each step and comparing output logic after every step (which covers all
/// shorter sequences as prefixes). A step that oscillates, conflicts or runs
/// out of budget in either circuit is a counterexample.
EquivalenceVerdict equiv_seq(const CircuitGraph& first, const CircuitGraph& second,
                             const SequenceOptions& options = {});

struct StepOutcome {
  RunStatus status;
  bool conflict = false;
  std::vector<LogicLevel> outputs;
};

/// Applies `sequence` from reset with the same settling discipline as equiv_seq.
/// Rows follow `input_names`, which must be a permutation of the circuit inputs.
std::vector<StepOutcome> replay_sequence(const CircuitGraph& g, std::span<const std::string> input_names,
                                         std::span<const std::vector<bool>> sequence,
                                         const SequenceOptions& options = {});

/// Stimulus holding step i from tick i * spacing, for replay through `run`.
Stimulus sequence_stimulus(const CircuitGraph& g, std::span<const std::string> input_names,
                           std::span<const std::vector<bool>> sequence, std::uint64_t spacing);

}  // namespace fluidic
