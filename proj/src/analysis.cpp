#include "fluidic/analysis.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "fluidic/error.hpp"

namespace fluidic {

namespace {

std::vector<std::vector<bool>> all_rows(std::size_t k) {
  std::vector<std::vector<bool>> rows;
  const std::size_t n = std::size_t{1} << k;
  rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<bool> row(k);
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = ((r >> (k - 1 - j)) & 1U) != 0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> row_pressures(const std::vector<bool>& row, const RailConfig& rails) {
  std::vector<double> out;
  out.reserve(row.size());
  for (bool b : row) {
    out.push_back(b ? rails.p_high : rails.p_low);
  }
  return out;
}

// Position in `haystack` of each name in `names`.
std::vector<std::size_t> permutation(std::span<const std::string> names, const std::vector<std::string>& haystack) {
  std::vector<std::size_t> perm;
  for (const auto& n : names) {
    const auto it = std::find(haystack.begin(), haystack.end(), n);
    if (it == haystack.end()) {
      throw InterfaceMismatch("no signal named '" + n + "'");
    }
    perm.push_back(static_cast<std::size_t>(it - haystack.begin()));
  }
  return perm;
}

void check_interfaces(const CircuitGraph& a, const CircuitGraph& b) {
  const auto ai = a.inputs();
  const auto bi = b.inputs();
  const std::set<std::string> in_a(ai.begin(), ai.end()), in_b(bi.begin(), bi.end());
  const std::set<std::string> out_a(a.outputs.begin(), a.outputs.end()), out_b(b.outputs.begin(), b.outputs.end());
  if (in_a != in_b || out_a != out_b) {
    auto join = [](const std::set<std::string>& s) {
      std::string out;
      for (const auto& x : s) {
        out += (out.empty() ? "" : ",") + x;
      }
      return out;
    };
    throw InterfaceMismatch("interfaces differ: inputs {" + join(in_a) + "} vs {" + join(in_b) + "}, outputs {" +
                            join(out_a) + "} vs {" + join(out_b) + "}");
  }
}

std::string row_text(const std::vector<bool>& row) {
  std::string s;
  for (bool b : row) {
    s.push_back(b ? '1' : '0');
  }
  return s;
}

std::string logic_text(const std::vector<LogicLevel>& levels) {
  std::string s;
  for (auto l : levels) {
    s.push_back(logic_char(l));
  }
  return s;
}

// Drives one network through a sequence of rows given in a reference order.
class SequenceDriver {
 public:
  SequenceDriver(const CircuitGraph& g, std::span<const std::string> input_order,
                 std::span<const std::string> output_order, const RailConfig& rails, std::uint64_t budget)
      : net_(g, rails), sim_(net_), budget_(budget) {
    perm_in_ = permutation(net_.input_names(), std::vector<std::string>(input_order.begin(), input_order.end()));
    perm_out_ = permutation(output_order, net_.graph().outputs);
  }

  StepOutcome apply(const std::vector<bool>& reference_row) {
    std::vector<bool> row(perm_in_.size());
    for (std::size_t j = 0; j < perm_in_.size(); ++j) {
      row[j] = reference_row[perm_in_[j]];
    }
    const auto result = sim_.settle(row_pressures(row, net_.rails()), budget_);
    const auto own = sim_.output_logic(result.solution);
    StepOutcome outcome{result.status, result.conflict, {}};
    for (std::size_t idx : perm_out_) {
      outcome.outputs.push_back(own[idx]);
    }
    return outcome;
  }

  Simulator& sim() { return sim_; }

 private:
  Network net_;
  Simulator sim_;
  std::uint64_t budget_;
  std::vector<std::size_t> perm_in_;
  std::vector<std::size_t> perm_out_;
};

bool clean(const StepOutcome& o) { return o.status.kind == RunStatusKind::Settled && !o.conflict; }

std::string describe(const StepOutcome& o) {
  std::string s = o.status.to_string();
  if (o.conflict) {
    s += " with conflict";
  }
  return s;
}

}  // namespace

bool TruthTable::input_bit(std::size_t row, std::size_t input) const {
  return ((row >> (inputs.size() - 1 - input)) & 1U) != 0;
}

void TruthTable::write_csv(std::ostream& out) const {
  bool first = true;
  for (const auto& n : inputs) {
    out << (first ? "" : ",") << n;
    first = false;
  }
  for (const auto& n : outputs) {
    out << (first ? "" : ",") << n;
    first = false;
  }
  out << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    first = true;
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      out << (first ? "" : ",") << (input_bit(r, j) ? '1' : '0');
      first = false;
    }
    for (auto level : rows[r]) {
      out << (first ? "" : ",") << logic_char(level);
      first = false;
    }
    out << '\n';
  }
}

namespace {

TruthTable tabulate(const Network& net, std::uint64_t settle_budget) {
  TruthTable table;
  table.inputs = net.input_names();
  table.outputs = net.graph().outputs;
  if (table.inputs.size() > 20) {
    throw Error("too many inputs for exhaustive enumeration");
  }
  Simulator sim(net);
  for (const auto& row : all_rows(table.inputs.size())) {
    sim.reset();
    const auto result = sim.settle(row_pressures(row, net.rails()), settle_budget);
    if (result.conflict) {
      throw NotCombinational("row " + row_text(row) + " produces a pressure conflict");
    }
    if (result.status.kind == RunStatusKind::Oscillating) {
      throw NotCombinational("row " + row_text(row) + " oscillates with period " +
                             std::to_string(result.status.period));
    }
    if (result.status.kind != RunStatusKind::Settled) {
      throw BudgetExceeded("row " + row_text(row) + " did not settle within " + std::to_string(settle_budget) +
                           " ticks");
    }
    table.rows.push_back(sim.output_logic(result.solution));
  }
  return table;
}

}  // namespace

TruthTable truth_table(const Network& net, std::uint64_t settle_budget) {
  if (holds_state(net.graph())) {
    throw NotCombinational("circuit holds state (bistable valve or feedback); use sequence analysis");
  }
  return tabulate(net, settle_budget);
}

// The gate-level check is exact; the elaborated graph would be judged by the
// conservative tube-region rule.
TruthTable truth_table(const CircuitGraph& g, const AnalysisOptions& options) {
  if (holds_state(g)) {
    throw NotCombinational("circuit holds state (latch, bistable valve or feedback); use sequence analysis");
  }
  return tabulate(Network(g, options.rails), options.settle_budget);
}

std::string EquivalenceVerdict::text() const {
  std::ostringstream os;
  os << "verdict: " << (equivalent() ? "Equivalent" : "Counterexample") << '\n';
  os << "method: ";
  if (method == Method::Exhaustive) {
    os << "Exhaustive";
  } else {
    os << "BoundedSequence(" << bound << ")";
  }
  os << '\n' << "cases: " << cases_checked << '\n';
  if (!equivalent()) {
    os << "inputs:";
    for (const auto& n : input_names) {
      os << ' ' << n;
    }
    os << "\noutputs:";
    for (const auto& n : output_names) {
      os << ' ' << n;
    }
    os << '\n';
    for (std::size_t i = 0; i < counterexample.size(); ++i) {
      os << "step " << i + 1 << ": in=" << row_text(counterexample[i]);
      if (i < outputs_first.size()) {
        os << " first=" << logic_text(outputs_first[i]);
      }
      if (i < outputs_second.size()) {
        os << " second=" << logic_text(outputs_second[i]);
      }
      os << '\n';
    }
    if (!context.empty()) {
      os << "context: " << context << '\n';
    }
  }
  return os.str();
}

EquivalenceVerdict equiv_comb(const CircuitGraph& first, const CircuitGraph& second, const AnalysisOptions& options) {
  check_interfaces(first, second);
  const TruthTable t1 = truth_table(first, options);
  const TruthTable t2 = truth_table(second, options);
  const auto in_perm = permutation(t1.inputs, t2.inputs);
  const auto out_perm = permutation(t1.outputs, t2.outputs);

  EquivalenceVerdict v;
  v.method = Method::Exhaustive;
  v.input_names = t1.inputs;
  v.output_names = t1.outputs;
  const std::size_t k = t1.inputs.size();
  for (std::size_t r = 0; r < t1.rows.size(); ++r) {
    // Same assignment expressed in the second table's input order.
    std::size_t r2 = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (t1.input_bit(r, j)) {
        r2 |= std::size_t{1} << (k - 1 - in_perm[j]);
      }
    }
    std::vector<LogicLevel> outs2;
    for (std::size_t idx : out_perm) {
      outs2.push_back(t2.rows[r2][idx]);
    }
    ++v.cases_checked;
    if (outs2 != t1.rows[r]) {
      v.verdict = Verdict::Counterexample;
      std::vector<bool> row(k);
      for (std::size_t j = 0; j < k; ++j) {
        row[j] = t1.input_bit(r, j);
      }
      v.counterexample = {row};
      v.outputs_first = {t1.rows[r]};
      v.outputs_second = {outs2};
      return v;
    }
  }
  return v;
}

EquivalenceVerdict equiv_seq(const CircuitGraph& first, const CircuitGraph& second, const SequenceOptions& options) {
  check_interfaces(first, second);
  const auto inputs = first.inputs();
  const auto& outputs = first.outputs;
  SequenceDriver d1(first, inputs, outputs, options.rails, options.settle_budget);
  SequenceDriver d2(second, inputs, outputs, options.rails, options.settle_budget);

  auto alphabet = options.alphabet.empty() ? all_rows(inputs.size()) : options.alphabet;
  for (const auto& row : alphabet) {
    if (row.size() != inputs.size()) {
      throw Error("alphabet row width does not match the input count");
    }
  }

  EquivalenceVerdict v;
  v.method = Method::BoundedSequence;
  v.bound = options.length;
  v.input_names = inputs;
  v.output_names = outputs;
  if (options.length == 0) {
    return v;
  }

  std::vector<std::vector<bool>> seq;
  std::vector<std::vector<LogicLevel>> outs1, outs2;
  std::function<bool(std::size_t)> explore = [&](std::size_t depth) -> bool {
    const SimState s1 = d1.sim().state();
    const SimState s2 = d2.sim().state();
    for (const auto& row : alphabet) {
      d1.sim().restore(s1);
      d2.sim().restore(s2);
      const StepOutcome o1 = d1.apply(row);
      const StepOutcome o2 = d2.apply(row);
      seq.push_back(row);
      outs1.push_back(o1.outputs);
      outs2.push_back(o2.outputs);
      const bool mismatch = o1.outputs != o2.outputs;
      if (mismatch || !clean(o1) || !clean(o2)) {
        v.verdict = Verdict::Counterexample;
        v.counterexample = seq;
        v.outputs_first = outs1;
        v.outputs_second = outs2;
        if (!clean(o1) || !clean(o2)) {
          v.context = "step " + std::to_string(seq.size()) + ": first " + describe(o1) + ", second " + describe(o2);
        }
        return true;
      }
      if (depth + 1 < options.length) {
        if (explore(depth + 1)) {
          return true;
        }
      } else {
        ++v.cases_checked;
      }
      seq.pop_back();
      outs1.pop_back();
      outs2.pop_back();
    }
    return false;
  };
  explore(0);
  return v;
}

std::vector<StepOutcome> replay_sequence(const CircuitGraph& g, std::span<const std::string> input_names,
                                         std::span<const std::vector<bool>> sequence, const SequenceOptions& options) {
  SequenceDriver driver(g, input_names, g.outputs, options.rails, options.settle_budget);
  std::vector<StepOutcome> out;
  for (const auto& row : sequence) {
    out.push_back(driver.apply(row));
  }
  return out;
}

Stimulus sequence_stimulus(const CircuitGraph& g, std::span<const std::string> input_names,
                           std::span<const std::vector<bool>> sequence, std::uint64_t spacing) {
  if (spacing == 0) {
    throw Error("sequence spacing must be positive");
  }
  Stimulus stim;
  stim.inputs = g.inputs();
  const auto perm = permutation(stim.inputs, std::vector<std::string>(input_names.begin(), input_names.end()));
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    StimulusRow row;
    row.tick = i * spacing;
    for (std::size_t j = 0; j < perm.size(); ++j) {
      row.cells.push_back(StimulusCell::logic(sequence[i][perm[j]]));
    }
    stim.rows.push_back(std::move(row));
  }
  return stim;
}

}  // namespace fluidic
