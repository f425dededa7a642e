#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "fluidic/analysis.hpp"
#include "fluidic/error.hpp"
#include "fluidic/optimizer.hpp"
#include "generators.hpp"

using namespace fluidic;
using fluidic::testing::fixture;

namespace {

std::vector<LogicLevel> column(const TruthTable& t, std::size_t out) {
  std::vector<LogicLevel> c;
  for (const auto& row : t.rows) c.push_back(row[out]);
  return c;
}

constexpr LogicLevel L = LogicLevel::Low;
constexpr LogicLevel H = LogicLevel::High;

CircuitGraph or_gate() {
  return parse_netlist("input A B\noutput Q\ngate OR q a=A b=B out=Q\n");
}

std::vector<std::vector<bool>> all_sequences_step(std::size_t k) {
  std::vector<std::vector<bool>> steps;
  for (std::size_t r = 0; r < (std::size_t{1} << k); ++r) {
    std::vector<bool> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = ((r >> (k - 1 - j)) & 1U) != 0;
    steps.push_back(row);
  }
  return steps;
}

// Evaluates a random gate-level circuit by direct Boolean propagation in
// topological order (generated circuits are acyclic and listed in order).
std::vector<bool> eval_boolean(const CircuitGraph& g, const std::vector<bool>& in) {
  std::map<std::string, bool> v;
  const auto inputs = g.inputs();
  for (std::size_t i = 0; i < inputs.size(); ++i) v[inputs[i]] = in[i];
  const auto prim = expand_macro(g);
  for (const auto& gate : prim.gates) {
    const bool a = v.at(gate.inputs[0]);
    const bool b = gate.inputs.size() > 1 && v.at(gate.inputs[1]);
    bool q = false;
    switch (gate.kind) {
      case GateKind::Not: q = !a; break;
      case GateKind::Buffer: q = a; break;
      case GateKind::And: q = a && b; break;
      case GateKind::Or: q = a || b; break;
      case GateKind::Inhibit: q = !a && b; break;
      default: ADD_FAILURE() << "sequential gate in combinational pool";
    }
    v[gate.output] = q;
  }
  std::vector<bool> out;
  for (const auto& o : g.outputs) out.push_back(v.at(o));
  return out;
}

}  // namespace

TEST(TruthTable, Inhibit) {
  const auto t = truth_table(fixture("inhibit.fnl"));
  EXPECT_EQ(t.inputs, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(column(t, 0), (std::vector<LogicLevel>{L, H, L, L}));
}

TEST(TruthTable, Xor3) { EXPECT_EQ(column(truth_table(fixture("xor3.fnl")), 0), (std::vector<LogicLevel>{L, H, H, L})); }

TEST(TruthTable, Not) { EXPECT_EQ(column(truth_table(fixture("not.fnl")), 0), (std::vector<LogicLevel>{H, L})); }

TEST(TruthTable, RowOrderMsbFirst) {
  const auto t = truth_table(fixture("inhibit.fnl"));
  EXPECT_FALSE(t.input_bit(1, 0));
  EXPECT_TRUE(t.input_bit(1, 1));
  EXPECT_TRUE(t.input_bit(2, 0));
  EXPECT_FALSE(t.input_bit(2, 1));
}

TEST(TruthTable, Csv) {
  std::ostringstream os;
  truth_table(fixture("inhibit.fnl")).write_csv(os);
  EXPECT_EQ(os.str(), "A,B,Q\n0,0,0\n0,1,1\n1,0,0\n1,1,0\n");
}

TEST(TruthTable, RejectsStatefulCircuits) {
  EXPECT_THROW(truth_table(fixture("sr_latch.fnl")), NotCombinational);
  EXPECT_THROW(truth_table(fixture("dlatch6.fnl")), NotCombinational);
  EXPECT_THROW(truth_table(fixture("ring3.fnl")), NotCombinational);
}

TEST(TruthTable, BudgetExceeded) {
  AnalysisOptions tight;
  tight.settle_budget = 1;
  EXPECT_THROW(truth_table(fixture("xor5.fnl"), tight), BudgetExceeded);
}

TEST(TruthTable, MatchesBooleanOracleOnRandomPool) {
  std::mt19937_64 rng(404);
  fluidic::testing::GateGenOptions opts;
  opts.macros = true;
  for (int i = 0; i < 300; ++i) {
    const auto g = fluidic::testing::random_gate_circuit(rng, opts);
    const auto t = truth_table(g);
    ASSERT_EQ(t.rows.size(), std::size_t{1} << t.inputs.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      std::vector<bool> in;
      for (std::size_t j = 0; j < t.inputs.size(); ++j) in.push_back(t.input_bit(r, j));
      const auto want = eval_boolean(g, in);
      for (std::size_t o = 0; o < want.size(); ++o) {
        ASSERT_EQ(t.rows[r][o], want[o] ? H : L) << serialize_netlist(g) << " row " << r;
      }
    }
  }
}

TEST(EquivComb, Xor5VsXor3) {
  const auto v = equiv_comb(fixture("xor5.fnl"), fixture("xor3.fnl"));
  EXPECT_TRUE(v.equivalent());
  EXPECT_EQ(v.method, Method::Exhaustive);
  EXPECT_EQ(v.cases_checked, 4U);
}

TEST(EquivComb, Xor3VsOrCounterexample) {
  const auto v = equiv_comb(fixture("xor3.fnl"), or_gate());
  ASSERT_FALSE(v.equivalent());
  EXPECT_EQ(v.counterexample, (std::vector<std::vector<bool>>{{true, true}}));
  EXPECT_EQ(v.outputs_first[0], std::vector<LogicLevel>{L});
  EXPECT_EQ(v.outputs_second[0], std::vector<LogicLevel>{H});
  EXPECT_NE(v.text().find("Counterexample"), std::string::npos);
}

TEST(EquivComb, Reflexive) {
  for (const char* name : {"not.fnl", "inhibit.fnl", "xor5.fnl", "xor3.fnl"}) {
    EXPECT_TRUE(equiv_comb(fixture(name), fixture(name)).equivalent()) << name;
  }
}

TEST(EquivComb, InterfaceMismatch) {
  EXPECT_THROW(equiv_comb(fixture("not.fnl"), fixture("xor3.fnl")), InterfaceMismatch);
}

TEST(EquivComb, MatchesInputsByName) {
  const auto a = parse_netlist("input A B\noutput Q\ngate INHIBIT g a=A b=B out=Q\n");
  const auto b = parse_netlist("input B A\noutput Q\ngate INHIBIT g a=A b=B out=Q\n");
  EXPECT_TRUE(equiv_comb(a, b).equivalent());
  const auto c = parse_netlist("input B A\noutput Q\ngate INHIBIT g a=B b=A out=Q\n");
  EXPECT_FALSE(equiv_comb(a, c).equivalent());
}

TEST(EquivComb, CounterexampleReplays) {
  const auto a = fixture("xor3.fnl");
  const auto b = or_gate();
  const auto v = equiv_comb(a, b);
  ASSERT_FALSE(v.equivalent());
  const auto ra = replay_sequence(a, v.input_names, v.counterexample);
  const auto rb = replay_sequence(b, v.input_names, v.counterexample);
  EXPECT_NE(ra.back().outputs, rb.back().outputs);
}

TEST(EquivComb, EquivalenceRelationOnPool) {
  std::mt19937_64 rng(17);
  fluidic::testing::GateGenOptions opts;
  opts.max_inputs = 2;
  opts.max_gates = 3;
  std::vector<CircuitGraph> pool;
  // Same interface for all: inputs named X,Y and output Z.
  while (pool.size() < 12) {
    auto g = fluidic::testing::random_gate_circuit(rng, opts);
    if (g.inputs().size() != 2 || g.outputs.size() != 1) continue;
    const std::string x = g.inputs()[0], y = g.inputs()[1], z = g.outputs[0];
    auto text = serialize_netlist(g);
    auto replace = [&](const std::string& from, const std::string& to) {
      std::string out;
      std::size_t pos = 0;
      while (true) {
        const auto hit = text.find(from, pos);
        if (hit == std::string::npos) break;
        const bool left_ok = hit == 0 || !(std::isalnum(static_cast<unsigned char>(text[hit - 1])) || text[hit - 1] == '_');
        const std::size_t end = hit + from.size();
        const bool right_ok = end >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_');
        out += text.substr(pos, hit - pos) + (left_ok && right_ok ? to : from);
        pos = end;
      }
      text = out + text.substr(pos);
    };
    replace(x, "X");
    replace(y, "Y");
    replace(z, "Z");
    pool.push_back(parse_netlist(text));
  }
  auto eq = [](const CircuitGraph& a, const CircuitGraph& b) { return equiv_comb(a, b).equivalent(); };
  for (const auto& a : pool) {
    EXPECT_TRUE(eq(a, a));
    for (const auto& b : pool) {
      EXPECT_EQ(eq(a, b), eq(b, a));
      for (const auto& c : pool) {
        if (eq(a, b) && eq(b, c)) EXPECT_TRUE(eq(a, c));
      }
    }
  }
}

TEST(EquivSeq, DLatch6VsDLatch3Length4) {
  SequenceOptions opts;
  opts.length = 4;
  const auto v = equiv_seq(fixture("dlatch6.fnl"), fixture("dlatch3.fnl"), opts);
  EXPECT_TRUE(v.equivalent()) << v.text();
  EXPECT_EQ(v.cases_checked, 256U);
  EXPECT_EQ(v.method, Method::BoundedSequence);
  EXPECT_EQ(v.bound, 4U);
}

TEST(EquivSeq, DefaultLengthSix) {
  const auto v = equiv_seq(fixture("dlatch6.fnl"), fixture("dlatch3.fnl"));
  EXPECT_TRUE(v.equivalent());
  EXPECT_EQ(v.cases_checked, 4096U);
}

TEST(EquivSeq, RetainsStateWhenClockLow) {
  const std::vector<std::string> names{"D", "CLK"};
  const std::vector<std::vector<bool>> seq{{true, true}, {false, false}};
  for (const char* name : {"dlatch6.fnl", "dlatch3.fnl"}) {
    const auto steps = replay_sequence(fixture(name), names, seq);
    ASSERT_EQ(steps.size(), 2U);
    EXPECT_EQ(steps[0].outputs[0], H) << name;
    EXPECT_EQ(steps[1].outputs[0], H) << name;
  }
}

// Oracle: a D-latch is transparent while CLK=1 and holds while CLK=0, from Q=0.
TEST(EquivSeq, DLatchTransparencyAllLength4Sequences) {
  const std::vector<std::string> names{"D", "CLK"};
  const auto steps = all_sequences_step(2);
  for (const char* name : {"dlatch6.fnl", "dlatch3.fnl"}) {
    const auto g = fixture(name);
    for (std::size_t code = 0; code < 256; ++code) {
      std::vector<std::vector<bool>> seq;
      for (int i = 0; i < 4; ++i) seq.push_back(steps[(code >> (2 * (3 - i))) & 3U]);
      const auto out = replay_sequence(g, names, seq);
      bool q = false;
      for (std::size_t i = 0; i < 4; ++i) {
        if (seq[i][1]) q = seq[i][0];
        ASSERT_EQ(out[i].status.kind, RunStatusKind::Settled);
        ASSERT_EQ(out[i].outputs[0], q ? H : L) << name << " seq " << code << " step " << i;
      }
    }
  }
}

TEST(EquivSeq, InterfaceMismatch) {
  EXPECT_THROW(equiv_seq(fixture("sr_latch.fnl"), fixture("dlatch3.fnl")), InterfaceMismatch);
}

TEST(EquivSeq, FindsStateDifference) {
  // Latch that resets LOW vs one that starts HIGH.
  auto high = fixture("dlatch3.fnl");
  high.gates[2].init_high = true;
  SequenceOptions opts;
  opts.length = 2;
  const auto v = equiv_seq(fixture("dlatch3.fnl"), high, opts);
  ASSERT_FALSE(v.equivalent());
  EXPECT_EQ(v.counterexample.size(), 1U);
  const auto a = replay_sequence(fixture("dlatch3.fnl"), v.input_names, v.counterexample);
  const auto b = replay_sequence(high, v.input_names, v.counterexample);
  EXPECT_NE(a.back().outputs, b.back().outputs);
}

TEST(EquivSeq, OscillationIsCounterexample) {
  const auto ring = fixture("ring3.fnl");
  const auto v = equiv_seq(ring, ring);
  ASSERT_FALSE(v.equivalent());
  EXPECT_NE(v.context.find("Oscillating"), std::string::npos);
}

TEST(EquivSeq, SrLatchForbiddenInputDiffersFromGateForm) {
  const auto latch = parse_netlist("input S R\noutput Q\ngate SRLATCH q s=S r=R out=Q\n");
  const auto gates = parse_netlist(
      "input S R\noutput Q\ngate OR m a=S b=Q out=M\ngate NOT nr in=R out=NR\ngate AND q a=M b=NR out=Q\n");
  SequenceOptions opts;
  opts.length = 3;
  EXPECT_FALSE(equiv_seq(latch, gates, opts).equivalent());
  opts.alphabet = {{false, false}, {false, true}, {true, false}};
  EXPECT_TRUE(equiv_seq(latch, gates, opts).equivalent());
}

TEST(SequenceStimulus, ReplaysThroughRun) {
  const auto g = fixture("dlatch3.fnl");
  const std::vector<std::string> names{"CLK", "D"};
  const std::vector<std::vector<bool>> seq{{true, true}, {false, false}, {false, true}};
  const auto stim = sequence_stimulus(g, names, seq, 10);
  EXPECT_EQ(stim.inputs, (std::vector<std::string>{"D", "CLK"}));
  ASSERT_EQ(stim.rows.size(), 3U);
  EXPECT_EQ(stim.rows[2].tick, 20U);
  EXPECT_EQ(stim.rows[2].cells[0], StimulusCell::logic(true));
  EXPECT_EQ(stim.rows[2].cells[1], StimulusCell::logic(false));
  const Network net(g);
  const auto wf = run(net, stim);
  EXPECT_EQ(wf.logic("Q", wf.frames.size() - 1), H);
}
