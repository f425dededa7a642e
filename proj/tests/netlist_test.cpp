#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "fixtures.hpp"
#include "fluidic/analysis.hpp"
#include "fluidic/error.hpp"
#include "fluidic/netlist.hpp"
#include "fluidic/optimizer.hpp"
#include "fluidic/simulator.hpp"
#include "generators.hpp"

using namespace fluidic;
using fluidic::testing::fixture;

namespace {

CircuitGraph single_gate(GateKind kind) {
  CircuitGraph g;
  const auto pins = input_pins(kind);
  std::vector<std::string> inputs;
  for (std::size_t i = 0; i < pins.size(); ++i) {
    inputs.push_back(std::string(1, static_cast<char>('A' + i)));
    g.sources.push_back({inputs.back(), SourceKind::Input, 0.0});
  }
  g.outputs = {"Q"};
  g.gates.push_back({kind, "g", inputs, "Q", false});
  return g;
}

bool has_rule(const std::vector<Violation>& vs, const std::string& rule) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.rule == rule; });
}

const ValveInstance& only_valve(const CircuitGraph& g) {
  EXPECT_EQ(g.valves.size(), 1U);
  return g.valves.front();
}

}  // namespace

TEST(GateKind, NamesRoundTrip) {
  for (GateKind k : {GateKind::Not, GateKind::And, GateKind::Or, GateKind::Inhibit, GateKind::Buffer,
                     GateKind::SrLatch, GateKind::Xor5, GateKind::Xor3, GateKind::DLatch6, GateKind::DLatch3}) {
    EXPECT_EQ(parse_gate_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_gate_kind("inhibit"), GateKind::Inhibit);
  EXPECT_FALSE(parse_gate_kind("NAND").has_value());
  EXPECT_EQ(input_pins(GateKind::Not).size(), 1U);
  EXPECT_EQ(input_pins(GateKind::Buffer).size(), 1U);
  EXPECT_EQ(input_pins(GateKind::Xor3).size(), 2U);
  EXPECT_EQ(input_pins(GateKind::SrLatch)[0], "s");
  EXPECT_EQ(input_pins(GateKind::DLatch6)[1], "clk");
}

TEST(Elaborate, InhibitWiring) {
  const auto v = elaborate(single_gate(GateKind::Inhibit));
  const auto& valve = only_valve(v);
  EXPECT_EQ(valve.ports.ctrl_top, "A");
  EXPECT_EQ(valve.ports.ctrl_bottom, "ATM");
  EXPECT_EQ(valve.ports.bot_in, "B");
  EXPECT_EQ(valve.ports.bot_out, "Q");
  EXPECT_EQ(valve.ports.top_in, "ATM");
  EXPECT_EQ(valve.ports.top_out, "Q");
  EXPECT_EQ(valve.spec.stability, Stability::Monostable);
  EXPECT_EQ(valve.initial, MembraneState::Up);
}

TEST(Elaborate, WiringTable) {
  struct Row {
    GateKind kind;
    const char* top_in;
    const char* bot_in;
  };
  for (const Row& r : {Row{GateKind::Not, "ATM", "SUPPLY"}, Row{GateKind::Buffer, "SUPPLY", "ATM"},
                       Row{GateKind::And, "B", "ATM"}, Row{GateKind::Or, "SUPPLY", "B"},
                       Row{GateKind::SrLatch, "SUPPLY", "ATM"}}) {
    const auto& valve = only_valve(elaborate(single_gate(r.kind)));
    EXPECT_EQ(valve.ports.top_in, r.top_in) << to_string(r.kind);
    EXPECT_EQ(valve.ports.bot_in, r.bot_in) << to_string(r.kind);
    EXPECT_EQ(valve.ports.top_out, "Q");
    EXPECT_EQ(valve.ports.bot_out, "Q");
  }
  const auto& sr = only_valve(elaborate(single_gate(GateKind::SrLatch)));
  EXPECT_EQ(sr.spec.stability, Stability::Bistable);
  EXPECT_EQ(sr.ports.ctrl_bottom, "B");
}

TEST(Elaborate, AddsRails) {
  const auto v = elaborate(single_gate(GateKind::Not));
  const Source* supply = v.find_source("SUPPLY");
  const Source* atm = v.find_source("ATM");
  ASSERT_NE(supply, nullptr);
  ASSERT_NE(atm, nullptr);
  EXPECT_EQ(supply->kpa, 160.0);
  EXPECT_EQ(atm->kpa, 0.0);
}

TEST(Elaborate, SrLatchInitialState) {
  auto g = single_gate(GateKind::SrLatch);
  g.gates[0].init_high = true;
  EXPECT_EQ(only_valve(elaborate(g)).initial, MembraneState::Down);
}

TEST(Elaborate, RejectsValveLevel) {
  EXPECT_THROW(elaborate(fixture("sr_latch.fnl")), Error);
  EXPECT_EQ(to_valve_level(fixture("sr_latch.fnl")), fixture("sr_latch.fnl"));
}

// The Boolean function each primitive should compute.
TEST(Elaborate, PrimitivesMatchBooleanOracle) {
  const std::map<GateKind, std::function<bool(bool, bool)>> oracle{
      {GateKind::Not, [](bool a, bool) { return !a; }},
      {GateKind::Buffer, [](bool a, bool) { return a; }},
      {GateKind::And, [](bool a, bool b) { return a && b; }},
      {GateKind::Or, [](bool a, bool b) { return a || b; }},
      {GateKind::Inhibit, [](bool a, bool b) { return !a && b; }},
  };
  for (const auto& [kind, f] : oracle) {
    const auto table = truth_table(single_gate(kind));
    const std::size_t k = input_pins(kind).size();
    ASSERT_EQ(table.rows.size(), std::size_t{1} << k);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const bool a = table.input_bit(r, 0);
      const bool b = k > 1 && table.input_bit(r, 1);
      const LogicLevel want = f(a, b) ? LogicLevel::High : LogicLevel::Low;
      EXPECT_EQ(table.rows[r][0], want) << to_string(kind) << " row " << r;
    }
  }
}

TEST(Elaborate, InhibitPassesBOnlyWhenALow) {
  const Network net(single_gate(GateKind::Inhibit));
  Simulator sim(net);
  const std::vector<double> low_high{0.0, 150.0};
  const auto res = sim.settle(low_high, 100);
  EXPECT_EQ(sim.output_logic(res.solution)[0], LogicLevel::High);
  EXPECT_EQ(res.solution.nets[*net.net_index("Q")].kpa, 150.0);
}

TEST(Elaborate, PreservesIoNamesAndValveCount) {
  std::mt19937_64 rng(11);
  fluidic::testing::GateGenOptions opts;
  opts.macros = true;
  opts.latches = true;
  for (int i = 0; i < 200; ++i) {
    const auto g = fluidic::testing::random_gate_circuit(rng, opts);
    const auto v = elaborate(g);
    EXPECT_EQ(v.outputs, g.outputs);
    const auto nets = v.nets();
    for (const auto& in : g.inputs()) {
      EXPECT_NE(std::find(nets.begin(), nets.end(), in), nets.end());
    }
    EXPECT_EQ(static_cast<int>(v.valves.size()), gate_count(g).total);
    EXPECT_EQ(v.inputs(), g.inputs());
  }
}

TEST(GateCount, Xor5Expansion) {
  CircuitGraph g = single_gate(GateKind::Xor5);
  const auto c = gate_count(g);
  EXPECT_EQ(c[GateKind::Not], 2);
  EXPECT_EQ(c[GateKind::And], 2);
  EXPECT_EQ(c[GateKind::Or], 1);
  EXPECT_EQ(c.total, 5);
  EXPECT_EQ(c.summary(), "AND=2 NOT=2 OR=1 total=5");
}

TEST(GateCount, Xor3Expansion) {
  const auto c = gate_count(single_gate(GateKind::Xor3));
  EXPECT_EQ(c[GateKind::Inhibit], 2);
  EXPECT_EQ(c[GateKind::Or], 1);
  EXPECT_EQ(c.total, 3);
}

TEST(GateCount, Empty) {
  EXPECT_EQ(gate_count(CircuitGraph{}).total, 0);
  EXPECT_EQ(gate_count(CircuitGraph{}).summary(), "total=0");
}

TEST(GateCount, FixtureFiles) {
  EXPECT_EQ(gate_count(fixture("xor5.fnl")).total, 5);
  EXPECT_EQ(gate_count(fixture("xor3.fnl")).total, 3);
  EXPECT_EQ(gate_count(fixture("dlatch6.fnl")).total, 6);
  EXPECT_EQ(gate_count(fixture("dlatch3.fnl")).total, 3);
  EXPECT_EQ(gate_count(fixture("ring3.fnl")).total, 3);
}

TEST(Validate, ConflictingFixedSources) {
  CircuitGraph g;
  g.level = Level::Valve;
  g.sources = {{"X", SourceKind::Fixed, 160.0}, {"X", SourceKind::Fixed, 0.0}};
  EXPECT_TRUE(has_rule(validate(g), "conflicting fixed sources"));
}

TEST(Validate, DanglingPort) {
  auto g = fixture("sr_latch.fnl");
  g.valves[0].ports.bot_out.clear();
  const auto vs = validate(g);
  ASSERT_TRUE(has_rule(vs, "dangling port"));
  const auto it = std::find_if(vs.begin(), vs.end(), [](const Violation& v) { return v.rule == "dangling port"; });
  EXPECT_EQ(it->subject, "v1");
  EXPECT_NE(it->message.find("bot_out"), std::string::npos);
}

TEST(Validate, WellFormedXor3) { EXPECT_TRUE(validate(fixture("xor3.fnl")).empty()); }

TEST(Validate, GateRules) {
  auto g = single_gate(GateKind::And);
  g.gates[0].inputs.pop_back();
  EXPECT_TRUE(has_rule(validate(g), "arity mismatch"));

  g = single_gate(GateKind::And);
  g.gates.push_back({GateKind::Not, "g", {"A"}, "Q", false});
  EXPECT_TRUE(has_rule(validate(g), "duplicate name"));
  EXPECT_TRUE(has_rule(validate(g), "multiple drivers"));

  g = single_gate(GateKind::And);
  g.gates[0].inputs[1] = "nowhere";
  EXPECT_TRUE(has_rule(validate(g), "undriven net"));

  g = single_gate(GateKind::Not);
  g.outputs.push_back("Z");
  EXPECT_TRUE(has_rule(validate(g), "unreachable output"));

  g = single_gate(GateKind::Not);
  g.gate_spec.snap_back_kpa = 200.0;
  EXPECT_TRUE(has_rule(validate(g), "invalid valve spec"));

  g = single_gate(GateKind::Not);
  g.valves.push_back(fixture("sr_latch.fnl").valves[0]);
  EXPECT_TRUE(has_rule(validate(g), "mixed levels"));
}

TEST(Validate, ValveRules) {
  auto g = fixture("sr_latch.fnl");
  g.valves[0].ports.ctrl_bottom = g.valves[0].ports.ctrl_top;
  EXPECT_TRUE(has_rule(validate(g), "self-controlled valve"));

  g = fixture("sr_latch.fnl");
  g.valves[0].spec.snap_back_kpa = 140.0;
  EXPECT_TRUE(has_rule(validate(g), "invalid valve spec"));

  g = fixture("sr_latch.fnl");
  g.valves[0].ports.ctrl_top = "floating";
  EXPECT_TRUE(has_rule(validate(g), "undriven net"));

  g = fixture("sr_latch.fnl");
  g.outputs = {"island"};
  EXPECT_TRUE(has_rule(validate(g), "unreachable output"));

  EXPECT_THROW(check_valid(g), ValidationError);
}

TEST(Validate, SelfLoopThroughTubesAllowed) { EXPECT_TRUE(validate(fixture("ring3.fnl")).empty()); }

TEST(HoldsState, Classification) {
  EXPECT_FALSE(holds_state(fixture("xor5.fnl")));
  EXPECT_FALSE(holds_state(fixture("inhibit.fnl")));
  EXPECT_FALSE(holds_state(elaborate(fixture("xor3.fnl"))));
  EXPECT_TRUE(holds_state(fixture("dlatch6.fnl")));
  EXPECT_TRUE(holds_state(fixture("dlatch3.fnl")));
  EXPECT_TRUE(holds_state(fixture("sr_latch.fnl")));
  EXPECT_TRUE(holds_state(fixture("ring3.fnl")));
  EXPECT_TRUE(holds_state(elaborate(fixture("dlatch6.fnl"))));
  EXPECT_TRUE(holds_state(single_gate(GateKind::DLatch6)));
}

TEST(SrLatch, SetStatePersistsWhenSReturnsLow) {
  const Network net(single_gate(GateKind::SrLatch));
  Simulator sim(net);
  const std::vector<double> set{150.0, 0.0}, idle{0.0, 0.0}, reset{0.0, 150.0};
  auto r = sim.settle(set, 100);
  EXPECT_EQ(sim.output_logic(r.solution)[0], LogicLevel::High);
  r = sim.settle(idle, 100);
  EXPECT_EQ(sim.output_logic(r.solution)[0], LogicLevel::High);
  r = sim.settle(reset, 100);
  EXPECT_EQ(sim.output_logic(r.solution)[0], LogicLevel::Low);
}
