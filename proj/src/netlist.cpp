#include "fluidic/netlist.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fluidic/error.hpp"
#include "fluidic/optimizer.hpp"

namespace fluidic {

namespace {

constexpr std::array<std::string_view, 1> kUnaryPins{"in"};
constexpr std::array<std::string_view, 2> kBinaryPins{"a", "b"};
constexpr std::array<std::string_view, 2> kLatchPins{"s", "r"};
constexpr std::array<std::string_view, 2> kDLatchPins{"d", "clk"};

struct KindName {
  GateKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 10> kKindNames{{
    {GateKind::Not, "NOT"},
    {GateKind::And, "AND"},
    {GateKind::Or, "OR"},
    {GateKind::Inhibit, "INHIBIT"},
    {GateKind::Buffer, "BUFFER"},
    {GateKind::SrLatch, "SRLATCH"},
    {GateKind::Xor5, "XOR5"},
    {GateKind::Xor3, "XOR3"},
    {GateKind::DLatch6, "DLATCH6"},
    {GateKind::DLatch3, "DLATCH3"},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) == std::toupper(static_cast<unsigned char>(y));
         });
}

void add_unique(std::vector<std::string>& order, std::unordered_set<std::string>& seen,
                const std::string& name) {
  if (!name.empty() && seen.insert(name).second) {
    order.push_back(name);
  }
}

void validate_sources(const CircuitGraph& g, std::vector<Violation>& out) {
  std::unordered_map<std::string, const Source*> first;
  for (const auto& s : g.sources) {
    auto [it, inserted] = first.emplace(s.net, &s);
    if (inserted) {
      continue;
    }
    const Source& prev = *it->second;
    if (prev.kind == SourceKind::Fixed && s.kind == SourceKind::Fixed) {
      out.push_back({s.net, "conflicting fixed sources",
                     "net '" + s.net + "' is bound to more than one fixed source"});
    } else if (prev.kind == SourceKind::Input && s.kind == SourceKind::Input) {
      out.push_back({s.net, "duplicate name", "input '" + s.net + "' declared twice"});
    } else {
      out.push_back({s.net, "conflicting sources",
                     "net '" + s.net + "' is both an input and a fixed source"});
    }
  }
  std::set<std::string> outputs;
  for (const auto& o : g.outputs) {
    if (!outputs.insert(o).second) {
      out.push_back({o, "duplicate name", "output '" + o + "' declared twice"});
    }
  }
}

void validate_gates(const CircuitGraph& g, std::vector<Violation>& out) {
  std::unordered_set<std::string> names;
  std::unordered_set<std::string> drivers;
  for (const auto& s : g.sources) {
    drivers.insert(s.net);
  }
  std::map<std::string, int> gate_drivers;
  for (const auto& gate : g.gates) {
    if (!names.insert(gate.name).second) {
      out.push_back({gate.name, "duplicate name", "gate '" + gate.name + "' declared twice"});
    }
    if (gate.inputs.size() != input_pins(gate.kind).size()) {
      out.push_back({gate.name, "arity mismatch",
                     std::string(to_string(gate.kind)) + " gate '" + gate.name + "' needs " +
                         std::to_string(input_pins(gate.kind).size()) + " inputs, has " +
                         std::to_string(gate.inputs.size())});
    }
    for (const auto& in : gate.inputs) {
      if (in.empty()) {
        out.push_back({gate.name, "dangling port", "gate '" + gate.name + "' has an unbound input"});
      }
    }
    if (gate.output.empty()) {
      out.push_back({gate.name, "dangling port", "gate '" + gate.name + "' has an unbound output"});
    } else {
      gate_drivers[gate.output] += 1;
    }
  }
  for (const auto& [net, count] : gate_drivers) {
    const int total = count + (drivers.contains(net) ? 1 : 0);
    if (total > 1) {
      out.push_back({net, "multiple drivers", "net '" + net + "' has " + std::to_string(total) + " drivers"});
    }
    drivers.insert(net);
  }
  for (const auto& gate : g.gates) {
    for (const auto& in : gate.inputs) {
      if (!in.empty() && !drivers.contains(in)) {
        out.push_back({in, "undriven net",
                       "net '" + in + "' read by gate '" + gate.name + "' has no driver"});
      }
    }
  }
  for (const auto& o : g.outputs) {
    if (!drivers.contains(o)) {
      out.push_back({o, "unreachable output", "output '" + o + "' is not driven by any gate or source"});
    }
  }
  if (!g.gate_spec.valid()) {
    out.push_back({"param", "invalid valve spec", "gate valve thresholds need 0 < snap_back < snap_through"});
  }
}

void validate_valves(const CircuitGraph& g, std::vector<Violation>& out) {
  std::unordered_set<std::string> names;
  std::unordered_map<std::string, std::vector<std::string>> tube_adj;
  for (const auto& v : g.valves) {
    if (!names.insert(v.name).second) {
      out.push_back({v.name, "duplicate name", "valve '" + v.name + "' declared twice"});
    }
    const auto& p = v.ports;
    const std::array<std::pair<std::string_view, const std::string*>, 6> ports{{
        {"ctrl_top", &p.ctrl_top},
        {"ctrl_bottom", &p.ctrl_bottom},
        {"top_in", &p.top_in},
        {"top_out", &p.top_out},
        {"bot_in", &p.bot_in},
        {"bot_out", &p.bot_out},
    }};
    for (const auto& [port, net] : ports) {
      if (net->empty()) {
        out.push_back({v.name, "dangling port", "valve '" + v.name + "' has unbound " + std::string(port)});
      }
    }
    if (!p.ctrl_top.empty() && p.ctrl_top == p.ctrl_bottom) {
      out.push_back({v.name, "self-controlled valve",
                     "valve '" + v.name + "' has both chambers on net '" + p.ctrl_top + "'"});
    }
    if (!v.spec.valid()) {
      out.push_back({v.name, "invalid valve spec", "valve '" + v.name + "' needs 0 < snap_back < snap_through"});
    }
    if (!p.top_in.empty() && !p.top_out.empty()) {
      tube_adj[p.top_in].push_back(p.top_out);
      tube_adj[p.top_out].push_back(p.top_in);
    }
    if (!p.bot_in.empty() && !p.bot_out.empty()) {
      tube_adj[p.bot_in].push_back(p.bot_out);
      tube_adj[p.bot_out].push_back(p.bot_in);
    }
  }

  // Everything reachable from a source through tubes, in any membrane state.
  std::unordered_set<std::string> reached;
  std::vector<std::string> stack;
  for (const auto& s : g.sources) {
    if (reached.insert(s.net).second) {
      stack.push_back(s.net);
    }
  }
  while (!stack.empty()) {
    const std::string net = stack.back();
    stack.pop_back();
    if (auto it = tube_adj.find(net); it != tube_adj.end()) {
      for (const auto& next : it->second) {
        if (reached.insert(next).second) {
          stack.push_back(next);
        }
      }
    }
  }
  for (const auto& v : g.valves) {
    for (const std::string* ctrl : {&v.ports.ctrl_top, &v.ports.ctrl_bottom}) {
      if (!ctrl->empty() && !reached.contains(*ctrl)) {
        out.push_back({*ctrl, "undriven net",
                       "control net '" + *ctrl + "' of valve '" + v.name + "' has no path to a source"});
      }
    }
  }
  for (const auto& o : g.outputs) {
    if (!reached.contains(o)) {
      out.push_back({o, "unreachable output", "output '" + o + "' has no tube path to any source"});
    }
  }
}

}  // namespace

std::string_view to_string(GateKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) {
      return kn.name;
    }
  }
  return "?";
}

std::optional<GateKind> parse_gate_kind(std::string_view text) {
  for (const auto& kn : kKindNames) {
    if (iequals(kn.name, text)) {
      return kn.kind;
    }
  }
  return std::nullopt;
}

std::span<const std::string_view> input_pins(GateKind kind) {
  switch (kind) {
    case GateKind::Not:
    case GateKind::Buffer:
      return kUnaryPins;
    case GateKind::SrLatch:
      return kLatchPins;
    case GateKind::DLatch6:
    case GateKind::DLatch3:
      return kDLatchPins;
    default:
      return kBinaryPins;
  }
}

bool is_macro(GateKind kind) {
  return kind == GateKind::Xor5 || kind == GateKind::Xor3 || kind == GateKind::DLatch6 ||
         kind == GateKind::DLatch3;
}

bool has_initial_state(GateKind kind) {
  return kind == GateKind::SrLatch || kind == GateKind::DLatch6 || kind == GateKind::DLatch3;
}

std::vector<std::string> CircuitGraph::inputs() const {
  std::vector<std::string> out;
  for (const auto& s : sources) {
    if (s.kind == SourceKind::Input) {
      out.push_back(s.net);
    }
  }
  return out;
}

const Source* CircuitGraph::find_source(std::string_view net) const {
  for (const auto& s : sources) {
    if (s.net == net) {
      return &s;
    }
  }
  return nullptr;
}

std::vector<std::string> CircuitGraph::nets() const {
  std::vector<std::string> order;
  std::unordered_set<std::string> seen;
  for (const auto& s : sources) {
    add_unique(order, seen, s.net);
  }
  for (const auto& o : outputs) {
    add_unique(order, seen, o);
  }
  for (const auto& gate : gates) {
    for (const auto& in : gate.inputs) {
      add_unique(order, seen, in);
    }
    add_unique(order, seen, gate.output);
  }
  for (const auto& v : valves) {
    for (const std::string* n : {&v.ports.ctrl_top, &v.ports.ctrl_bottom, &v.ports.top_in, &v.ports.top_out,
                                 &v.ports.bot_in, &v.ports.bot_out}) {
      add_unique(order, seen, *n);
    }
  }
  return order;
}

std::vector<Violation> validate(const CircuitGraph& g) {
  std::vector<Violation> out;
  validate_sources(g, out);
  if (g.level == Level::Gate) {
    if (!g.valves.empty()) {
      out.push_back({"netlist", "mixed levels", "gate-level netlist contains valve instances"});
    }
    validate_gates(g, out);
  } else {
    if (!g.gates.empty()) {
      out.push_back({"netlist", "mixed levels", "valve-level netlist contains gates"});
    }
    validate_valves(g, out);
  }
  return out;
}

void check_valid(const CircuitGraph& g) {
  const auto violations = validate(g);
  if (violations.empty()) {
    return;
  }
  std::string msg = "invalid netlist:";
  for (const auto& v : violations) {
    msg += "\n  " + v.rule + ": " + v.message;
  }
  throw ValidationError(msg);
}

CircuitGraph elaborate(const CircuitGraph& gate_level, const RailConfig& rails) {
  if (gate_level.level != Level::Gate) {
    throw Error("elaborate expects a gate-level netlist");
  }
  check_valid(gate_level);
  const CircuitGraph primitives = expand_macro(gate_level);

  CircuitGraph out;
  out.level = Level::Valve;
  out.sources = primitives.sources;
  out.outputs = primitives.outputs;
  out.gate_spec = primitives.gate_spec;
  const std::string supply(kSupplyNet);
  const std::string atm(kAtmNet);
  if (!out.find_source(kSupplyNet)) {
    out.sources.push_back({supply, SourceKind::Fixed, rails.p_supply});
  }
  if (!out.find_source(kAtmNet)) {
    out.sources.push_back({atm, SourceKind::Fixed, 0.0});
  }

  for (const auto& gate : primitives.gates) {
    ValveInstance v;
    v.name = gate.name;
    v.spec = primitives.gate_spec;
    v.spec.label = gate.name;
    v.spec.stability = Stability::Monostable;
    auto& p = v.ports;
    const std::string& q = gate.output;
    const std::string& a = gate.inputs.at(0);
    p.ctrl_top = a;
    switch (gate.kind) {
      case GateKind::Not:
        p.bot_in = supply, p.bot_out = q, p.top_in = atm, p.top_out = q;
        break;
      case GateKind::Buffer:
        p.top_in = supply, p.top_out = q, p.bot_in = atm, p.bot_out = q;
        break;
      case GateKind::Inhibit:
        p.bot_in = gate.inputs.at(1), p.bot_out = q, p.top_in = atm, p.top_out = q;
        break;
      case GateKind::And:
        p.top_in = gate.inputs.at(1), p.top_out = q, p.bot_in = atm, p.bot_out = q;
        break;
      case GateKind::Or:
        p.bot_in = gate.inputs.at(1), p.bot_out = q, p.top_in = supply, p.top_out = q;
        break;
      case GateKind::SrLatch:
        v.spec.stability = Stability::Bistable;
        v.initial = gate.init_high ? MembraneState::Down : MembraneState::Up;
        p.ctrl_bottom = gate.inputs.at(1);
        p.top_in = supply, p.top_out = q, p.bot_in = atm, p.bot_out = q;
        break;
      default:
        throw Error("unexpanded macro gate '" + gate.name + "'");
    }
    out.valves.push_back(std::move(v));
  }
  check_valid(out);
  return out;
}

CircuitGraph to_valve_level(const CircuitGraph& g, const RailConfig& rails) {
  if (g.level == Level::Valve) {
    check_valid(g);
    return g;
  }
  return elaborate(g, rails);
}

int GateCount::operator[](GateKind kind) const {
  auto it = by_kind.find(kind);
  return it == by_kind.end() ? 0 : it->second;
}

std::string GateCount::summary() const {
  std::vector<std::pair<std::string_view, int>> named;
  for (const auto& [kind, n] : by_kind) {
    named.emplace_back(to_string(kind), n);
  }
  std::sort(named.begin(), named.end());
  std::ostringstream os;
  for (const auto& [name, n] : named) {
    os << name << '=' << n << ' ';
  }
  os << "total=" << total;
  return os.str();
}

GateCount gate_count(const CircuitGraph& g) {
  GateCount count;
  if (g.level == Level::Valve) {
    count.total = static_cast<int>(g.valves.size());
    return count;
  }
  const CircuitGraph primitives = expand_macro(g);
  for (const auto& gate : primitives.gates) {
    count.by_kind[gate.kind] += 1;
    count.total += 1;
  }
  return count;
}

bool holds_state(const CircuitGraph& g) {
  // Element i depends on element j when j can drive a net that i reads.
  std::vector<std::vector<std::size_t>> deps;
  if (g.level == Level::Gate) {
    std::unordered_map<std::string, std::size_t> driver;
    for (std::size_t i = 0; i < g.gates.size(); ++i) {
      if (has_initial_state(g.gates[i].kind)) {
        return true;
      }
      driver[g.gates[i].output] = i;
    }
    deps.resize(g.gates.size());
    for (std::size_t i = 0; i < g.gates.size(); ++i) {
      for (const auto& in : g.gates[i].inputs) {
        if (auto it = driver.find(in); it != driver.end()) {
          deps[i].push_back(it->second);
        }
      }
    }
  } else {
    for (const auto& v : g.valves) {
      if (v.spec.stability == Stability::Bistable) {
        return true;
      }
    }
    // Tube-connected regions ignoring membrane state. Source nets pin their
    // pressure, so they end a region instead of joining two.
    std::unordered_set<std::string> source_nets;
    for (const auto& s : g.sources) {
      source_nets.insert(s.net);
    }
    std::unordered_map<std::string, std::string> parent;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) -> std::string {
      auto it = parent.find(x);
      if (it == parent.end() || it->second == x) {
        parent[x] = x;
        return x;
      }
      const std::string root = find(it->second);
      parent[x] = root;
      return root;
    };
    auto unite = [&](const std::string& a, const std::string& b) {
      if (!source_nets.contains(a) && !source_nets.contains(b)) {
        parent[find(a)] = find(b);
      }
    };
    for (const auto& v : g.valves) {
      unite(v.ports.top_in, v.ports.top_out);
      unite(v.ports.bot_in, v.ports.bot_out);
    }
    std::unordered_map<std::string, std::vector<std::size_t>> touching;
    for (std::size_t j = 0; j < g.valves.size(); ++j) {
      const auto& p = g.valves[j].ports;
      std::set<std::string> regions;
      for (const std::string* end : {&p.top_in, &p.top_out, &p.bot_in, &p.bot_out}) {
        if (!source_nets.contains(*end)) {
          regions.insert(find(*end));
        }
      }
      for (const auto& r : regions) {
        touching[r].push_back(j);
      }
    }
    deps.resize(g.valves.size());
    for (std::size_t i = 0; i < g.valves.size(); ++i) {
      for (const std::string* ctrl : {&g.valves[i].ports.ctrl_top, &g.valves[i].ports.ctrl_bottom}) {
        if (source_nets.contains(*ctrl)) {
          continue;
        }
        if (auto it = touching.find(find(*ctrl)); it != touching.end()) {
          deps[i].insert(deps[i].end(), it->second.begin(), it->second.end());
        }
      }
    }
  }

  enum class Mark { White, Grey, Black };
  std::vector<Mark> mark(deps.size(), Mark::White);
  std::function<bool(std::size_t)> has_cycle = [&](std::size_t i) {
    mark[i] = Mark::Grey;
    for (std::size_t j : deps[i]) {
      if (mark[j] == Mark::Grey || (mark[j] == Mark::White && has_cycle(j))) {
        return true;
      }
    }
    mark[i] = Mark::Black;
    return false;
  };
  for (std::size_t i = 0; i < deps.size(); ++i) {
    if (mark[i] == Mark::White && has_cycle(i)) {
      return true;
    }
  }
  return false;
}

}  // namespace fluidic
