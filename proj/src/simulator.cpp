#include "fluidic/simulator.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "fluidic/error.hpp"
#include "fluidic/numeric.hpp"

namespace fluidic {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent_[std::max(a, b)] = std::min(a, b);
    }
  }

 private:
  std::vector<std::size_t> parent_;
};

// Mean that returns the common value exactly when all values agree.
double merge_pressures(const std::vector<double>& values) {
  if (values.empty()) {
    return 0.0;
  }
  bool uniform = true;
  double sum = 0.0;
  for (double v : values) {
    uniform = uniform && v == values.front();
    sum += v;
  }
  return uniform ? values.front() : sum / static_cast<double>(values.size());
}

}  // namespace

std::string_view to_string(NetStatus s) {
  switch (s) {
    case NetStatus::Driven:
      return "Driven";
    case NetStatus::Trapped:
      return "Trapped";
    case NetStatus::Conflict:
      break;
  }
  return "Conflict";
}

bool NetSolution::has_conflict() const noexcept {
  for (const auto& n : nets) {
    if (n.status == NetStatus::Conflict) {
      return true;
    }
  }
  return false;
}

Network::Network(const CircuitGraph& g, const RailConfig& rails)
    : graph_(to_valve_level(g, rails)), rails_(rails) {
  rails_.check();
  net_names_ = graph_.nets();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < net_names_.size(); ++i) {
    index.emplace(net_names_[i], i);
  }
  fixed_.assign(net_names_.size(), std::nullopt);
  for (const auto& s : graph_.sources) {
    const std::size_t i = index.at(s.net);
    if (s.kind == SourceKind::Fixed) {
      fixed_[i] = s.kpa;
    } else {
      input_names_.push_back(s.net);
      input_nets_.push_back(i);
    }
  }
  for (const auto& o : graph_.outputs) {
    output_nets_.push_back(index.at(o));
  }
  for (const auto& v : graph_.valves) {
    Valve cv;
    cv.name = v.name;
    cv.spec = v.spec;
    cv.initial = v.initial;
    cv.ctrl_top = index.at(v.ports.ctrl_top);
    cv.ctrl_bottom = index.at(v.ports.ctrl_bottom);
    cv.top_in = index.at(v.ports.top_in);
    cv.top_out = index.at(v.ports.top_out);
    cv.bot_in = index.at(v.ports.bot_in);
    cv.bot_out = index.at(v.ports.bot_out);
    valves_.push_back(std::move(cv));
  }
}

std::optional<std::size_t> Network::net_index(std::string_view name) const {
  for (std::size_t i = 0; i < net_names_.size(); ++i) {
    if (net_names_[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

void Network::set_valve_thresholds(std::span<const ValveSpec> specs) {
  if (specs.size() != valves_.size()) {
    throw Error("threshold list does not match the valve count");
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    specs[i].check();
    valves_[i].spec.snap_through_kpa = specs[i].snap_through_kpa;
    valves_[i].spec.snap_back_kpa = specs[i].snap_back_kpa;
  }
}

void Network::set_fixed_source(std::string_view net, double kpa) {
  const auto i = net_index(net);
  if (!i || !fixed_[*i]) {
    throw Error("no fixed source on net '" + std::string(net) + "'");
  }
  fixed_[*i] = kpa;
}

void Network::set_rails(const RailConfig& rails) {
  rails.check();
  rails_ = rails;
}

SimState initial_state(const Network& net) {
  SimState s;
  for (const auto& v : net.valves()) {
    s.membranes.push_back(v.initial);
  }
  const std::size_t n = net.net_names().size();
  s.pressures.assign(n, 0.0);
  s.trapped_age.assign(n, 0);
  s.ever_driven.assign(n, 0);
  return s;
}

NetSolution resolve_nets(const Network& net, std::span<const MembraneState> membranes,
                         std::span<const double> input_kpa, std::span<const double> previous_kpa) {
  const std::size_t n = net.net_names().size();
  if (membranes.size() != net.valves().size() || input_kpa.size() != net.input_nets().size() ||
      previous_kpa.size() != n) {
    throw Error("resolve_nets: state does not match the network");
  }
  UnionFind uf(n);
  const auto valves = net.valves();
  for (std::size_t i = 0; i < valves.size(); ++i) {
    const TubeStates tubes = tube_states(membranes[i]);
    if (tubes.top == TubeState::Open) {
      uf.unite(valves[i].top_in, valves[i].top_out);
    }
    if (tubes.bottom == TubeState::Open) {
      uf.unite(valves[i].bot_in, valves[i].bot_out);
    }
  }

  std::vector<std::optional<double>> source(n);
  for (std::size_t i = 0; i < n; ++i) {
    source[i] = net.fixed_sources()[i];
  }
  const auto inputs = net.input_nets();
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    source[inputs[k]] = input_kpa[k];
  }

  std::vector<std::vector<double>> component_sources(n);
  std::vector<std::vector<double>> component_previous(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    if (source[i]) {
      component_sources[root].push_back(*source[i]);
    }
    component_previous[root].push_back(previous_kpa[i]);
  }

  NetSolution sol;
  sol.nets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    const auto& srcs = component_sources[root];
    if (srcs.empty()) {
      sol.nets[i] = {merge_pressures(component_previous[root]), NetStatus::Trapped};
      continue;
    }
    const bool agree = std::all_of(srcs.begin(), srcs.end(), [&](double p) { return p == srcs.front(); });
    sol.nets[i] = {merge_pressures(srcs), agree ? NetStatus::Driven : NetStatus::Conflict};
  }
  return sol;
}

LogicLevel net_logic(const NetValue& value, bool ever_driven, const RailConfig& rails) {
  if (value.status == NetStatus::Conflict || (value.status == NetStatus::Trapped && !ever_driven)) {
    return LogicLevel::Undefined;
  }
  return kpa_to_logic(value.kpa, rails);
}

TickResult tick(const Network& net, const SimState& state, std::span<const double> input_kpa,
                const SimOptions& options) {
  TickResult out;
  out.solution = resolve_nets(net, state.membranes, input_kpa, state.pressures);
  out.next = state;
  for (std::size_t i = 0; i < out.solution.nets.size(); ++i) {
    auto& value = out.solution.nets[i];
    if (value.status == NetStatus::Trapped) {
      out.next.trapped_age[i] = state.trapped_age[i] + 1;
      if (options.leak_after_ticks > 0 && out.next.trapped_age[i] > options.leak_after_ticks) {
        value.kpa = 0.0;
      }
    } else {
      out.next.trapped_age[i] = 0;
      out.next.ever_driven[i] = 1;
    }
    out.next.pressures[i] = value.kpa;
  }
  const auto valves = net.valves();
  for (std::size_t i = 0; i < valves.size(); ++i) {
    const double delta =
        out.solution.nets[valves[i].ctrl_top].kpa - out.solution.nets[valves[i].ctrl_bottom].kpa;
    out.next.membranes[i] = membrane_update(valves[i].spec, state.membranes[i], delta);
  }
  return out;
}

std::string RunStatus::to_string() const {
  switch (kind) {
    case RunStatusKind::Settled:
      return "status=Settled tick=" + std::to_string(tick);
    case RunStatusKind::Oscillating:
      return "status=Oscillating period=" + std::to_string(period);
    case RunStatusKind::Conflict:
      return "status=Conflict tick=" + std::to_string(tick);
    case RunStatusKind::Truncated:
      break;
  }
  return "status=Truncated max_ticks=" + std::to_string(tick);
}

LogicLevel Waveform::logic(std::string_view net, std::size_t frame) const {
  for (std::size_t i = 0; i < net_names.size(); ++i) {
    if (net_names[i] == net) {
      return frames.at(frame).logic[i];
    }
  }
  throw Error("unknown net '" + std::string(net) + "'");
}

double Waveform::kpa(std::string_view net, std::size_t frame) const {
  for (std::size_t i = 0; i < net_names.size(); ++i) {
    if (net_names[i] == net) {
      return frames.at(frame).solution.nets[i].kpa;
    }
  }
  throw Error("unknown net '" + std::string(net) + "'");
}

std::uint64_t CycleDetector::observe(const SimState& pre_update, const NetSolution& solution) {
  Snapshot snap{pre_update.membranes, solution, {}};
  snap.trapped_age.reserve(solution.nets.size());
  if (leak_after_ > 0) {
    for (std::uint32_t age : pre_update.trapped_age) {
      snap.trapped_age.push_back(std::min(age, leak_after_ + 1));
    }
  }
  std::uint64_t found = 0;
  for (std::size_t back = 1; back <= history_.size(); ++back) {
    if (history_[history_.size() - back] == snap) {
      found = back;
      break;
    }
  }
  history_.push_back(std::move(snap));
  while (history_.size() > window_) {
    history_.pop_front();
  }
  return found;
}

Simulator::Simulator(const Network& net, SimOptions options)
    : net_(&net), options_(options), state_(initial_state(net)) {}

void Simulator::reset() { state_ = initial_state(*net_); }

NetSolution Simulator::step(std::span<const double> input_kpa) {
  auto result = tick(*net_, state_, input_kpa, options_);
  state_ = std::move(result.next);
  return std::move(result.solution);
}

SettleResult Simulator::settle(std::span<const double> input_kpa, std::uint64_t budget) {
  CycleDetector detector(options_.history_window, options_.leak_after_ticks);
  SettleResult out;
  out.status = {RunStatusKind::Truncated, budget, 0};
  for (std::uint64_t t = 0; t < budget; ++t) {
    auto result = tick(*net_, state_, input_kpa, options_);
    out.conflict = out.conflict || result.solution.has_conflict();
    const std::uint64_t repeat = detector.observe(state_, result.solution);
    out.membranes = state_.membranes;
    state_ = std::move(result.next);
    out.solution = std::move(result.solution);
    out.ticks = t + 1;
    if (repeat == 1) {
      out.status = {RunStatusKind::Settled, t - 1, 0};
      break;
    }
    if (repeat > 1) {
      out.status = {RunStatusKind::Oscillating, t, repeat};
      break;
    }
  }
  return out;
}

std::vector<LogicLevel> Simulator::output_logic(const NetSolution& solution) const {
  std::vector<LogicLevel> out;
  for (std::size_t i : net_->output_nets()) {
    out.push_back(net_logic(solution.nets[i], state_.ever_driven[i] != 0, net_->rails()));
  }
  return out;
}

Waveform run(const Network& net, const Stimulus& stimulus, std::uint64_t max_ticks, const SimOptions& options) {
  if (max_ticks < 1) {
    throw Error("max_ticks must be at least 1");
  }
  if (stimulus.inputs != net.input_names()) {
    throw Error("stimulus inputs do not match the netlist inputs");
  }
  Waveform wf;
  wf.net_names = net.net_names();
  for (const auto& v : net.valves()) {
    wf.valve_names.push_back(v.name);
  }
  wf.dynamics = {RunStatusKind::Truncated, max_ticks, 0};

  SimState state = initial_state(net);
  CycleDetector detector(options.history_window, options.leak_after_ticks);
  std::optional<std::uint64_t> first_conflict;
  const std::uint64_t last_change = stimulus.last_change_tick();
  for (std::uint64_t t = 0; t < max_ticks; ++t) {
    const auto inputs = stimulus.pressures_at(t, net.rails());
    auto result = tick(net, state, inputs, options);

    Frame frame;
    frame.tick = t;
    frame.inputs_kpa = inputs;
    frame.membranes = state.membranes;
    frame.logic.reserve(result.solution.nets.size());
    for (std::size_t i = 0; i < result.solution.nets.size(); ++i) {
      frame.logic.push_back(net_logic(result.solution.nets[i], result.next.ever_driven[i] != 0, net.rails()));
    }
    if (!first_conflict && result.solution.has_conflict()) {
      first_conflict = t;
    }
    std::uint64_t repeat = 0;
    if (t >= last_change) {
      repeat = detector.observe(state, result.solution);
    }
    frame.solution = std::move(result.solution);
    wf.frames.push_back(std::move(frame));
    state = std::move(result.next);

    if (repeat == 1) {
      wf.dynamics = {RunStatusKind::Settled, t - 1, 0};
      break;
    }
    if (repeat > 1) {
      wf.dynamics = {RunStatusKind::Oscillating, t, repeat};
      break;
    }
  }
  wf.status = first_conflict ? RunStatus{RunStatusKind::Conflict, *first_conflict, 0} : wf.dynamics;
  return wf;
}

void write_waveform_csv(std::ostream& out, const Waveform& waveform) {
  out << "tick,signal,pressure_kpa,logic\n";
  for (const auto& frame : waveform.frames) {
    for (std::size_t i = 0; i < waveform.net_names.size(); ++i) {
      out << frame.tick << ',' << waveform.net_names[i] << ',' << format_number(frame.solution.nets[i].kpa) << ','
          << logic_char(frame.logic[i]) << '\n';
    }
  }
  if (waveform.dynamics.kind == RunStatusKind::Oscillating) {
    out << "# note=period counts unit-delay simulation ticks, not physical time\n";
  }
  if (waveform.status.kind == RunStatusKind::Conflict) {
    out << "# dynamics " << waveform.dynamics.to_string() << '\n';
  }
  out << "# " << waveform.status.to_string() << '\n';
}

}  // namespace fluidic
