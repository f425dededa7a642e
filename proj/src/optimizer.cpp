#include "fluidic/optimizer.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fluidic/error.hpp"

namespace fluidic {

namespace {

class NameAllocator {
 public:
  explicit NameAllocator(const CircuitGraph& g) {
    for (const auto& n : g.nets()) {
      used_.insert(n);
    }
    for (const auto& gate : g.gates) {
      used_.insert(gate.name);
    }
  }

  std::string fresh(const std::string& base) {
    std::string name = base;
    for (int i = 2; used_.count(name) != 0; ++i) {
      name = base + "_" + std::to_string(i);
    }
    used_.insert(name);
    return name;
  }

 private:
  std::unordered_set<std::string> used_;
};

Gate make(GateKind kind, std::string name, std::vector<std::string> inputs, std::string output,
          bool init_high = false) {
  return Gate{kind, std::move(name), std::move(inputs), std::move(output), init_high};
}

void expand_one(const Gate& m, NameAllocator& names, std::vector<Gate>& out) {
  const std::string& q = m.output;
  auto internal = [&](const char* suffix) { return names.fresh(m.name + "_" + suffix); };
  switch (m.kind) {
    case GateKind::Xor5: {
      const std::string& a = m.inputs[0];
      const std::string& b = m.inputs[1];
      const std::string nb = internal("nb"), na = internal("na"), t1 = internal("t1"), t2 = internal("t2");
      out.push_back(make(GateKind::Not, nb, {b}, nb));
      out.push_back(make(GateKind::Not, na, {a}, na));
      out.push_back(make(GateKind::And, t1, {a, nb}, t1));
      out.push_back(make(GateKind::And, t2, {na, b}, t2));
      out.push_back(make(GateKind::Or, m.name, {t1, t2}, q));
      break;
    }
    case GateKind::Xor3: {
      const std::string& a = m.inputs[0];
      const std::string& b = m.inputs[1];
      const std::string t1 = internal("t1"), t2 = internal("t2");
      out.push_back(make(GateKind::Inhibit, t1, {b, a}, t1));
      out.push_back(make(GateKind::Inhibit, t2, {a, b}, t2));
      out.push_back(make(GateKind::Or, m.name, {t1, t2}, q));
      break;
    }
    case GateKind::DLatch6: {
      if (m.init_high) {
        throw Error("DLATCH6 '" + m.name + "' cannot start with Q=1: its feedback loop resets LOW");
      }
      const std::string& d = m.inputs[0];
      const std::string& clk = m.inputs[1];
      const std::string s = internal("s"), nd = internal("nd"), r = internal("r"), mm = internal("m"),
                        nr = internal("nr");
      out.push_back(make(GateKind::And, s, {d, clk}, s));
      out.push_back(make(GateKind::Not, nd, {d}, nd));
      out.push_back(make(GateKind::And, r, {nd, clk}, r));
      out.push_back(make(GateKind::Or, mm, {s, q}, mm));
      out.push_back(make(GateKind::Not, nr, {r}, nr));
      out.push_back(make(GateKind::And, m.name, {mm, nr}, q));
      break;
    }
    case GateKind::DLatch3: {
      const std::string& d = m.inputs[0];
      const std::string& clk = m.inputs[1];
      const std::string s = internal("s"), r = internal("r");
      out.push_back(make(GateKind::And, s, {d, clk}, s));
      out.push_back(make(GateKind::Inhibit, r, {d, clk}, r));
      out.push_back(make(GateKind::SrLatch, m.name, {s, r}, q, m.init_high));
      break;
    }
    default:
      out.push_back(m);
  }
}

// Pin uses of each net by gates, plus one per circuit output.
std::unordered_map<std::string, int> fan_out(const CircuitGraph& g) {
  std::unordered_map<std::string, int> count;
  for (const auto& gate : g.gates) {
    for (const auto& in : gate.inputs) {
      ++count[in];
    }
  }
  for (const auto& o : g.outputs) {
    ++count[o];
  }
  return count;
}

std::vector<std::size_t> topological_position(const CircuitGraph& g) {
  const std::size_t n = g.gates.size();
  std::unordered_map<std::string, std::size_t> driver;
  for (std::size_t i = 0; i < n; ++i) {
    driver[g.gates[i].output] = i;
  }
  std::vector<std::vector<std::size_t>> consumers(n);
  std::vector<int> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& in : g.gates[i].inputs) {
      if (auto it = driver.find(in); it != driver.end()) {
        consumers[it->second].push_back(i);
        ++indegree[i];
      }
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) {
      ready.push(i);
    }
  }
  std::vector<std::size_t> position(n, n);
  std::vector<bool> done(n, false);
  std::size_t next = 0;
  while (next < n) {
    if (ready.empty()) {
      // Feedback: release the earliest-declared gate still waiting.
      for (std::size_t i = 0; i < n; ++i) {
        if (!done[i]) {
          indegree[i] = 0;
          ready.push(i);
          break;
        }
      }
    }
    const std::size_t i = ready.top();
    ready.pop();
    if (done[i]) {
      continue;
    }
    done[i] = true;
    position[i] = next++;
    for (std::size_t c : consumers[i]) {
      if (!done[c] && --indegree[c] == 0) {
        ready.push(c);
      }
    }
  }
  return position;
}

bool is_output(const CircuitGraph& g, const std::string& net) {
  return std::find(g.outputs.begin(), g.outputs.end(), net) != g.outputs.end();
}

struct Index {
  std::unordered_map<std::string, std::size_t> driver;
  std::unordered_map<std::string, std::vector<std::size_t>> readers;
  std::unordered_map<std::string, int> fanout;
  /// Gates on a feedback cycle.
  std::vector<bool> cyclic;
};

std::vector<bool> gates_on_cycles(const CircuitGraph& g, const Index& ix) {
  const std::size_t n = g.gates.size();
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (auto it = ix.readers.find(g.gates[i].output); it != ix.readers.end()) {
      succ[i] = it->second;
    }
  }
  // Tarjan's strongly connected components.
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false), cyclic(n, false);
  std::vector<std::size_t> stack;
  int counter = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : succ[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> scc;
      std::size_t w = 0;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        scc.push_back(w);
      } while (w != v);
      const bool self_loop = std::find(succ[v].begin(), succ[v].end(), v) != succ[v].end();
      if (scc.size() > 1 || self_loop) {
        for (std::size_t x : scc) {
          cyclic[x] = true;
        }
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (index[i] < 0) {
      visit(i);
    }
  }
  return cyclic;
}

Index build_index(const CircuitGraph& g) {
  Index ix;
  for (std::size_t i = 0; i < g.gates.size(); ++i) {
    ix.driver[g.gates[i].output] = i;
    for (const auto& in : g.gates[i].inputs) {
      auto& r = ix.readers[in];
      if (r.empty() || r.back() != i) {
        r.push_back(i);
      }
    }
  }
  ix.fanout = fan_out(g);
  ix.cyclic = gates_on_cycles(g, ix);
  return ix;
}

// Net read by exactly one pin of one gate and not exported.
std::optional<std::size_t> sole_reader(const CircuitGraph& g, const Index& ix, const std::string& net) {
  auto f = ix.fanout.find(net);
  if (f == ix.fanout.end() || f->second != 1 || is_output(g, net)) {
    return std::nullopt;
  }
  return ix.readers.at(net).front();
}

// NOT(x)->n feeding AND(n,b)->q becomes INHIBIT(x,b)->q. Not inside feedback:
// the INHIBIT passes b through a tube, and a loop of pass-through tubes traps
// an undefined pressure at reset where the AND drove the rail.
void match_inhibit(const CircuitGraph& g, const Index& ix, std::size_t i, std::vector<RuleMatch>& out) {
  const Gate& inv = g.gates[i];
  if (inv.kind != GateKind::Not) {
    return;
  }
  const std::string& x = inv.inputs[0];
  const std::string& n = inv.output;
  if (x == n) {
    return;
  }
  const auto reader = sole_reader(g, ix, n);
  if (!reader) {
    return;
  }
  const Gate& conj = g.gates[*reader];
  if (conj.kind != GateKind::And || ix.cyclic[*reader]) {
    return;
  }
  const std::string& b = conj.inputs[0] == n ? conj.inputs[1] : conj.inputs[0];
  RuleMatch m;
  m.rule = RuleId::InhibitFuse;
  m.anchor = i;
  m.removed = {i, *reader};
  m.replace_at = *reader;
  m.replacement = make(GateKind::Inhibit, conj.name, {x, b}, conj.output);
  out.push_back(std::move(m));
}

// OR(S,Q)->m, NOT(R)->nr, AND(m,nr)->Q becomes SRLATCH(S,R)->Q.
void match_sr(const CircuitGraph& g, const Index& ix, std::size_t i, std::vector<RuleMatch>& out) {
  const Gate& disj = g.gates[i];
  if (disj.kind != GateKind::Or) {
    return;
  }
  const std::string& mnet = disj.output;
  const auto reader = sole_reader(g, ix, mnet);
  if (!reader || *reader == i) {
    return;
  }
  const Gate& last = g.gates[*reader];
  const std::string& q = last.output;
  std::string s;
  if (disj.inputs[1] == q && disj.inputs[0] != q) {
    s = disj.inputs[0];
  } else if (disj.inputs[0] == q && disj.inputs[1] != q) {
    s = disj.inputs[1];
  } else {
    return;
  }
  if (last.kind != GateKind::And) {
    return;
  }
  const std::string& nr = last.inputs[0] == mnet ? last.inputs[1] : last.inputs[0];
  if (nr == mnet) {
    return;
  }
  auto d = ix.driver.find(nr);
  if (d == ix.driver.end() || g.gates[d->second].kind != GateKind::Not) {
    return;
  }
  const auto nr_reader = sole_reader(g, ix, nr);
  if (!nr_reader || *nr_reader != *reader) {
    return;
  }
  const std::string r = g.gates[d->second].inputs[0];
  std::vector<std::size_t> removed{i, *reader, d->second};
  if (r == q || r == s || r == mnet) {
    return;
  }
  RuleMatch m;
  m.rule = RuleId::SrFuse;
  m.anchor = i;
  m.removed = std::move(removed);
  m.replace_at = *reader;
  m.replacement = make(GateKind::SrLatch, last.name, {s, r}, q, false);
  out.push_back(std::move(m));
}

CircuitGraph boundary(std::vector<std::string> inputs, std::vector<Gate> gates, std::string output) {
  CircuitGraph g;
  for (auto& in : inputs) {
    g.sources.push_back({std::move(in), SourceKind::Input, 0.0});
  }
  g.outputs = {std::move(output)};
  g.gates = std::move(gates);
  return g;
}

std::vector<RewriteRule> build_rules() {
  std::vector<RewriteRule> rules;

  RewriteRule r1;
  r1.id = RuleId::InhibitFuse;
  r1.name = "inhibit-fuse";
  r1.priority = 1;
  r1.notes = "NOT(x)->n, AND(n,b)->q with n read only by the AND: INHIBIT(x,b)->q";
  r1.patterns = {
      boundary({"x", "b"}, {make(GateKind::Not, "n", {"x"}, "n"), make(GateKind::And, "q", {"n", "b"}, "q")}, "q"),
      boundary({"x", "b"}, {make(GateKind::Not, "n", {"x"}, "n"), make(GateKind::And, "q", {"b", "n"}, "q")}, "q"),
  };
  r1.replacement = boundary({"x", "b"}, {make(GateKind::Inhibit, "q", {"x", "b"}, "q")}, "q");
  rules.push_back(std::move(r1));

  RewriteRule r2;
  r2.id = RuleId::SrFuse;
  r2.name = "sr-fuse";
  r2.priority = 2;
  r2.notes =
      "OR(S,Q)->m, NOT(R)->nr, AND(m,nr)->Q with m and nr read once: "
      "SRLATCH(S,R)->Q; valid while S and R are never HIGH together";
  r2.patterns = {
      boundary({"S", "R"},
               {make(GateKind::Or, "m", {"S", "Q"}, "m"), make(GateKind::Not, "nr", {"R"}, "nr"),
                make(GateKind::And, "Q", {"m", "nr"}, "Q")},
               "Q"),
      boundary({"S", "R"},
               {make(GateKind::Or, "m", {"Q", "S"}, "m"), make(GateKind::Not, "nr", {"R"}, "nr"),
                make(GateKind::And, "Q", {"nr", "m"}, "Q")},
               "Q"),
  };
  r2.replacement = boundary({"S", "R"}, {make(GateKind::SrLatch, "Q", {"S", "R"}, "Q")}, "Q");
  r2.sequential = true;
  r2.boundary_alphabet = {{false, false}, {false, true}, {true, false}};
  rules.push_back(std::move(r2));
  return rules;
}

int total_of(const CircuitGraph& g) { return static_cast<int>(g.gates.size()); }

}  // namespace

CircuitGraph expand_macro(const CircuitGraph& g) {
  if (g.level != Level::Gate) {
    throw Error("macro expansion needs a gate-level netlist");
  }
  if (std::none_of(g.gates.begin(), g.gates.end(), [](const Gate& x) { return is_macro(x.kind); })) {
    return g;
  }
  NameAllocator names(g);
  CircuitGraph out = g;
  out.gates.clear();
  for (const auto& gate : g.gates) {
    expand_one(gate, names, out.gates);
  }
  return out;
}

const std::vector<RewriteRule>& rewrite_rules() {
  static const std::vector<RewriteRule> rules = build_rules();
  return rules;
}

std::vector<EquivalenceVerdict> check_obligation(const RewriteRule& rule) {
  std::vector<EquivalenceVerdict> verdicts;
  for (const auto& pattern : rule.patterns) {
    if (rule.sequential) {
      SequenceOptions opts;
      opts.length = 4;
      opts.alphabet = rule.boundary_alphabet;
      verdicts.push_back(equiv_seq(pattern, rule.replacement, opts));
    } else {
      verdicts.push_back(equiv_comb(pattern, rule.replacement));
    }
  }
  return verdicts;
}

std::vector<RuleMatch> find_matches(const CircuitGraph& g) {
  const Index ix = build_index(g);
  const auto position = topological_position(g);
  std::vector<std::size_t> order(g.gates.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[position[i]] = i;
  }
  std::vector<RuleMatch> out;
  for (std::size_t i : order) {
    match_inhibit(g, ix, i, out);
    match_sr(g, ix, i, out);
  }
  return out;
}

CircuitGraph apply_match(const CircuitGraph& g, const RuleMatch& match) {
  CircuitGraph out = g;
  out.gates.clear();
  for (std::size_t i = 0; i < g.gates.size(); ++i) {
    if (i == match.replace_at) {
      out.gates.push_back(match.replacement);
    } else if (std::find(match.removed.begin(), match.removed.end(), i) == match.removed.end()) {
      out.gates.push_back(g.gates[i]);
    }
  }
  return out;
}

std::string RewriteReport::text() const {
  std::ostringstream os;
  for (const auto& a : applied) {
    os << "applied " << a.rule << " at " << a.site << ": " << a.count_before << " -> " << a.count_after << '\n';
  }
  os << "before: " << before.summary() << '\n';
  os << "after: " << after.summary() << '\n';
  os << "total " << before.total << " -> " << after.total << '\n';
  os << verdict.text();
  os << "result: " << (success ? "success" : "failure");
  if (!message.empty()) {
    os << " (" << message << ")";
  }
  os << '\n';
  return os.str();
}

void RewriteReport::write_csv(std::ostream& out) const {
  out << "rule,site,count_before,count_after\n";
  for (const auto& a : applied) {
    out << a.rule << ',' << a.site << ',' << a.count_before << ',' << a.count_after << '\n';
  }
}

OptimizeResult optimize(const CircuitGraph& g, const OptimizeOptions& options) {
  if (g.level != Level::Gate) {
    throw Error("optimize needs a gate-level netlist");
  }
  check_valid(g);
  CircuitGraph current = expand_macro(g);
  RewriteReport report;
  report.before = gate_count(g);

  std::optional<std::mt19937_64> rng;
  if (options.shuffle_seed) {
    rng.emplace(*options.shuffle_seed);
  }
  const auto& rules = rewrite_rules();
  for (;;) {
    const auto matches = find_matches(current);
    if (matches.empty()) {
      break;
    }
    const RuleMatch& m = rng ? matches[(*rng)() % matches.size()] : matches.front();
    const int before = total_of(current);
    current = apply_match(current, m);
    const auto rule = std::find_if(rules.begin(), rules.end(), [&](const RewriteRule& r) { return r.id == m.rule; });
    report.applied.push_back({rule->name, m.replacement.name, before, total_of(current)});
  }

  const bool sequential = holds_state(g) || holds_state(current);
  if (sequential) {
    SequenceOptions seq;
    seq.length = options.seq_length;
    seq.rails = options.rails;
    seq.settle_budget = options.settle_budget;
    report.verdict = equiv_seq(g, current, seq);
  } else {
    AnalysisOptions comb;
    comb.rails = options.rails;
    comb.settle_budget = options.settle_budget;
    report.verdict = equiv_comb(g, current, comb);
  }

  OptimizeResult result;
  report.success = report.verdict.equivalent();
  if (report.success) {
    result.circuit = std::move(current);
  } else {
    report.message = "verification failed, original circuit returned";
    result.circuit = g;
  }
  report.after = gate_count(result.circuit);
  result.report = std::move(report);
  return result;
}

}  // namespace fluidic
