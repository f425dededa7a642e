#include "fluidic/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fluidic/error.hpp"
#include "fluidic/numeric.hpp"

namespace fluidic {

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool is_identifier(std::string_view s) {
  return !s.empty() && is_ident_start(s.front()) && std::all_of(s.begin() + 1, s.end(), is_ident_char);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#') {
      break;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != '#' && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' &&
           line[i] != '\v' && line[i] != '\f') {
      ++i;
    }
    tokens.push_back({line.substr(start, i - start), start + 1});
  }
  return tokens;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) {
        lines.push_back(text.substr(start));
      }
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

struct KeyValue {
  std::string key;
  std::string_view value;
  std::size_t column;
  std::size_t value_column;
};

class NetlistReader {
 public:
  explicit NetlistReader(const ParseOptions& options) : options_(options) {}

  CircuitGraph read(std::string_view text) {
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      line_no_ = i + 1;
      statement(tokenize(lines[i]));
    }
    finish();
    return std::move(graph_);
  }

 private:
  [[noreturn]] void fail(std::size_t column, const std::string& message) const {
    throw ParseError(line_no_, column, message);
  }

  void note_net(const std::string& net) { net_line_.emplace(net, line_no_); }

  std::string identifier(const Token& tok, std::string_view what) const {
    if (!is_identifier(tok.text)) {
      fail(tok.column, "invalid " + std::string(what) + " '" + std::string(tok.text) + "'");
    }
    return std::string(tok.text);
  }

  std::string identifier(std::string_view text, std::size_t column, std::string_view what) const {
    return identifier(Token{text, column}, what);
  }

  double number(std::string_view text, std::size_t column, std::string_view what) const {
    auto v = parse_number(text);
    if (!v) {
      fail(column, "malformed number '" + std::string(text) + "' for " + std::string(what));
    }
    return *v;
  }

  std::vector<KeyValue> key_values(const std::vector<Token>& tokens, std::size_t first) const {
    std::vector<KeyValue> out;
    std::unordered_set<std::string> seen;
    for (std::size_t i = first; i < tokens.size(); ++i) {
      const auto& tok = tokens[i];
      const auto eq = tok.text.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        fail(tok.column, "expected key=value, got '" + std::string(tok.text) + "'");
      }
      std::string key = lower(tok.text.substr(0, eq));
      if (!seen.insert(key).second) {
        fail(tok.column, "duplicate key '" + key + "'");
      }
      out.push_back({std::move(key), tok.text.substr(eq + 1), tok.column, tok.column + eq + 1});
    }
    return out;
  }

  void set_level(Level level, std::size_t column) {
    if (!level_) {
      level_ = level;
      graph_.level = level;
    } else if (*level_ != level) {
      fail(column, "mixed gate and valve statements in one netlist");
    }
  }

  void claim_element(const std::string& name, std::size_t column) {
    if (!element_line_.emplace(name, line_no_).second) {
      fail(column, "duplicate identifier '" + name + "'");
    }
  }

  void statement(const std::vector<Token>& tokens) {
    if (tokens.empty()) {
      return;
    }
    const std::string keyword = lower(tokens[0].text);
    if (keyword == "source") {
      source(tokens);
    } else if (keyword == "input") {
      io(tokens, true);
    } else if (keyword == "output") {
      io(tokens, false);
    } else if (keyword == "gate") {
      gate(tokens);
    } else if (keyword == "valve") {
      valve(tokens);
    } else if (keyword == "param") {
      param(tokens);
    } else {
      fail(tokens[0].column, "unknown keyword '" + std::string(tokens[0].text) + "'");
    }
  }

  void claim_source_net(const std::string& net, std::size_t column) {
    if (!source_nets_.insert(net).second) {
      fail(column, "duplicate identifier '" + net + "'");
    }
    note_net(net);
  }

  void source(const std::vector<Token>& tokens) {
    if (tokens.size() != 3) {
      fail(tokens[0].column, "source expects: source <net> <kPa>");
    }
    const std::string net = identifier(tokens[1], "net name");
    const double kpa = number(tokens[2].text, tokens[2].column, "source pressure");
    try {
      Pressure::kpa(kpa, options_.max_pressure_kpa);
    } catch (const Error& e) {
      fail(tokens[2].column, e.what());
    }
    claim_source_net(net, tokens[1].column);
    graph_.sources.push_back({net, SourceKind::Fixed, kpa});
  }

  void io(const std::vector<Token>& tokens, bool is_input) {
    if (tokens.size() < 2) {
      fail(tokens[0].column, std::string(is_input ? "input" : "output") + " expects at least one net name");
    }
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      const std::string net = identifier(tokens[i], "net name");
      if (is_input) {
        claim_source_net(net, tokens[i].column);
        graph_.sources.push_back({net, SourceKind::Input, 0.0});
      } else {
        if (std::find(graph_.outputs.begin(), graph_.outputs.end(), net) != graph_.outputs.end()) {
          fail(tokens[i].column, "duplicate identifier '" + net + "'");
        }
        note_net(net);
        graph_.outputs.push_back(net);
      }
    }
  }

  void gate(const std::vector<Token>& tokens) {
    if (tokens.size() < 3) {
      fail(tokens[0].column, "gate expects: gate <KIND> <name> pin=net ...");
    }
    set_level(Level::Gate, tokens[0].column);
    const auto kind = parse_gate_kind(tokens[1].text);
    if (!kind) {
      fail(tokens[1].column, "unknown gate kind '" + std::string(tokens[1].text) + "'");
    }
    Gate g;
    g.kind = *kind;
    g.name = identifier(tokens[2], "gate name");
    claim_element(g.name, tokens[2].column);

    const auto pins = input_pins(g.kind);
    std::vector<std::optional<std::string>> bound(pins.size());
    std::optional<std::string> out;
    for (const auto& kv : key_values(tokens, 3)) {
      if (kv.key == "out") {
        out = identifier(kv.value, kv.value_column, "net name");
        continue;
      }
      if (kv.key == "init" && has_initial_state(g.kind)) {
        if (kv.value != "0" && kv.value != "1") {
          fail(kv.value_column, "init must be 0 or 1");
        }
        g.init_high = kv.value == "1";
        continue;
      }
      const auto it = std::find(pins.begin(), pins.end(), kv.key);
      if (it == pins.end()) {
        fail(kv.column, "arity mismatch: " + std::string(to_string(g.kind)) + " has no pin '" + kv.key + "'");
      }
      bound[static_cast<std::size_t>(it - pins.begin())] = identifier(kv.value, kv.value_column, "net name");
    }
    for (std::size_t i = 0; i < pins.size(); ++i) {
      if (!bound[i]) {
        fail(tokens[2].column, "arity mismatch: " + std::string(to_string(g.kind)) + " gate '" + g.name +
                                   "' is missing pin '" + std::string(pins[i]) + "'");
      }
      note_net(*bound[i]);
      g.inputs.push_back(*bound[i]);
    }
    if (!out) {
      fail(tokens[2].column, "arity mismatch: " + std::string(to_string(g.kind)) + " gate '" + g.name +
                                 "' is missing pin 'out'");
    }
    note_net(*out);
    g.output = *out;
    graph_.gates.push_back(std::move(g));
  }

  struct PendingValve {
    std::size_t line;
    std::optional<double> snap_through;
    std::optional<double> snap_back;
  };

  void valve(const std::vector<Token>& tokens) {
    if (tokens.size() < 2) {
      fail(tokens[0].column, "valve expects: valve <name> key=value ...");
    }
    set_level(Level::Valve, tokens[0].column);
    ValveInstance v;
    v.name = identifier(tokens[1], "valve name");
    claim_element(v.name, tokens[1].column);
    v.spec.label = v.name;

    PendingValve pending{line_no_, std::nullopt, std::nullopt};
    bool has_init = false;
    std::unordered_map<std::string, std::string*> ports{
        {"ctrl_top", &v.ports.ctrl_top}, {"ctrl_bottom", &v.ports.ctrl_bottom},
        {"top_in", &v.ports.top_in},     {"top_out", &v.ports.top_out},
        {"bot_in", &v.ports.bot_in},     {"bot_out", &v.ports.bot_out},
    };
    std::unordered_set<std::string> bound_ports;
    for (const auto& kv : key_values(tokens, 2)) {
      if (auto it = ports.find(kv.key); it != ports.end()) {
        *it->second = identifier(kv.value, kv.value_column, "net name");
        note_net(*it->second);
        bound_ports.insert(kv.key);
      } else if (kv.key == "mode") {
        const std::string mode = lower(kv.value);
        if (mode == "monostable") {
          v.spec.stability = Stability::Monostable;
        } else if (mode == "bistable") {
          v.spec.stability = Stability::Bistable;
        } else {
          fail(kv.value_column, "mode must be monostable or bistable");
        }
      } else if (kv.key == "snap_through") {
        pending.snap_through = number(kv.value, kv.value_column, "snap_through");
      } else if (kv.key == "snap_back") {
        pending.snap_back = number(kv.value, kv.value_column, "snap_back");
      } else if (kv.key == "init") {
        const std::string init = lower(kv.value);
        if (init == "up") {
          v.initial = MembraneState::Up;
        } else if (init == "down") {
          v.initial = MembraneState::Down;
        } else {
          fail(kv.value_column, "init must be up or down");
        }
        has_init = true;
      } else {
        fail(kv.column, "unknown valve key '" + kv.key + "'");
      }
    }
    for (const char* required : {"ctrl_top", "top_in", "top_out", "bot_in", "bot_out"}) {
      if (!bound_ports.contains(required)) {
        fail(tokens[1].column, "dangling port: valve '" + v.name + "' does not bind " + required);
      }
    }
    if (v.spec.stability == Stability::Bistable && !has_init) {
      fail(tokens[1].column, "bistable valve '" + v.name + "' must declare init=up|down");
    }
    if (!bound_ports.contains("ctrl_bottom")) {
      note_net(v.ports.ctrl_bottom);
    }
    graph_.valves.push_back(std::move(v));
    pending_.push_back(pending);
  }

  void param(const std::vector<Token>& tokens) {
    if (tokens.size() < 2) {
      fail(tokens[0].column, "param expects key=value");
    }
    for (const auto& kv : key_values(tokens, 1)) {
      if (kv.key == "snap_through") {
        graph_.gate_spec.snap_through_kpa = number(kv.value, kv.value_column, "snap_through");
      } else if (kv.key == "snap_back") {
        graph_.gate_spec.snap_back_kpa = number(kv.value, kv.value_column, "snap_back");
      } else {
        fail(kv.column, "unknown param '" + kv.key + "'");
      }
      param_line_ = line_no_;
    }
  }

  std::size_t line_of(const std::string& subject) const {
    if (auto it = element_line_.find(subject); it != element_line_.end()) {
      return it->second;
    }
    if (auto it = net_line_.find(subject); it != net_line_.end()) {
      return it->second;
    }
    if (subject == "param") {
      return param_line_;
    }
    return line_no_;
  }

  void finish() {
    for (std::size_t i = 0; i < graph_.valves.size(); ++i) {
      auto& spec = graph_.valves[i].spec;
      spec.snap_through_kpa = pending_[i].snap_through.value_or(graph_.gate_spec.snap_through_kpa);
      spec.snap_back_kpa = pending_[i].snap_back.value_or(graph_.gate_spec.snap_back_kpa);
    }
    const auto violations = validate(graph_);
    if (!violations.empty()) {
      const auto& v = violations.front();
      throw ParseError(line_of(v.subject), 0, v.rule + ": " + v.message);
    }
  }

  ParseOptions options_;
  CircuitGraph graph_;
  std::optional<Level> level_;
  std::size_t line_no_ = 0;
  std::size_t param_line_ = 0;
  std::unordered_set<std::string> source_nets_;
  std::unordered_map<std::string, std::size_t> element_line_;
  std::unordered_map<std::string, std::size_t> net_line_;
  std::vector<PendingValve> pending_;
};

// RFC-4180 style field split with double-quote escaping. Returns each field
// with its 1-based starting column.
std::vector<Token> split_csv(std::string_view line, std::vector<std::string>& storage, std::size_t line_no) {
  std::vector<std::pair<std::string, std::size_t>> fields;
  std::string current;
  std::size_t start = 1;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && !was_quoted && std::all_of(current.begin(), current.end(), [](char x) {
                 return x == ' ' || x == '\t';
               })) {
      current.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.emplace_back(std::move(current), start);
      current.clear();
      start = i + 2;
      was_quoted = false;
    } else {
      current.push_back(c);
    }
  }
  if (quoted) {
    throw ParseError(line_no, start, "unterminated quoted field");
  }
  fields.emplace_back(std::move(current), start);

  storage.clear();
  storage.reserve(fields.size());
  std::vector<Token> out;
  for (auto& [text, col] : fields) {
    const auto b = text.find_first_not_of(" \t");
    const auto e = text.find_last_not_of(" \t");
    storage.push_back(b == std::string::npos ? std::string() : text.substr(b, e - b + 1));
  }
  for (std::size_t i = 0; i < storage.size(); ++i) {
    out.push_back({storage[i], fields[i].second});
  }
  return out;
}

}  // namespace

CircuitGraph parse_netlist(std::string_view text, const ParseOptions& options) {
  return NetlistReader(options).read(text);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CircuitGraph load_netlist(const std::filesystem::path& path, const ParseOptions& options) {
  return parse_netlist(read_text_file(path), options);
}

std::string serialize_netlist(const CircuitGraph& g) {
  std::ostringstream os;
  os << "# fluidic netlist\n";
  for (const auto& s : g.sources) {
    if (s.kind == SourceKind::Fixed) {
      os << "source " << s.net << ' ' << format_number(s.kpa) << '\n';
    } else {
      os << "input " << s.net << '\n';
    }
  }
  for (const auto& o : g.outputs) {
    os << "output " << o << '\n';
  }
  const ValveSpec defaults;
  if (g.gate_spec.snap_through_kpa != defaults.snap_through_kpa ||
      g.gate_spec.snap_back_kpa != defaults.snap_back_kpa) {
    os << "param snap_through=" << format_number(g.gate_spec.snap_through_kpa)
       << " snap_back=" << format_number(g.gate_spec.snap_back_kpa) << '\n';
  }
  for (const auto& gate : g.gates) {
    os << "gate " << to_string(gate.kind) << ' ' << gate.name;
    const auto pins = input_pins(gate.kind);
    for (std::size_t i = 0; i < pins.size() && i < gate.inputs.size(); ++i) {
      os << ' ' << pins[i] << '=' << gate.inputs[i];
    }
    os << " out=" << gate.output;
    if (has_initial_state(gate.kind)) {
      os << " init=" << (gate.init_high ? 1 : 0);
    }
    os << '\n';
  }
  for (const auto& v : g.valves) {
    const auto& p = v.ports;
    os << "valve " << v.name << " mode=" << to_string(v.spec.stability) << " ctrl_top=" << p.ctrl_top
       << " ctrl_bottom=" << p.ctrl_bottom << " top_in=" << p.top_in << " top_out=" << p.top_out
       << " bot_in=" << p.bot_in << " bot_out=" << p.bot_out
       << " snap_through=" << format_number(v.spec.snap_through_kpa)
       << " snap_back=" << format_number(v.spec.snap_back_kpa) << " init=" << to_string(v.initial) << '\n';
  }
  return os.str();
}

double StimulusCell::resolve(const RailConfig& rails) const {
  if (kind == Kind::Kpa) {
    return kpa;
  }
  return level == LogicLevel::High ? rails.p_high : rails.p_low;
}

std::vector<double> Stimulus::pressures_at(std::uint64_t tick, const RailConfig& rails) const {
  std::vector<double> out(inputs.size(), rails.p_low);
  const StimulusRow* active = nullptr;
  for (const auto& row : rows) {
    if (row.tick > tick) {
      break;
    }
    active = &row;
  }
  if (active) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = active->cells[i].resolve(rails);
    }
  }
  return out;
}

Stimulus parse_stimulus(std::string_view text, const CircuitGraph& netlist, const ParseOptions& options) {
  Stimulus stim;
  stim.inputs = netlist.inputs();
  std::unordered_map<std::string, std::size_t> input_index;
  for (std::size_t i = 0; i < stim.inputs.size(); ++i) {
    input_index.emplace(stim.inputs[i], i);
  }

  const auto lines = split_lines(text);
  std::vector<std::string> storage;
  std::vector<std::size_t> column_to_input;  // header column (after tick) -> input index
  bool have_header = false;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    std::string_view line = lines[li];
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') {
      continue;
    }
    const auto fields = split_csv(line, storage, line_no);
    if (!have_header) {
      if (lower(fields[0].text) != "tick") {
        throw ParseError(line_no, fields[0].column, "stimulus header must start with 'tick'");
      }
      std::vector<bool> covered(stim.inputs.size(), false);
      for (std::size_t f = 1; f < fields.size(); ++f) {
        const std::string name(fields[f].text);
        auto it = input_index.find(name);
        if (it == input_index.end()) {
          throw ParseError(line_no, fields[f].column, "unknown signal '" + name + "'");
        }
        if (covered[it->second]) {
          throw ParseError(line_no, fields[f].column, "duplicate signal '" + name + "'");
        }
        covered[it->second] = true;
        column_to_input.push_back(it->second);
      }
      for (std::size_t i = 0; i < covered.size(); ++i) {
        if (!covered[i]) {
          throw ParseError(line_no, 0, "input '" + stim.inputs[i] + "' not covered by stimulus header");
        }
      }
      have_header = true;
      continue;
    }

    if (fields.size() != column_to_input.size() + 1) {
      throw ParseError(line_no, 0,
                       "expected " + std::to_string(column_to_input.size() + 1) + " fields, got " +
                           std::to_string(fields.size()));
    }
    StimulusRow row;
    const auto tick_text = fields[0].text;
    const auto res = std::from_chars(tick_text.data(), tick_text.data() + tick_text.size(), row.tick);
    if (tick_text.empty() || res.ec != std::errc() || res.ptr != tick_text.data() + tick_text.size()) {
      throw ParseError(line_no, fields[0].column, "malformed tick '" + std::string(tick_text) + "'");
    }
    if (!stim.rows.empty() && row.tick <= stim.rows.back().tick) {
      throw ParseError(line_no, fields[0].column, "ticks must be strictly increasing");
    }
    row.cells.resize(stim.inputs.size());
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const auto cell_text = fields[f].text;
      const std::size_t input = column_to_input[f - 1];
      StimulusCell cell;
      if (lower(cell_text) == "hold") {
        if (stim.rows.empty()) {
          throw ParseError(line_no, fields[f].column, "'hold' on the first row has nothing to repeat");
        }
        cell = stim.rows.back().cells[input];
      } else if (cell_text == "0" || cell_text == "1") {
        cell = StimulusCell::logic(cell_text == "1");
      } else {
        auto v = parse_number(cell_text);
        if (!v) {
          throw ParseError(line_no, fields[f].column, "malformed number '" + std::string(cell_text) + "'");
        }
        try {
          Pressure::kpa(*v, options.max_pressure_kpa);
        } catch (const Error& e) {
          throw ParseError(line_no, fields[f].column, e.what());
        }
        cell = StimulusCell::pressure(*v);
      }
      row.cells[input] = cell;
    }
    stim.rows.push_back(std::move(row));
  }
  if (!have_header && !stim.inputs.empty()) {
    throw ParseError(1, 0, "stimulus is missing its 'tick,...' header");
  }
  return stim;
}

Stimulus load_stimulus(const std::filesystem::path& path, const CircuitGraph& netlist, const ParseOptions& options) {
  return parse_stimulus(read_text_file(path), netlist, options);
}

std::string serialize_stimulus(const Stimulus& stimulus) {
  std::ostringstream os;
  os << "tick";
  for (const auto& name : stimulus.inputs) {
    os << ',' << name;
  }
  os << '\n';
  for (const auto& row : stimulus.rows) {
    os << row.tick;
    for (const auto& cell : row.cells) {
      os << ',';
      if (cell.kind == StimulusCell::Kind::Logic) {
        os << (cell.level == LogicLevel::High ? '1' : '0');
      } else {
        // A bare 0 or 1 would read back as a logic level.
        std::string text = format_number(cell.kpa);
        if (text == "0" || text == "1") {
          text += ".0";
        }
        os << text;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace fluidic
