#include "fluidic/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "fluidic/analysis.hpp"
#include "fluidic/error.hpp"
#include "fluidic/netlist.hpp"
#include "fluidic/numeric.hpp"
#include "fluidic/optimizer.hpp"
#include "fluidic/parser.hpp"
#include "fluidic/simulator.hpp"
#include "fluidic/tolerance.hpp"
#include "fluidic/valve.hpp"

namespace fluidic {

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Load-time problems (missing files, syntax, structure) map to exit 2.
struct InputError : Error {
  using Error::Error;
};

CircuitGraph load_circuit(const std::string& path) {
  try {
    return load_netlist(path);
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

Stimulus load_stim(const std::string& path, const CircuitGraph& g) {
  try {
    return load_stimulus(path, g);
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Writes to `path` when given, else to `out`.
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw InputError("cannot open '" + path + "' for writing");
  }
  body(file);
  if (!file) {
    throw InputError("failed writing '" + path + "'");
  }
}

std::uint64_t default_seed() {
  const char* env = std::getenv("FLUIDIC_SEED");
  if (env == nullptr || *env == '\0') {
    return 42;
  }
  const std::string text(env);
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.front() == '-') {
    throw InputError("FLUIDIC_SEED must be an unsigned integer, got '" + text + "'");
  }
  return value;
}

struct SimArgs {
  std::string netlist;
  std::string stimulus;
  std::uint64_t max_ticks = 10000;
  std::uint32_t leak = 0;
  std::string out;
};

struct TruthArgs {
  std::string netlist;
  std::uint64_t budget = 1000;
  std::string out;
};

struct OptArgs {
  std::string netlist;
  std::string out;
  std::string report_csv;
  std::size_t seq = 6;
};

struct VerifyArgs {
  std::string first;
  std::string second;
  std::optional<std::size_t> seq;
};

struct SweepArgs {
  double snap_through = 134.0;
  double snap_back = 56.0;
  double supply = 160.0;
  double step = 1.0;
  bool bistable = false;
  std::string out;
};

struct MarginArgs {
  std::string netlist;
  double p_high = 153.0;
  std::uint64_t trials = 1000;
  std::optional<std::uint64_t> seed;
  std::string stimulus;
  std::optional<double> disturbance;
  double st_lo = 103.0, st_hi = 153.0, sb_lo = 40.0, sb_hi = 73.0;
  unsigned threads = 0;
  std::string csv;
  std::string out;
};

int cmd_sim(const SimArgs& a, std::ostream& out) {
  const CircuitGraph g = load_circuit(a.netlist);
  const Network net(g);
  Stimulus stim;
  if (a.stimulus.empty()) {
    stim.inputs = net.input_names();
  } else {
    stim = load_stim(a.stimulus, g);
  }
  SimOptions opts;
  opts.leak_after_ticks = a.leak;
  const Waveform wf = run(net, stim, a.max_ticks, opts);
  emit(a.out, out, [&](std::ostream& os) { write_waveform_csv(os, wf); });
  return wf.status.kind == RunStatusKind::Conflict ? kFailure : kOk;
}

int cmd_truth(const TruthArgs& a, std::ostream& out) {
  const CircuitGraph g = load_circuit(a.netlist);
  AnalysisOptions opts;
  opts.settle_budget = a.budget;
  const TruthTable table = truth_table(g, opts);
  emit(a.out, out, [&](std::ostream& os) { table.write_csv(os); });
  return kOk;
}

void comment_lines(std::ostream& os, const std::string& text) {
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    os << "# " << line << '\n';
  }
}

int cmd_opt(const OptArgs& a, std::ostream& out) {
  const CircuitGraph g = load_circuit(a.netlist);
  OptimizeOptions opts;
  opts.seq_length = a.seq;
  const OptimizeResult result = optimize(g, opts);
  const std::string report = result.report.text();
  if (a.out.empty()) {
    // The report rides along as comments so stdout stays a loadable netlist.
    out << serialize_netlist(result.circuit);
    comment_lines(out, report);
  } else {
    emit(a.out, out, [&](std::ostream& os) { os << serialize_netlist(result.circuit); });
    out << report;
  }
  if (!a.report_csv.empty()) {
    emit(a.report_csv, out, [&](std::ostream& os) { result.report.write_csv(os); });
  }
  return result.report.success ? kOk : kFailure;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const CircuitGraph first = load_circuit(a.first);
  const CircuitGraph second = load_circuit(a.second);
  EquivalenceVerdict verdict;
  if (a.seq || holds_state(first) || holds_state(second)) {
    SequenceOptions opts;
    opts.length = a.seq.value_or(6);
    verdict = equiv_seq(first, second, opts);
  } else {
    verdict = equiv_comb(first, second);
  }
  out << verdict.text();
  return verdict.equivalent() ? kOk : kFailure;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  if (!(a.step > 0.0)) {
    throw InputError("--step must be positive");
  }
  ValveSpec spec;
  spec.snap_through_kpa = a.snap_through;
  spec.snap_back_kpa = a.snap_back;
  spec.stability = a.bistable ? Stability::Bistable : Stability::Monostable;
  try {
    spec.check();
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  const auto ramp = triangle_ramp(a.supply, a.step);
  const auto curve = sweep_hysteresis(spec, a.supply, ramp);
  const auto points = measure_switch_points(curve);
  emit(a.out, out, [&](std::ostream& os) {
    write_sweep_csv(os, curve);
    if (points) {
      os << "# rising_kpa=" << format_number(points->rising_kpa) << " falling_kpa="
         << format_number(points->falling_kpa) << " width_kpa=" << format_number(points->width()) << '\n';
    } else {
      os << "# no complete switching cycle\n";
    }
  });
  return kOk;
}

int cmd_margin(const MarginArgs& a, std::ostream& out) {
  const CircuitGraph g = load_circuit(a.netlist);
  ToleranceModel model;
  model.snap_through = {a.st_lo, a.st_hi};
  model.snap_back = {a.sb_lo, a.sb_hi};
  model.seed = a.seed ? *a.seed : default_seed();
  try {
    model.check();
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  MarginOptions opts;
  opts.p_high = a.p_high;
  opts.trials = a.trials;
  opts.threads = a.threads;
  if (a.disturbance) {
    opts.check.mode = CheckMode::Disturbance;
    opts.check.disturbance_kpa = *a.disturbance;
  } else if (!a.stimulus.empty()) {
    opts.check.mode = CheckMode::Stimulus;
    opts.check.stimulus = load_stim(a.stimulus, g);
  }
  const MarginReport report = margin_analysis(g, model, opts);
  emit(a.out, out, [&](std::ostream& os) { os << report.text(); });
  if (!a.csv.empty()) {
    emit(a.csv, out, [&](std::ostream& os) { report.write_csv(os); });
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Switch-level simulator and gate-level compiler for pneumatic soft-valve logic", "fluidic"};
  app.require_subcommand(1);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "Simulate a netlist and print the waveform CSV");
  sim_cmd->add_option("netlist", sim.netlist, "Netlist file (.fnl)")->required();
  sim_cmd->add_option("--stimulus", sim.stimulus, "Stimulus CSV; inputs stay LOW without one");
  sim_cmd->add_option("--max-ticks", sim.max_ticks, "Tick budget")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--leak", sim.leak, "Vent nets trapped for this many ticks (0 = never)");
  sim_cmd->add_option("--out", sim.out, "Write to this file instead of stdout");

  TruthArgs truth;
  auto* truth_cmd = app.add_subcommand("truth", "Enumerate the truth table of a combinational netlist");
  truth_cmd->add_option("netlist", truth.netlist, "Netlist file (.fnl)")->required();
  truth_cmd->add_option("--budget", truth.budget, "Settle budget per row in ticks")->check(CLI::PositiveNumber);
  truth_cmd->add_option("--out", truth.out, "Write to this file instead of stdout");

  OptArgs opt;
  auto* opt_cmd = app.add_subcommand("opt", "Rewrite a gate-level netlist and verify the result");
  opt_cmd->add_option("netlist", opt.netlist, "Gate-level netlist file")->required();
  opt_cmd->add_option("--out", opt.out, "Write the optimized netlist here; the report goes to stdout");
  opt_cmd->add_option("--report-csv", opt.report_csv, "Write the applied rewrites as CSV");
  opt_cmd->add_option("--seq", opt.seq, "Sequence length for sequential verification");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check two netlists for equivalence");
  verify_cmd->add_option("first", verify.first, "First netlist")->required();
  verify_cmd->add_option("second", verify.second, "Second netlist")->required();
  verify_cmd->add_option("--seq", verify.seq, "Compare every input sequence of this length");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Ramp one valve's control pressure and print the hysteresis CSV");
  sweep_cmd->add_option("--snap-through", sweep.snap_through, "Snap-through differential, kPa");
  sweep_cmd->add_option("--snap-back", sweep.snap_back, "Snap-back differential, kPa");
  sweep_cmd->add_option("--supply", sweep.supply, "Supply and ramp peak, kPa");
  sweep_cmd->add_option("--step", sweep.step, "Ramp step, kPa");
  sweep_cmd->add_flag("--bistable", sweep.bistable, "Sweep a bistable valve");
  sweep_cmd->add_option("--out", sweep.out, "Write to this file instead of stdout");

  MarginArgs margin;
  auto* margin_cmd = app.add_subcommand("margin", "Monte Carlo pass fraction under snap-pressure variation");
  margin_cmd->add_option("netlist", margin.netlist, "Netlist file (.fnl)")->required();
  margin_cmd->add_option("--p-high", margin.p_high, "HIGH input pressure, kPa");
  margin_cmd->add_option("--trials", margin.trials, "Number of trials")->check(CLI::PositiveNumber);
  margin_cmd->add_option("--seed", margin.seed, "RNG seed (default $FLUIDIC_SEED or 42)");
  margin_cmd->add_option("--stimulus", margin.stimulus, "Check a stimulus run instead of the truth table");
  margin_cmd->add_option("--disturbance", margin.disturbance, "Check state retention under this disturbance, kPa");
  margin_cmd->add_option("--st-lo", margin.st_lo, "Snap-through range low, kPa");
  margin_cmd->add_option("--st-hi", margin.st_hi, "Snap-through range high, kPa");
  margin_cmd->add_option("--sb-lo", margin.sb_lo, "Snap-back range low, kPa");
  margin_cmd->add_option("--sb-hi", margin.sb_hi, "Snap-back range high, kPa");
  margin_cmd->add_option("--threads", margin.threads, "Worker threads (0 = all cores)");
  margin_cmd->add_option("--csv", margin.csv, "Write per-trial results as CSV");
  margin_cmd->add_option("--out", margin.out, "Write the summary to this file instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (margin.disturbance && !margin.stimulus.empty()) {
    err << "error: --disturbance and --stimulus are exclusive\n";
    return kUsage;
  }

  try {
    if (sim_cmd->parsed()) {
      return cmd_sim(sim, out);
    }
    if (truth_cmd->parsed()) {
      return cmd_truth(truth, out);
    }
    if (opt_cmd->parsed()) {
      return cmd_opt(opt, out);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify(verify, out);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep, out);
    }
    return cmd_margin(margin, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace fluidic
