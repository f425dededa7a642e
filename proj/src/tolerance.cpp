#include "fluidic/tolerance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "fluidic/error.hpp"
#include "fluidic/numeric.hpp"
#include "fluidic/simulator.hpp"

namespace fluidic {

namespace {

constexpr std::uint64_t kMaxRedrawsPerValve = 100000;

void check_range(const Range& r, const char* what) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo < 0.0 || r.lo > r.hi) {
    throw Error(std::string(what) + " range [" + format_number(r.lo) + ", " + format_number(r.hi) +
                "] is not a valid interval");
  }
}

// 53 random mantissa bits mapped onto [lo, hi); a zero-width range yields lo.
double uniform(std::mt19937_64& rng, const Range& r) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return r.lo + u * (r.hi - r.lo);
}

RailConfig sampled_rails(double p_high) {
  if (!std::isfinite(p_high) || p_high <= 0.0 || p_high > 300.0) {
    throw Error("p_high must lie in (0, 300] kPa");
  }
  RailConfig rails;
  rails.p_high = p_high;
  rails.p_supply = std::max(160.0, p_high);
  rails.p_low = 0.0;
  rails.logic_threshold = p_high > 80.0 ? 80.0 : p_high / 2.0;
  rails.check();
  return rails;
}

std::vector<std::vector<double>> truth_rows(std::size_t k, double high) {
  if (k > 16) {
    throw Error("too many inputs for a truth-table margin check");
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < (std::size_t{1} << k); ++r) {
    std::vector<double> row(k);
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = ((r >> (k - 1 - j)) & 1U) != 0 ? high : 0.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Observations at one comparison point.
struct Observation {
  std::vector<LogicLevel> outputs;
  std::vector<MembraneState> membranes;
  std::vector<double> control_kpa;
  bool clean = true;
};

std::vector<double> control_differentials(const Network& net, const NetSolution& sol) {
  std::vector<double> d;
  for (const auto& v : net.valves()) {
    d.push_back(sol.nets[v.ctrl_top].kpa - sol.nets[v.ctrl_bottom].kpa);
  }
  return d;
}

std::vector<Observation> observe_truth(const Network& net, std::uint64_t budget) {
  Simulator sim(net);
  std::vector<Observation> out;
  for (const auto& row : truth_rows(net.input_names().size(), net.rails().p_high)) {
    sim.reset();
    const auto res = sim.settle(row, budget);
    Observation o;
    o.outputs = sim.output_logic(res.solution);
    o.membranes = res.membranes;
    o.control_kpa = control_differentials(net, res.solution);
    o.clean = res.status.kind == RunStatusKind::Settled && !res.conflict;
    out.push_back(std::move(o));
  }
  return out;
}

Observation observe_frame(const Network& net, const Frame& f) {
  Observation o;
  for (std::size_t idx : net.output_nets()) {
    o.outputs.push_back(f.logic[idx]);
  }
  o.membranes = f.membranes;
  o.control_kpa = control_differentials(net, f.solution);
  o.clean = !f.solution.has_conflict();
  return o;
}

std::vector<Observation> observe_stimulus(const Network& net, const Stimulus& stim, std::uint64_t max_ticks,
                                          RunStatusKind* status) {
  const Waveform wf = run(net, stim, max_ticks);
  *status = wf.status.kind;
  std::vector<std::uint64_t> checkpoints;
  for (std::size_t i = 1; i < stim.rows.size(); ++i) {
    checkpoints.push_back(stim.rows[i].tick - 1);
  }
  std::vector<Observation> out;
  for (std::uint64_t t : checkpoints) {
    const std::size_t idx = std::min<std::size_t>(t, wf.frames.size() - 1);
    out.push_back(observe_frame(net, wf.frames[idx]));
  }
  out.push_back(observe_frame(net, wf.final_frame()));
  return out;
}

struct Reference {
  std::vector<Observation> points;
  RunStatusKind status = RunStatusKind::Settled;
};

struct TrialOutcome {
  TrialResult result;
  std::vector<double> margins;
  std::uint64_t redraws = 0;
};

double valve_margin(const ValveSpec& spec, MembraneState nominal, double d) {
  if (nominal == MembraneState::Down) {
    return d > 0.0 ? d - spec.snap_through_kpa : d + spec.snap_back_kpa;
  }
  return spec.snap_through_kpa - d;
}

class TrialRunner {
 public:
  TrialRunner(const Network& prototype, const Reference& ref, const ToleranceModel& model,
              const MarginOptions& options)
      : net_(prototype), ref_(ref), model_(model), options_(options) {
    for (const auto& v : net_.valves()) {
      stability_.push_back(v.spec.stability);
    }
  }

  TrialOutcome run(std::uint64_t trial) {
    TrialOutcome out;
    out.result.trial = trial;
    SpecSample sample = sample_specs(model_, stability_.size(), trial);
    out.redraws = sample.redraws;
    for (std::size_t i = 0; i < sample.specs.size(); ++i) {
      sample.specs[i].stability = stability_[i];
    }
    out.margins.assign(sample.specs.size(), std::numeric_limits<double>::infinity());

    if (options_.check.mode == CheckMode::Disturbance) {
      bool ok = true;
      for (std::size_t i = 0; i < sample.specs.size(); ++i) {
        out.margins[i] = sample.specs[i].hysteresis_width() - options_.check.disturbance_kpa;
        ok = ok && disturbance_retained(sample.specs[i], options_.check.disturbance_kpa);
      }
      out.result.pass = ok;
      out.result.category = ok ? FailureCategory::None : FailureCategory::SpuriousSnap;
      return out;
    }

    net_.set_valve_thresholds(sample.specs);
    std::vector<Observation> points;
    RunStatusKind status = RunStatusKind::Settled;
    if (options_.check.mode == CheckMode::TruthTable) {
      points = observe_truth(net_, options_.settle_budget);
    } else {
      points = observe_stimulus(net_, *options_.check.stimulus, options_.max_ticks, &status);
    }

    bool logic_ok = status == ref_.status;
    bool no_snap = false;
    bool spurious = false;
    for (std::size_t p = 0; p < points.size(); ++p) {
      const Observation& got = points[p];
      const Observation& want = ref_.points[p];
      logic_ok = logic_ok && got.clean && got.outputs == want.outputs;
      for (std::size_t v = 0; v < got.membranes.size(); ++v) {
        if (got.membranes[v] != want.membranes[v]) {
          (want.membranes[v] == MembraneState::Down ? no_snap : spurious) = true;
        }
        out.margins[v] = std::min(out.margins[v], valve_margin(sample.specs[v], want.membranes[v], got.control_kpa[v]));
      }
    }
    out.result.pass = logic_ok;
    if (!logic_ok) {
      out.result.category = no_snap    ? FailureCategory::NoSnap
                            : spurious ? FailureCategory::SpuriousSnap
                                       : FailureCategory::LogicMismatch;
    }
    return out;
  }

 private:
  Network net_;
  const Reference& ref_;
  const ToleranceModel& model_;
  const MarginOptions& options_;
  std::vector<Stability> stability_;
};

}  // namespace

void ToleranceModel::check() const {
  check_range(snap_through, "snap_through");
  check_range(snap_back, "snap_back");
  if (snap_back.lo >= snap_through.hi) {
    throw Error("tolerance ranges admit no valve with snap_back < snap_through");
  }
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SpecSample sample_specs(const ToleranceModel& model, std::size_t n_valves, std::uint64_t trial) {
  model.check();
  std::mt19937_64 rng(splitmix64(model.seed ^ splitmix64(trial)));
  SpecSample out;
  out.specs.reserve(n_valves);
  for (std::size_t i = 0; i < n_valves; ++i) {
    ValveSpec spec;
    for (std::uint64_t attempt = 0;; ++attempt) {
      spec.snap_through_kpa = uniform(rng, model.snap_through);
      spec.snap_back_kpa = uniform(rng, model.snap_back);
      if (spec.valid()) {
        break;
      }
      if (attempt == kMaxRedrawsPerValve) {
        throw Error("tolerance ranges almost never yield snap_back < snap_through");
      }
      ++out.redraws;
    }
    out.specs.push_back(spec);
  }
  return out;
}

Interval wilson_interval(std::uint64_t passes, std::uint64_t trials) {
  if (trials == 0 || passes > trials) {
    throw Error("Wilson interval needs 0 <= passes <= trials and trials > 0");
  }
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(passes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

bool disturbance_retained(const ValveSpec& spec, double d) {
  const bool held_down =
      membrane_update(spec, MembraneState::Down, spec.snap_through_kpa - d) == MembraneState::Down;
  const bool held_up = membrane_update(spec, MembraneState::Up, spec.snap_back_kpa + d) == MembraneState::Up;
  return held_down && held_up;
}

std::string_view to_string(FailureCategory c) {
  switch (c) {
    case FailureCategory::None:
      return "none";
    case FailureCategory::NoSnap:
      return "no-snap";
    case FailureCategory::SpuriousSnap:
      return "spurious-snap";
    case FailureCategory::LogicMismatch:
      return "logic-mismatch";
  }
  return "none";
}

std::string MarginReport::text() const {
  std::ostringstream os;
  os << "trials=" << trials << '\n';
  os << "passes=" << passes << '\n';
  os << "pass_fraction=" << format_number(pass_fraction) << '\n';
  os << "wilson95_lo=" << format_number(wilson.lo) << '\n';
  os << "wilson95_hi=" << format_number(wilson.hi) << '\n';
  os << "fail_no_snap=" << no_snap << '\n';
  os << "fail_spurious_snap=" << spurious_snap << '\n';
  os << "fail_logic_mismatch=" << logic_mismatch << '\n';
  os << "redraws=" << redraws << '\n';
  os << "p_high=" << format_number(p_high) << '\n';
  os << "seed=" << seed << '\n';
  for (const auto& m : valve_margins) {
    os << "margin." << m.valve << '=' << format_number(m.worst_kpa) << '\n';
  }
  return os.str();
}

void MarginReport::write_csv(std::ostream& out) const {
  out << "trial,pass,failure_category\n";
  for (const auto& r : results) {
    out << r.trial << ',' << (r.pass ? 1 : 0) << ',' << to_string(r.category) << '\n';
  }
}

MarginReport margin_analysis(const CircuitGraph& g, const ToleranceModel& model, const MarginOptions& options) {
  model.check();
  if (options.trials < 1) {
    throw Error("margin analysis needs at least one trial");
  }
  const RailConfig rails = sampled_rails(options.p_high);
  const Network nominal(g);
  Reference ref;
  switch (options.check.mode) {
    case CheckMode::TruthTable:
      if (holds_state(g)) {
        throw NotCombinational("truth-table margin check needs a combinational circuit; use a stimulus");
      }
      ref.points = observe_truth(nominal, options.settle_budget);
      for (const auto& o : ref.points) {
        if (!o.clean) {
          throw Error("nominal circuit does not settle cleanly on every truth-table row");
        }
      }
      break;
    case CheckMode::Stimulus:
      if (!options.check.stimulus) {
        throw Error("stimulus check without a stimulus");
      }
      if (options.check.stimulus->inputs != nominal.input_names()) {
        throw Error("stimulus inputs do not match the netlist inputs");
      }
      ref.points = observe_stimulus(nominal, *options.check.stimulus, options.max_ticks, &ref.status);
      break;
    case CheckMode::Disturbance:
      if (!std::isfinite(options.check.disturbance_kpa) || options.check.disturbance_kpa < 0.0) {
        throw Error("disturbance must be a non-negative pressure");
      }
      break;
  }

  const Network prototype(g, rails);
  std::vector<TrialOutcome> outcomes(options.trials);
  unsigned threads = options.threads != 0 ? options.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, options.trials));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      TrialRunner runner(prototype, ref, model, options);
      for (std::uint64_t t = next++; t < options.trials; t = next++) {
        outcomes[t] = runner.run(t);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) {
        failure = std::current_exception();
      }
      next = options.trials;
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  MarginReport report;
  report.trials = options.trials;
  report.p_high = options.p_high;
  report.seed = model.seed;
  for (const auto& v : prototype.valves()) {
    report.valve_margins.push_back({v.name, std::numeric_limits<double>::infinity()});
  }
  for (const auto& o : outcomes) {
    report.results.push_back(o.result);
    report.redraws += o.redraws;
    if (o.result.pass) {
      ++report.passes;
    }
    switch (o.result.category) {
      case FailureCategory::NoSnap:
        ++report.no_snap;
        break;
      case FailureCategory::SpuriousSnap:
        ++report.spurious_snap;
        break;
      case FailureCategory::LogicMismatch:
        ++report.logic_mismatch;
        break;
      case FailureCategory::None:
        break;
    }
    for (std::size_t v = 0; v < o.margins.size(); ++v) {
      report.valve_margins[v].worst_kpa = std::min(report.valve_margins[v].worst_kpa, o.margins[v]);
    }
  }
  report.pass_fraction = static_cast<double>(report.passes) / static_cast<double>(report.trials);
  report.wilson = wilson_interval(report.passes, report.trials);
  return report;
}

}  // namespace fluidic
