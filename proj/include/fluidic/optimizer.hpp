#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fluidic/analysis.hpp"
#include "fluidic/netlist.hpp"
#include "fluidic/pressure.hpp"

namespace fluidic {

/// Replaces XOR5, XOR3, DLATCH6 and DLATCH3 by primitive gates. Internal nets
/// and gates are named `<macro>_<suffix>`; the macro's own name goes to the
/// gate driving its output. Primitive gates pass through.
CircuitGraph expand_macro(const CircuitGraph& g);

enum class RuleId { InhibitFuse, SrFuse };

struct RewriteRule {
  RuleId id = RuleId::InhibitFuse;
  std::string name;
  int priority = 0;
  std::string notes;
  /// Every subgraph form the rule matches, with the boundary nets as inputs.
  std::vector<CircuitGraph> patterns;
  CircuitGraph replacement;
  /// Patterns with feedback are checked sequentially over this alphabet.
  bool sequential = false;
  std::vector<std::vector<bool>> boundary_alphabet;
};

/// R1 inhibit-fuse, R2 sr-fuse, in priority order.
const std::vector<RewriteRule>& rewrite_rules();

/// Equivalence of each pattern against the replacement on the boundary.
std::vector<EquivalenceVerdict> check_obligation(const RewriteRule& rule);

struct RuleMatch {
  RuleId rule = RuleId::InhibitFuse;
  /// Gate whose topological position orders the match.
  std::size_t anchor = 0;
  /// Gates removed; the replacement takes the slot of `replace_at`.
  std::vector<std::size_t> removed;
  std::size_t replace_at = 0;
  Gate replacement;
};

/// Every match in application order: topological position of the anchor, then
/// rule priority.
std::vector<RuleMatch> find_matches(const CircuitGraph& g);
CircuitGraph apply_match(const CircuitGraph& g, const RuleMatch& match);

struct AppliedRewrite {
  std::string rule;
  std::string site;
  int count_before = 0;
  int count_after = 0;
};

struct RewriteReport {
  GateCount before;
  GateCount after;
  std::vector<AppliedRewrite> applied;
  EquivalenceVerdict verdict;
  bool success = false;
  std::string message;

  std::string text() const;
  /// `rule,site,count_before,count_after`
  void write_csv(std::ostream& out) const;
};

struct OptimizeOptions {
  std::size_t seq_length = 6;
  /// Picks a random match at every step instead of the first one.
  std::optional<std::uint64_t> shuffle_seed;
  RailConfig rails;
  std::uint64_t settle_budget = 1000;
};

struct OptimizeResult {
  CircuitGraph circuit;
  RewriteReport report;
};

/// Expands macros, rewrites to a fixed point and verifies the result against
/// the input (sequentially when either side holds state). On a failed check
/// the input circuit is returned unchanged.
OptimizeResult optimize(const CircuitGraph& g, const OptimizeOptions& options = {});

}  // namespace fluidic
