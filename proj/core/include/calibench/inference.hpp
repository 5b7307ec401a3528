#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calibench/kb.hpp"

namespace calibench {

enum class ReasoningType { Negation, Symmetric, Inverse, Transitive, Composite, Temporal };

std::string to_string(ReasoningType t);
std::optional<ReasoningType> parse_reasoning_type(const std::string& name);

/// One rule application; `inputs` are the premise triples it consumed.
struct RuleStep {
  std::string rule;
  std::vector<KnowledgeTriple> inputs;
};

/// A fact produced by the closure (or imported pre-derived, e.g. temporal).
/// `depth` equals the total number of rule steps in the derivation
/// (provenance.size()); imported facts have depth 0 and empty provenance.
struct DerivedFact {
  KnowledgeTriple triple;
  bool truth = true;
  ReasoningType type = ReasoningType::Temporal;
  std::vector<RuleStep> provenance;
  int depth = 0;
  /// Base premises the derivation ultimately rests on (first-use order,
  /// deduplicated). Imported facts list themselves.
  std::vector<KnowledgeTriple> evidence;

  std::vector<std::string> rule_names() const;
};

struct ClosureOptions {
  /// Cap on total rule steps per derivation. Facts whose cheapest derivation
  /// needs more steps are dropped and the closure is marked truncated.
  int max_composite_depth = 3;
  /// Safety cap on expansion rounds; 0 means no cap.
  int max_iterations = 0;
};

struct ClosureReport {
  std::map<ReasoningType, std::size_t> counts;
  std::size_t base_count = 0;
  std::size_t iterations = 0;
  bool truncated = false;
};

struct Closure {
  std::vector<DerivedFact> facts;  // canonical order: depth, then triple, then truth
  ClosureReport report;
};

/// Single-rule appliers. Each returns the candidate fact a rule yields from
/// true premises, or nullopt when the rule does not apply. Premise provenance
/// is prepended, so chained applications accumulate the full step list.
std::optional<DerivedFact> apply_negation(const KnowledgeBase& kb, const DerivedFact& f);
std::optional<DerivedFact> apply_symmetric(const KnowledgeBase& kb, const DerivedFact& f);
std::optional<DerivedFact> apply_inverse(const KnowledgeBase& kb, const DerivedFact& f);
std::optional<DerivedFact> apply_transitive(const KnowledgeBase& kb, const DerivedFact& lhs,
                                            const DerivedFact& rhs);

/// Wraps a base triple as a depth-0 premise (truth = true, empty provenance).
DerivedFact base_fact(const KnowledgeTriple& t);

/// Forward-chains negation/symmetric/inverse/transitive rules to a fixed
/// point (semi-naive, breadth-first over total rule steps). Only true facts
/// serve as premises; negation yields terminal truth=false facts. Facts are
/// deduplicated on (triple, truth) keeping minimal depth, ties broken by the
/// lexicographically smallest rule-name sequence. Candidates that reproduce a
/// base triple are dropped (no new knowledge). `imported` facts (e.g.
/// temporal) join the output and, when true, serve as depth-0 premises;
/// chains built on them start a fresh step list naming the imported triple.
/// The truncated flag is computed by an uncapped reachability sweep, so it is
/// set whenever any derivable fact was cut off — even one whose cheapest
/// derivation sits several levels past the cap (joins skip depth levels).
Closure close(const KnowledgeBase& kb, const ClosureOptions& options = {},
              const std::vector<DerivedFact>& imported = {});

void save_closure(const Closure& closure, const std::string& path,
                  const std::string& manifest_hash = "");
std::vector<DerivedFact> load_derived_facts(const std::string& path);

}  // namespace calibench
