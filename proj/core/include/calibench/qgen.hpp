#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "calibench/inference.hpp"
#include "calibench/kb.hpp"

namespace calibench {

struct BenchmarkQuestion {
  std::string id;  // stable across re-runs with identical inputs
  std::string text;
  bool truth = true;
  Domain domain = Domain::Culture;
  ReasoningType type = ReasoningType::Temporal;
  KnowledgeTriple fact;                    // the asserted triple
  std::vector<KnowledgeTriple> evidence;   // base premises behind the fact
};

/// Surface form used in question text: the manifest override when present,
/// otherwise the predicate name with underscores turned into spaces.
/// Throws DataError when the result would be empty.
std::string predicate_surface(const KnowledgeBase& kb, const std::string& predicate);

/// "Is it true that {subject} {surface} {object}?"
std::string render_question_text(const KnowledgeBase& kb, const KnowledgeTriple& t);

/// One question per closure fact. Ids are content hashes over
/// (domain, type, truth, triple); collisions within the set get a
/// deterministic numeric suffix.
std::vector<BenchmarkQuestion> generate_questions(const KnowledgeBase& kb,
                                                  const Closure& closure);

/// The five types the question table balances over (Symmetric facts support
/// composites but are not sampled by default).
const std::vector<ReasoningType>& default_question_types();

struct BalanceOptions {
  std::size_t quota = 0;  // per (domain, type) cell
  uint64_t seed = 0;
  std::vector<Domain> domains = all_domains();
  std::vector<ReasoningType> types = default_question_types();
  /// Aim for a 50/50 true/false split inside each cell when candidates allow.
  bool balance_truth = false;
};

struct CellShortfall {
  Domain domain;
  ReasoningType type;
  std::size_t available = 0;
  std::size_t requested = 0;
};

struct BalanceResult {
  std::vector<BenchmarkQuestion> sample;
  std::vector<CellShortfall> shortfalls;
};

/// Samples up to `quota` questions per requested (domain, type) cell without
/// replacement. Deterministic for a given seed regardless of platform; cells
/// short of the quota are reported, not fatal.
BalanceResult balance_sample(const std::vector<BenchmarkQuestion>& questions,
                             const BalanceOptions& options);

void save_questions(const std::vector<BenchmarkQuestion>& questions, const std::string& path,
                    const std::string& manifest_hash = "");
std::vector<BenchmarkQuestion> load_questions(const std::string& path);

}  // namespace calibench
