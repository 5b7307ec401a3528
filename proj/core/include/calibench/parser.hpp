#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calibench/gateway.hpp"
#include "calibench/kb.hpp"

namespace calibench {

enum class Answer { Yes, No, Missing };
std::string to_string(Answer a);
std::optional<Answer> parse_answer(const std::string& name);

/// Structured view of one model completion. Probabilities are stored on
/// [0, 1]; absent or unusable values stay unset rather than defaulting.
struct ModelResponse {
  std::string question_id;
  std::string model;
  Frame frame = Frame::Baseline;
  double temperature = 0.0;
  Answer answer = Answer::Missing;
  std::optional<double> conf_answer;     // self-reported answer confidence
  std::optional<double> conf_facts;      // probability the facts are correct
  std::optional<double> conf_reasoning;  // probability the reasoning is correct
  /// conf_facts * conf_reasoning, present only when both factors are.
  std::optional<double> derived_conf;
  std::vector<std::string> knowledge_items;
  /// Parse anomalies: "missing-answer", "tie", "conflict-answer",
  /// "conflict-facts", "conflict-reasoning", "textual-confidence",
  /// "confidence-out-of-range", "truncated", "provider-error".
  std::vector<std::string> flags;

  bool has_flag(const std::string& name) const;
};

/// Yes/no + three-probability protocol parser. The first answer declaration
/// wins (case-insensitive). Percentages may be written "95%", "95 percent",
/// or bare "95" next to an elicitation keyword; probabilities are matched to
/// items by keyword (facts / reasoning / answer) first and by elicitation
/// order second, with conflicts flagged.
ModelResponse parse_baseline(const RawResponse& raw);

/// Direct-probability parser. The reported probability q refers to the
/// framed answer: q > 0.5 implies the framed answer, q < 0.5 its complement
/// (confidence max(q, 1-q)); q = 0.5 yields Missing with a "tie" flag.
ModelResponse parse_frame(const RawResponse& raw);

/// Dispatches on raw.frame.
ModelResponse parse_response(const RawResponse& raw);

/// Knowledge sentences -> triples. Sentences are split at the longest
/// matching predicate surface form from the manifest; sentences without a
/// match fall back to a first-verb split (leading name run as subject, next
/// word as predicate, remainder as object). Unparseable items are counted.
struct ExtractedTriples {
  std::vector<KnowledgeTriple> triples;
  std::size_t unparseable = 0;
};
ExtractedTriples extract_triples(const std::vector<std::string>& knowledge_items,
                                 const KnowledgeBase& kb, Domain domain = Domain::Culture);

struct ParseGroupStats {
  std::size_t n = 0;
  std::size_t missing_answer = 0;
  std::size_t missing_confidence = 0;
  std::size_t ties = 0;
  std::size_t conflicts = 0;
  std::size_t provider_errors = 0;
};

/// Aggregated parse quality keyed by (model, frame, effective temperature).
std::map<std::string, ParseGroupStats> parse_quality(const std::vector<RawResponse>& raws,
                                                     const std::vector<ModelResponse>& parsed);

void save_parsed(const std::vector<ModelResponse>& parsed, const std::string& path,
                 const std::string& manifest_hash = "");
std::vector<ModelResponse> load_parsed(const std::string& path);

}  // namespace calibench
