#pragma once

/// Similarity between the evidence triples behind a question and the triples
/// a model cited in its answer. Two fact scores (an average that penalizes
/// extraneous output and a per-evidence maximum that rewards best matches)
/// plus a reasoning score built on predicate similarity.

#include <optional>
#include <string>
#include <vector>

#include "calibench/kb.hpp"
#include "calibench/parser.hpp"
#include "calibench/qgen.hpp"

namespace calibench {

enum class SimFunction { JaccardTokens, NormalizedOverlap };

std::string to_string(SimFunction f);
std::optional<SimFunction> parse_sim_function(const std::string& name);

struct SimilarityConfig {
  /// Two strings count as "similar" when text_similarity reaches this value.
  double token_match_threshold = 0.5;
  SimFunction sim_function = SimFunction::JaccardTokens;
};

/// Token-set similarity over lowercase word tokens. Jaccard divides the
/// intersection by the union; normalized overlap divides by the smaller set.
/// Two empty strings are identical (1); one empty string matches nothing (0).
double text_similarity(const std::string& a, const std::string& b,
                       const SimilarityConfig& cfg = {});

/// Subject-matching rule: evidence subjects of 1-2 words need one shared
/// word in the response subject, longer subjects need two.
bool subject_matches(const std::string& evidence_subject, const std::string& response_subject);

struct FactScores {
  std::optional<double> avg;
  std::optional<double> max;
  std::string reason;  ///< set when a score is missing
};

/// Fact similarity.
///
/// Average variant: response triples are greedily paired with
/// subject-matching evidence triples by descending object similarity (each
/// side used once); unpaired responses that still subject-match somewhere
/// contribute their best object similarity against those evidence objects;
/// responses matching no subject contribute 0. The score divides by the
/// response count, so extraneous output dilutes it. Missing when no response
/// subject-matches any evidence.
///
/// Maximum variant: each evidence triple keeps its best object similarity
/// over subject-matching responses (0 when none match); the score averages
/// over all evidence. Missing when no evidence is matched at all.
///
/// Both are invariant under reordering of either triple list.
/// Throws UsageError when evidence is empty.
FactScores fact_similarity(const std::vector<KnowledgeTriple>& evidence,
                           const std::vector<KnowledgeTriple>& response,
                           const SimilarityConfig& cfg = {});

struct ReasoningScore {
  std::optional<double> score;
  std::string reason;
};

/// Reasoning similarity: per evidence triple, candidate pairs are
/// subject-matching responses; a pair is kept when the predicates are
/// similar, or the predicates are dissimilar but the objects are similar —
/// in both cases the pair scores the predicate similarity. Each evidence
/// triple keeps its best surviving pair; evidence with no surviving pair is
/// excluded. The final score averages the retained evidence scores and is
/// missing when everything was excluded.
/// Throws UsageError when evidence is empty.
ReasoningScore reasoning_similarity(const std::vector<KnowledgeTriple>& evidence,
                                    const std::vector<KnowledgeTriple>& response,
                                    const SimilarityConfig& cfg = {});

struct SimilarityScores {
  std::optional<double> fact_avg;
  std::optional<double> fact_max;
  std::optional<double> reasoning;
  std::string reason;
};

SimilarityScores score_similarity(const std::vector<KnowledgeTriple>& evidence,
                                  const std::vector<KnowledgeTriple>& response,
                                  const SimilarityConfig& cfg = {});

struct QuestionSimilarity {
  std::string question_id;
  std::string model;
  SimilarityScores scores;
  std::size_t response_triples = 0;
  std::size_t unparseable_items = 0;
};

/// Extracts response triples from each parsed answer's knowledge items and
/// scores them against the question's evidence. Responses for unknown
/// question ids raise DataError; baseline responses only (frame responses
/// carry no knowledge items) — others are skipped.
std::vector<QuestionSimilarity> corpus_similarity(
    const std::vector<BenchmarkQuestion>& questions, const std::vector<ModelResponse>& parsed,
    const KnowledgeBase& kb, const SimilarityConfig& cfg = {});

void save_similarity_csv(const std::vector<QuestionSimilarity>& rows, const std::string& path,
                         const std::string& manifest_hash = "");

}  // namespace calibench
