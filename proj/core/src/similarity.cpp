#include "calibench/similarity.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

#include "calibench/errors.hpp"
#include "calibench/text.hpp"

namespace calibench {

std::string to_string(SimFunction f) {
  return f == SimFunction::JaccardTokens ? "jaccard_tokens" : "normalized_overlap";
}

std::optional<SimFunction> parse_sim_function(const std::string& name) {
  if (name == "jaccard_tokens") return SimFunction::JaccardTokens;
  if (name == "normalized_overlap") return SimFunction::NormalizedOverlap;
  return std::nullopt;
}

namespace {

void check_config(const SimilarityConfig& cfg) {
  if (cfg.token_match_threshold < 0.0 || cfg.token_match_threshold > 1.0) {
    throw UsageError("similarity: token_match_threshold must lie in [0,1]");
  }
}

std::set<std::string> token_set(const std::string& s) {
  auto tokens = text::word_tokens(s);
  return {tokens.begin(), tokens.end()};
}

double set_similarity(const std::set<std::string>& a, const std::set<std::string>& b,
                      SimFunction f) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  if (f == SimFunction::JaccardTokens) {
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
  }
  return static_cast<double>(inter) / static_cast<double>(std::min(a.size(), b.size()));
}

/// Canonical copy so scores are invariant under input reordering.
std::vector<KnowledgeTriple> canonical(std::vector<KnowledgeTriple> ts) {
  std::sort(ts.begin(), ts.end());
  return ts;
}

}  // namespace

double text_similarity(const std::string& a, const std::string& b, const SimilarityConfig& cfg) {
  check_config(cfg);
  return set_similarity(token_set(a), token_set(b), cfg.sim_function);
}

bool subject_matches(const std::string& evidence_subject, const std::string& response_subject) {
  auto ev = text::word_tokens(evidence_subject);
  std::set<std::string> ev_set(ev.begin(), ev.end());
  std::set<std::string> re = token_set(response_subject);
  std::size_t shared = 0;
  for (const auto& t : ev_set) shared += re.count(t);
  return ev.size() <= 2 ? shared >= 1 : shared >= 2;
}

FactScores fact_similarity(const std::vector<KnowledgeTriple>& evidence_in,
                           const std::vector<KnowledgeTriple>& response_in,
                           const SimilarityConfig& cfg) {
  check_config(cfg);
  if (evidence_in.empty()) throw UsageError("fact_similarity: evidence must be non-empty");

  FactScores out;
  if (response_in.empty()) {
    out.reason = "no response triples";
    return out;
  }
  auto evidence = canonical(evidence_in);
  auto response = canonical(response_in);

  // matches[r] = evidence indices whose subject matches response r.
  std::vector<std::vector<std::size_t>> matches(response.size());
  std::vector<std::vector<std::size_t>> matched_by(evidence.size());
  for (std::size_t r = 0; r < response.size(); ++r) {
    for (std::size_t e = 0; e < evidence.size(); ++e) {
      if (subject_matches(evidence[e].subject, response[r].subject)) {
        matches[r].push_back(e);
        matched_by[e].push_back(r);
      }
    }
  }

  auto object_sim = [&](std::size_t e, std::size_t r) {
    return set_similarity(token_set(evidence[e].object), token_set(response[r].object),
                          cfg.sim_function);
  };

  // Average variant: greedy one-to-one pairing by descending object
  // similarity, then leftovers keep their best score, unmatched score 0.
  struct Pair {
    double score;
    std::size_t e, r;
  };
  std::vector<Pair> pairs;
  for (std::size_t r = 0; r < response.size(); ++r) {
    for (std::size_t e : matches[r]) pairs.push_back({object_sim(e, r), e, r});
  }
  bool any_response_matched =
      std::any_of(matches.begin(), matches.end(), [](const auto& m) { return !m.empty(); });
  if (!any_response_matched) {
    out.reason = "no subject matches";
    return out;
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.e != b.e) return a.e < b.e;
    return a.r < b.r;
  });
  std::vector<bool> e_used(evidence.size(), false), r_used(response.size(), false);
  double sum = 0.0;
  for (const auto& p : pairs) {
    if (e_used[p.e] || r_used[p.r]) continue;
    e_used[p.e] = true;
    r_used[p.r] = true;
    sum += p.score;
  }
  for (std::size_t r = 0; r < response.size(); ++r) {
    if (r_used[r] || matches[r].empty()) continue;  // unmatched responses add 0
    double best = 0.0;
    for (std::size_t e : matches[r]) best = std::max(best, object_sim(e, r));
    sum += best;
  }
  out.avg = sum / static_cast<double>(response.size());

  // Maximum variant: per-evidence best over matching responses, 0 when none.
  double max_sum = 0.0;
  bool any_evidence_matched = false;
  for (std::size_t e = 0; e < evidence.size(); ++e) {
    double best = 0.0;
    for (std::size_t r : matched_by[e]) {
      any_evidence_matched = true;
      best = std::max(best, object_sim(e, r));
    }
    max_sum += best;
  }
  if (any_evidence_matched) {
    out.max = max_sum / static_cast<double>(evidence.size());
  } else if (out.reason.empty()) {
    out.reason = "no evidence matched";
  }
  return out;
}

ReasoningScore reasoning_similarity(const std::vector<KnowledgeTriple>& evidence_in,
                                    const std::vector<KnowledgeTriple>& response_in,
                                    const SimilarityConfig& cfg) {
  check_config(cfg);
  if (evidence_in.empty()) throw UsageError("reasoning_similarity: evidence must be non-empty");

  ReasoningScore out;
  if (response_in.empty()) {
    out.reason = "no response triples";
    return out;
  }
  auto evidence = canonical(evidence_in);
  auto response = canonical(response_in);

  double sum = 0.0;
  std::size_t kept = 0;
  for (const auto& e : evidence) {
    auto e_pred = token_set(e.predicate);
    auto e_obj = token_set(e.object);
    double best = -1.0;
    for (const auto& r : response) {
      if (!subject_matches(e.subject, r.subject)) continue;
      double p = set_similarity(e_pred, token_set(r.predicate), cfg.sim_function);
      double o = set_similarity(e_obj, token_set(r.object), cfg.sim_function);
      bool valid = p >= cfg.token_match_threshold || o >= cfg.token_match_threshold;
      if (valid) best = std::max(best, p);
    }
    if (best >= 0.0) {
      sum += best;
      ++kept;
    }
  }
  if (kept == 0) {
    out.reason = "all evidence excluded";
    return out;
  }
  out.score = sum / static_cast<double>(kept);
  return out;
}

SimilarityScores score_similarity(const std::vector<KnowledgeTriple>& evidence,
                                  const std::vector<KnowledgeTriple>& response,
                                  const SimilarityConfig& cfg) {
  SimilarityScores out;
  FactScores f = fact_similarity(evidence, response, cfg);
  ReasoningScore r = reasoning_similarity(evidence, response, cfg);
  out.fact_avg = f.avg;
  out.fact_max = f.max;
  out.reasoning = r.score;
  out.reason = !f.reason.empty() ? f.reason : r.reason;
  return out;
}

std::vector<QuestionSimilarity> corpus_similarity(const std::vector<BenchmarkQuestion>& questions,
                                                  const std::vector<ModelResponse>& parsed,
                                                  const KnowledgeBase& kb,
                                                  const SimilarityConfig& cfg) {
  std::unordered_map<std::string, const BenchmarkQuestion*> by_id;
  for (const auto& q : questions) by_id[q.id] = &q;

  std::vector<QuestionSimilarity> out;
  for (const auto& r : parsed) {
    if (r.frame != Frame::Baseline) continue;  // frames elicit no knowledge items
    auto it = by_id.find(r.question_id);
    if (it == by_id.end()) {
      throw DataError("corpus_similarity: response references unknown question id " +
                      r.question_id);
    }
    const BenchmarkQuestion& q = *it->second;
    QuestionSimilarity row;
    row.question_id = r.question_id;
    row.model = r.model;
    ExtractedTriples extracted = extract_triples(r.knowledge_items, kb, q.domain);
    row.response_triples = extracted.triples.size();
    row.unparseable_items = extracted.unparseable;
    if (q.evidence.empty()) {
      row.scores.reason = "question has no evidence triples";
    } else {
      row.scores = score_similarity(q.evidence, extracted.triples, cfg);
    }
    out.push_back(std::move(row));
  }
  return out;
}

void save_similarity_csv(const std::vector<QuestionSimilarity>& rows, const std::string& path,
                         const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write similarity file: " + path);
  if (!manifest_hash.empty()) out << "# manifest: " << manifest_hash << "\n";
  out << "question_id,model,fact_avg,fact_max,reasoning,response_triples,unparseable,reason\n";
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    std::string reason = r.scores.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out << r.question_id << "," << r.model << "," << cell(r.scores.fact_avg) << ","
        << cell(r.scores.fact_max) << "," << cell(r.scores.reasoning) << ","
        << r.response_triples << "," << r.unparseable_items << "," << reason << "\n";
  }
}

}  // namespace calibench
