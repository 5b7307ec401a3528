#include "calibench/inference.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "calibench/errors.hpp"

namespace calibench {

using nlohmann::json;

std::string to_string(ReasoningType t) {
  switch (t) {
    case ReasoningType::Negation: return "Negation";
    case ReasoningType::Symmetric: return "Symmetric";
    case ReasoningType::Inverse: return "Inverse";
    case ReasoningType::Transitive: return "Transitive";
    case ReasoningType::Composite: return "Composite";
    case ReasoningType::Temporal: return "Temporal";
  }
  return "Temporal";
}

std::optional<ReasoningType> parse_reasoning_type(const std::string& name) {
  for (ReasoningType t : {ReasoningType::Negation, ReasoningType::Symmetric,
                          ReasoningType::Inverse, ReasoningType::Transitive,
                          ReasoningType::Composite, ReasoningType::Temporal}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::vector<std::string> DerivedFact::rule_names() const {
  std::vector<std::string> out;
  out.reserve(provenance.size());
  for (const auto& step : provenance) out.push_back(step.rule);
  return out;
}

DerivedFact base_fact(const KnowledgeTriple& t) {
  DerivedFact f;
  f.triple = t;
  f.truth = true;
  f.type = ReasoningType::Temporal;  // unused for premises; depth 0 marks base
  f.depth = 0;
  f.evidence = {t};
  return f;
}

namespace {

ReasoningType type_for(const std::vector<RuleStep>& provenance) {
  if (provenance.size() >= 2) return ReasoningType::Composite;
  const std::string& rule = provenance.front().rule;
  if (rule == "negation") return ReasoningType::Negation;
  if (rule == "symmetric") return ReasoningType::Symmetric;
  if (rule == "inverse") return ReasoningType::Inverse;
  return ReasoningType::Transitive;
}

void append_evidence(std::vector<KnowledgeTriple>& into,
                     const std::vector<KnowledgeTriple>& from) {
  for (const auto& t : from) {
    if (std::find(into.begin(), into.end(), t) == into.end()) into.push_back(t);
  }
}

DerivedFact make_derived(KnowledgeTriple triple, bool truth,
                         const std::vector<RuleStep>& premise_prov,
                         std::vector<KnowledgeTriple> evidence, RuleStep step) {
  DerivedFact out;
  out.triple = std::move(triple);
  out.truth = truth;
  out.provenance = premise_prov;
  out.provenance.push_back(std::move(step));
  out.depth = static_cast<int>(out.provenance.size());
  out.type = type_for(out.provenance);
  out.evidence = std::move(evidence);
  return out;
}

}  // namespace

std::optional<DerivedFact> apply_negation(const KnowledgeBase& kb, const DerivedFact& f) {
  if (!f.truth || !kb.has_predicate(f.triple.predicate)) return std::nullopt;
  const auto& meta = kb.predicate(f.triple.predicate);
  if (!meta.negation_form) return std::nullopt;
  KnowledgeTriple t{f.triple.subject, *meta.negation_form, f.triple.object, f.triple.domain};
  return make_derived(std::move(t), false, f.provenance, f.evidence,
                      RuleStep{"negation", {f.triple}});
}

std::optional<DerivedFact> apply_symmetric(const KnowledgeBase& kb, const DerivedFact& f) {
  if (!f.truth || !kb.has_predicate(f.triple.predicate)) return std::nullopt;
  const auto& meta = kb.predicate(f.triple.predicate);
  if (!meta.symmetric) return std::nullopt;
  KnowledgeTriple t{f.triple.object, f.triple.predicate, f.triple.subject, f.triple.domain};
  return make_derived(std::move(t), true, f.provenance, f.evidence,
                      RuleStep{"symmetric", {f.triple}});
}

std::optional<DerivedFact> apply_inverse(const KnowledgeBase& kb, const DerivedFact& f) {
  if (!f.truth || !kb.has_predicate(f.triple.predicate)) return std::nullopt;
  const auto& meta = kb.predicate(f.triple.predicate);
  if (!meta.inverse_form) return std::nullopt;
  KnowledgeTriple t{f.triple.object, *meta.inverse_form, f.triple.subject, f.triple.domain};
  return make_derived(std::move(t), true, f.provenance, f.evidence,
                      RuleStep{"inverse", {f.triple}});
}

std::optional<DerivedFact> apply_transitive(const KnowledgeBase& kb, const DerivedFact& lhs,
                                            const DerivedFact& rhs) {
  if (!lhs.truth || !rhs.truth) return std::nullopt;
  if (lhs.triple.predicate != rhs.triple.predicate) return std::nullopt;
  if (!kb.has_predicate(lhs.triple.predicate)) return std::nullopt;
  const auto& meta = kb.predicate(lhs.triple.predicate);
  if (!meta.transitive) return std::nullopt;
  if (lhs.triple.object != rhs.triple.subject) return std::nullopt;
  KnowledgeTriple t{lhs.triple.subject, lhs.triple.predicate, rhs.triple.object,
                    lhs.triple.domain};
  std::vector<RuleStep> prov = lhs.provenance;
  prov.insert(prov.end(), rhs.provenance.begin(), rhs.provenance.end());
  std::vector<KnowledgeTriple> evidence = lhs.evidence;
  append_evidence(evidence, rhs.evidence);
  return make_derived(std::move(t), true, prov, std::move(evidence),
                      RuleStep{"transitive", {lhs.triple, rhs.triple}});
}

namespace {

using FactKey = std::tuple<std::string, std::string, std::string, int, bool>;

FactKey key_of(const KnowledgeTriple& t, bool truth) {
  return {t.subject, t.predicate, t.object, static_cast<int>(t.domain), truth};
}

/// Reports whether any derivable (triple, truth) key is missing from
/// `known`. Runs an uncapped sweep in increasing derivation-cost order and
/// stops at the first missing key, so the truncated flag stays honest even
/// when the cheapest missing fact lives several levels past the cap — a
/// transitive join of premises at depths d1 and d2 lands at d1 + d2 + 1 and
/// can leapfrog levels that produced nothing.
bool any_fact_beyond(const KnowledgeBase& kb, const std::map<FactKey, std::size_t>& known,
                     const std::vector<DerivedFact>& seeds) {
  struct Lean {
    KnowledgeTriple triple;
    bool truth = true;
  };
  std::vector<Lean> pool;
  std::map<FactKey, int> best;  // tentative minimal cost per key
  std::set<FactKey> done;
  using Entry = std::pair<int, std::size_t>;  // (cost, pool index), min-heap
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;

  auto push = [&](KnowledgeTriple t, bool truth, int cost) {
    FactKey k = key_of(t, truth);
    if (done.count(k) != 0) return;
    auto it = best.find(k);
    if (it != best.end() && it->second <= cost) return;
    if (it == best.end()) {
      best.emplace(std::move(k), cost);
    } else {
      it->second = cost;
    }
    pool.push_back(Lean{std::move(t), truth});
    queue.emplace(cost, pool.size() - 1);
  };
  for (const auto& f : seeds) push(f.triple, true, 0);

  // Finalized true facts, indexed both ways for the transitive join.
  std::vector<Lean> final_true;
  std::vector<int> final_cost;
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> by_pred_subject;
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> by_pred_object;

  while (!queue.empty()) {
    auto [cost, id] = queue.top();
    queue.pop();
    const Lean fact = pool[id];  // copy: pool may reallocate while we push
    FactKey k = key_of(fact.triple, fact.truth);
    if (!done.insert(k).second) continue;  // stale duplicate entry
    if (known.find(k) == known.end()) return true;
    if (!fact.truth) continue;  // false facts are terminal, never premises

    const auto& t = fact.triple;
    if (kb.has_predicate(t.predicate)) {
      const PredicateMeta& meta = kb.predicate(t.predicate);
      if (meta.negation_form) {
        push({t.subject, *meta.negation_form, t.object, t.domain}, false, cost + 1);
      }
      if (meta.symmetric) {
        push({t.object, t.predicate, t.subject, t.domain}, true, cost + 1);
      }
      if (meta.inverse_form) {
        push({t.object, *meta.inverse_form, t.subject, t.domain}, true, cost + 1);
      }
      if (meta.transitive) {
        auto ps = by_pred_subject.find(t.predicate);
        if (ps != by_pred_subject.end()) {
          auto rhs_ids = ps->second.find(t.object);
          if (rhs_ids != ps->second.end()) {
            for (std::size_t ri : rhs_ids->second) {
              push({t.subject, t.predicate, final_true[ri].triple.object, t.domain}, true,
                   cost + final_cost[ri] + 1);
            }
          }
        }
        auto po = by_pred_object.find(t.predicate);
        if (po != by_pred_object.end()) {
          auto lhs_ids = po->second.find(t.subject);
          if (lhs_ids != po->second.end()) {
            for (std::size_t li : lhs_ids->second) {
              push({final_true[li].triple.subject, t.predicate, t.object,
                    final_true[li].triple.domain},
                   true, final_cost[li] + cost + 1);
            }
          }
        }
      }
    }

    std::size_t idx = final_true.size();
    final_true.push_back(fact);
    final_cost.push_back(cost);
    by_pred_subject[t.predicate][t.subject].push_back(idx);
    by_pred_object[t.predicate][t.object].push_back(idx);
  }
  return false;
}

bool rule_seq_less(const DerivedFact& a, const DerivedFact& b) {
  return a.rule_names() < b.rule_names();
}

/// True premises indexed per depth for the transitive join.
struct TrueLevel {
  std::vector<DerivedFact> facts;
  // predicate -> subject -> fact indices; predicate -> facts (for lhs scan)
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> by_pred_subject;
  std::map<std::string, std::vector<std::size_t>> by_pred;

  void add(const DerivedFact& f) {
    std::size_t id = facts.size();
    facts.push_back(f);
    by_pred_subject[f.triple.predicate][f.triple.subject].push_back(id);
    by_pred[f.triple.predicate].push_back(id);
  }
};

}  // namespace

Closure close(const KnowledgeBase& kb, const ClosureOptions& options,
              const std::vector<DerivedFact>& imported) {
  Closure out;
  out.report.base_count = kb.size();

  std::map<FactKey, std::size_t> known;  // key -> index into out.facts; base facts map to npos
  constexpr std::size_t kBase = static_cast<std::size_t>(-1);

  std::vector<TrueLevel> levels(1);
  for (const auto& t : kb.dump()) {
    known.emplace(key_of(t, true), kBase);
    levels[0].add(base_fact(t));
  }
  for (const auto& f : imported) {
    auto [it, fresh] = known.emplace(key_of(f.triple, f.truth), out.facts.size());
    if (!fresh) continue;
    out.facts.push_back(f);
    if (f.truth) {
      // Imported facts act as depth-0 premises; rule chains built on them
      // start a fresh step list (their triple is still named as the input).
      DerivedFact premise;
      premise.triple = f.triple;
      premise.truth = true;
      premise.depth = 0;
      premise.evidence = {f.triple};
      levels[0].add(premise);
    }
  }

  auto emit_candidates = [&](int depth, auto&& sink) {
    // Unary rules over true facts whose stored depth is depth-1.
    if (depth - 1 < static_cast<int>(levels.size())) {
      for (const auto& f : levels[static_cast<std::size_t>(depth - 1)].facts) {
        if (auto c = apply_negation(kb, f)) {
          if (sink(*c)) return true;
        }
        if (auto c = apply_symmetric(kb, f)) {
          if (sink(*c)) return true;
        }
        if (auto c = apply_inverse(kb, f)) {
          if (sink(*c)) return true;
        }
      }
    }
    // Transitive joins over premise depth pairs summing to depth-1.
    for (int d1 = 0; d1 <= depth - 1; ++d1) {
      int d2 = depth - 1 - d1;
      if (d1 >= static_cast<int>(levels.size()) || d2 >= static_cast<int>(levels.size()))
        continue;
      const TrueLevel& lhs_level = levels[static_cast<std::size_t>(d1)];
      const TrueLevel& rhs_level = levels[static_cast<std::size_t>(d2)];
      for (const auto& [pred, lhs_ids] : lhs_level.by_pred) {
        if (!kb.has_predicate(pred) || !kb.predicate(pred).transitive) continue;
        auto rhs_pred = rhs_level.by_pred_subject.find(pred);
        if (rhs_pred == rhs_level.by_pred_subject.end()) continue;
        for (std::size_t li : lhs_ids) {
          const DerivedFact& lhs = lhs_level.facts[li];
          auto rhs_ids = rhs_pred->second.find(lhs.triple.object);
          if (rhs_ids == rhs_pred->second.end()) continue;
          for (std::size_t ri : rhs_ids->second) {
            if (auto c = apply_transitive(kb, lhs, rhs_level.facts[ri])) {
              if (sink(*c)) return true;
            }
          }
        }
      }
    }
    return false;
  };

  // Breadth-first over total rule steps. A depth that stores nothing is not
  // a fixed point: joins combine premise depths d1 + d2 + 1 and can leapfrog
  // empty levels, so the loop keeps going while any candidate is still
  // constructible — unary rules need a premise at depth-1, joins a premise
  // pair summing to depth-1, both impossible past 2 * deepest + 1.
  int deepest = 0;
  for (int depth = 1; depth <= options.max_composite_depth; ++depth) {
    if (depth > 2 * deepest + 1) break;
    if (options.max_iterations > 0 && depth > options.max_iterations) break;

    std::map<FactKey, DerivedFact> batch;
    emit_candidates(depth, [&](const DerivedFact& c) {
      FactKey k = key_of(c.triple, c.truth);
      if (known.find(k) != known.end()) return false;
      auto it = batch.find(k);
      if (it == batch.end()) {
        batch.emplace(std::move(k), c);
      } else if (rule_seq_less(c, it->second)) {
        it->second = c;
      }
      return false;
    });
    if (batch.empty()) continue;

    out.report.iterations = static_cast<std::size_t>(depth);
    deepest = depth;
    levels.resize(static_cast<std::size_t>(depth) + 1);
    for (auto& [k, fact] : batch) {
      known.emplace(k, out.facts.size());
      if (fact.truth) levels[static_cast<std::size_t>(depth)].add(fact);
      out.facts.push_back(std::move(fact));
    }
  }
  out.report.truncated = any_fact_beyond(kb, known, levels[0].facts);

  std::sort(out.facts.begin(), out.facts.end(), [](const DerivedFact& a, const DerivedFact& b) {
    return std::tie(a.depth, a.triple.subject, a.triple.predicate, a.triple.object,
                    a.triple.domain, a.truth) <
           std::tie(b.depth, b.triple.subject, b.triple.predicate, b.triple.object,
                    b.triple.domain, b.truth);
  });
  for (const auto& f : out.facts) ++out.report.counts[f.type];
  return out;
}

namespace {

json triple_to_json(const KnowledgeTriple& t) {
  return json{{"subject", t.subject},
              {"predicate", t.predicate},
              {"object", t.object},
              {"domain", to_string(t.domain)}};
}

KnowledgeTriple triple_from_json(const json& j) {
  auto domain = parse_domain(j.at("domain").get<std::string>());
  if (!domain) throw DataError("unknown domain tag in fact record");
  return KnowledgeTriple{j.at("subject").get<std::string>(),
                         j.at("predicate").get<std::string>(),
                         j.at("object").get<std::string>(), *domain};
}

}  // namespace

void save_closure(const Closure& closure, const std::string& path,
                  const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write closure file: " + path);
  if (!manifest_hash.empty()) {
    out << json{{"record", "header"}, {"kind", "closure"}, {"manifest", manifest_hash}}.dump()
        << "\n";
  }
  for (const auto& f : closure.facts) {
    json j = triple_to_json(f.triple);
    j["truth"] = f.truth;
    j["type"] = to_string(f.type);
    j["depth"] = f.depth;
    json prov = json::array();
    for (const auto& step : f.provenance) {
      json inputs = json::array();
      for (const auto& t : step.inputs) inputs.push_back(triple_to_json(t));
      prov.push_back(json{{"rule", step.rule}, {"inputs", inputs}});
    }
    j["provenance"] = prov;
    json ev = json::array();
    for (const auto& t : f.evidence) ev.push_back(triple_to_json(t));
    j["evidence"] = ev;
    out << j.dump() << "\n";
  }
}

std::vector<DerivedFact> load_derived_facts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open facts file: " + path);
  std::vector<DerivedFact> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("record") && j["record"] == "header") continue;
    DerivedFact f;
    f.triple = triple_from_json(j);
    f.truth = j.value("truth", true);
    if (j.contains("type")) {
      auto t = parse_reasoning_type(j["type"].get<std::string>());
      if (!t) throw DataError(path + ":" + std::to_string(lineno) + ": unknown reasoning type");
      f.type = *t;
    } else {
      f.type = ReasoningType::Temporal;
    }
    f.depth = j.value("depth", 0);
    if (j.contains("evidence")) {
      for (const auto& t : j["evidence"]) f.evidence.push_back(triple_from_json(t));
    } else {
      f.evidence = {f.triple};
    }
    if (j.contains("provenance")) {
      for (const auto& s : j["provenance"]) {
        RuleStep step;
        step.rule = s.at("rule").get<std::string>();
        for (const auto& t : s.at("inputs")) step.inputs.push_back(triple_from_json(t));
        f.provenance.push_back(std::move(step));
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace calibench
