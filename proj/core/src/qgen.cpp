#include "calibench/qgen.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "calibench/errors.hpp"
#include "calibench/stats.hpp"
#include "calibench/text.hpp"

namespace calibench {

using nlohmann::json;

std::string predicate_surface(const KnowledgeBase& kb, const std::string& predicate) {
  std::string surface;
  if (kb.has_predicate(predicate) && kb.predicate(predicate).surface) {
    surface = text::collapse_spaces(*kb.predicate(predicate).surface);
  } else {
    surface = text::collapse_spaces(text::replace_all(predicate, "_", " "));
  }
  if (surface.empty()) {
    throw DataError("predicate '" + predicate + "' has no renderable surface form");
  }
  return surface;
}

std::string render_question_text(const KnowledgeBase& kb, const KnowledgeTriple& t) {
  return "Is it true that " + t.subject + " " + predicate_surface(kb, t.predicate) + " " +
         t.object + "?";
}

const std::vector<ReasoningType>& default_question_types() {
  static const std::vector<ReasoningType> kTypes = {
      ReasoningType::Composite, ReasoningType::Inverse, ReasoningType::Negation,
      ReasoningType::Temporal, ReasoningType::Transitive};
  return kTypes;
}

std::vector<BenchmarkQuestion> generate_questions(const KnowledgeBase& kb,
                                                  const Closure& closure) {
  std::vector<BenchmarkQuestion> out;
  out.reserve(closure.facts.size());
  std::set<std::string> used_ids;
  for (const auto& f : closure.facts) {
    BenchmarkQuestion q;
    q.text = render_question_text(kb, f.triple);
    q.truth = f.truth;
    q.domain = f.triple.domain;
    q.type = f.type;
    q.fact = f.triple;
    q.evidence = f.evidence;

    std::string key = to_string(q.domain) + "|" + to_string(q.type) + "|" +
                      (q.truth ? "1" : "0") + "|" + f.triple.subject + "|" +
                      f.triple.predicate + "|" + f.triple.object;
    std::string id = text::hex64(text::fnv1a64(key));
    if (!used_ids.insert(id).second) {
      int n = 1;
      while (!used_ids.insert(id + "-" + std::to_string(n)).second) ++n;
      id += "-" + std::to_string(n);
    }
    q.id = id;
    out.push_back(std::move(q));
  }
  return out;
}

namespace {

std::vector<BenchmarkQuestion> take_shuffled(std::vector<BenchmarkQuestion> pool,
                                             std::size_t n, stats::Rng& rng) {
  rng.shuffle(pool);
  if (pool.size() > n) pool.resize(n);
  return pool;
}

}  // namespace

BalanceResult balance_sample(const std::vector<BenchmarkQuestion>& questions,
                             const BalanceOptions& options) {
  BalanceResult result;
  if (options.quota == 0) throw UsageError("balance_sample: quota must be positive");

  std::map<std::pair<Domain, ReasoningType>, std::vector<BenchmarkQuestion>> cells;
  for (const auto& q : questions) cells[{q.domain, q.type}].push_back(q);
  for (auto& [key, pool] : cells) {
    std::sort(pool.begin(), pool.end(),
              [](const BenchmarkQuestion& a, const BenchmarkQuestion& b) { return a.id < b.id; });
  }

  for (Domain d : options.domains) {
    for (ReasoningType t : options.types) {
      auto it = cells.find({d, t});
      std::vector<BenchmarkQuestion> pool =
          (it == cells.end()) ? std::vector<BenchmarkQuestion>{} : it->second;
      uint64_t cell_seed =
          text::fnv1a64(to_string(d) + "|" + to_string(t), options.seed ^ 0x9e3779b97f4a7c15ull);
      stats::Rng rng(cell_seed);

      std::vector<BenchmarkQuestion> chosen;
      if (options.balance_truth) {
        std::vector<BenchmarkQuestion> yes, no;
        for (auto& q : pool) (q.truth ? yes : no).push_back(q);
        std::size_t want_yes = (options.quota + 1) / 2;
        std::size_t want_no = options.quota / 2;
        auto got_yes = take_shuffled(yes, want_yes, rng);
        auto got_no = take_shuffled(no, want_no, rng);
        // Backfill a short side from the other's leftovers.
        auto backfill = [&](std::vector<BenchmarkQuestion>& from_pool,
                            const std::vector<BenchmarkQuestion>& taken, std::size_t need) {
          std::vector<BenchmarkQuestion> leftovers;
          for (auto& q : from_pool) {
            bool used = std::any_of(taken.begin(), taken.end(),
                                    [&](const BenchmarkQuestion& t2) { return t2.id == q.id; });
            if (!used) leftovers.push_back(q);
          }
          return take_shuffled(leftovers, need, rng);
        };
        if (got_yes.size() < want_yes) {
          auto extra = backfill(no, got_no, want_yes - got_yes.size());
          got_no.insert(got_no.end(), extra.begin(), extra.end());
        }
        if (got_no.size() < want_no) {
          auto extra = backfill(yes, got_yes, want_no - got_no.size());
          got_yes.insert(got_yes.end(), extra.begin(), extra.end());
        }
        chosen = std::move(got_yes);
        chosen.insert(chosen.end(), got_no.begin(), got_no.end());
        if (chosen.size() > options.quota) chosen.resize(options.quota);
      } else {
        chosen = take_shuffled(pool, options.quota, rng);
      }

      if (chosen.size() < options.quota) {
        result.shortfalls.push_back(CellShortfall{d, t, pool.size(), options.quota});
      }
      result.sample.insert(result.sample.end(), chosen.begin(), chosen.end());
    }
  }
  return result;
}

void save_questions(const std::vector<BenchmarkQuestion>& questions, const std::string& path,
                    const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write questions file: " + path);
  if (!manifest_hash.empty()) {
    out << json{{"record", "header"}, {"kind", "questions"}, {"manifest", manifest_hash}}.dump()
        << "\n";
  }
  for (const auto& q : questions) {
    json j{{"id", q.id},
           {"text", q.text},
           {"truth", q.truth},
           {"domain", to_string(q.domain)},
           {"type", to_string(q.type)},
           {"subject", q.fact.subject},
           {"predicate", q.fact.predicate},
           {"object", q.fact.object}};
    json ev = json::array();
    for (const auto& t : q.evidence) {
      ev.push_back(json{{"subject", t.subject},
                        {"predicate", t.predicate},
                        {"object", t.object},
                        {"domain", to_string(t.domain)}});
    }
    j["evidence"] = ev;
    out << j.dump() << "\n";
  }
}

std::vector<BenchmarkQuestion> load_questions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open questions file: " + path);
  std::vector<BenchmarkQuestion> out;
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
    BenchmarkQuestion q;
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.truth = j.at("truth").get<bool>();
    auto d = parse_domain(j.at("domain").get<std::string>());
    auto t = parse_reasoning_type(j.at("type").get<std::string>());
    if (!d || !t) throw DataError(path + ":" + std::to_string(lineno) + ": bad domain or type");
    q.domain = *d;
    q.type = *t;
    q.fact.subject = j.value("subject", "");
    q.fact.predicate = j.value("predicate", "");
    q.fact.object = j.value("object", "");
    q.fact.domain = *d;
    if (j.contains("evidence")) {
      for (const auto& e : j["evidence"]) {
        auto ed = parse_domain(e.at("domain").get<std::string>());
        if (!ed) throw DataError(path + ":" + std::to_string(lineno) + ": bad evidence domain");
        q.evidence.push_back(KnowledgeTriple{e.at("subject").get<std::string>(),
                                             e.at("predicate").get<std::string>(),
                                             e.at("object").get<std::string>(), *ed});
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace calibench
