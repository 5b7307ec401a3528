#include "calibench/kb.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "calibench/errors.hpp"
#include "calibench/text.hpp"

namespace calibench {

using nlohmann::json;

const std::vector<Domain>& all_domains() {
  static const std::vector<Domain> kAll = {
      Domain::Culture, Domain::Geography, Domain::Health,   Domain::History,
      Domain::Math,    Domain::Nature,    Domain::People,   Domain::Religion,
      Domain::Society, Domain::Technology};
  return kAll;
}

std::string to_string(Domain d) {
  switch (d) {
    case Domain::Culture: return "Culture";
    case Domain::Geography: return "Geography";
    case Domain::Health: return "Health";
    case Domain::History: return "History";
    case Domain::Math: return "Math";
    case Domain::Nature: return "Nature";
    case Domain::People: return "People";
    case Domain::Religion: return "Religion";
    case Domain::Society: return "Society";
    case Domain::Technology: return "Technology";
  }
  return "Culture";
}

std::optional<Domain> parse_domain(const std::string& name) {
  std::string key = text::lowercase(text::trim(name));
  for (Domain d : all_domains()) {
    if (text::lowercase(to_string(d)) == key) return d;
  }
  return std::nullopt;
}

std::string normalize_field(const std::string& raw) { return text::collapse_spaces(raw); }

bool KnowledgeBase::add(KnowledgeTriple t) {
  t.subject = normalize_field(t.subject);
  t.predicate = normalize_field(t.predicate);
  t.object = normalize_field(t.object);
  for (std::size_t idx : lookup_indices(t)) {
    if (triples_[idx] == t) return false;
  }
  std::size_t id = triples_.size();
  by_subject_[t.subject].push_back(id);
  by_predicate_[t.predicate].push_back(id);
  by_object_[t.object].push_back(id);
  if (!has_predicate(t.predicate)) {
    register_predicate(PredicateMeta{.name = t.predicate});
  }
  triples_.push_back(std::move(t));
  return true;
}

void KnowledgeBase::register_predicate(PredicateMeta meta) {
  auto it = predicates_.find(meta.name);
  if (it == predicates_.end()) {
    predicates_.emplace(meta.name, std::move(meta));
  } else {
    it->second = std::move(meta);
  }
}

bool KnowledgeBase::has_predicate(const std::string& name) const {
  return predicates_.count(name) > 0;
}

const PredicateMeta& KnowledgeBase::predicate(const std::string& name) const {
  auto it = predicates_.find(name);
  if (it == predicates_.end()) throw DataError("unknown predicate: " + name);
  return it->second;
}

std::vector<std::size_t> KnowledgeBase::lookup_indices(const KnowledgeTriple& t) const {
  auto it = by_subject_.find(t.subject);
  if (it == by_subject_.end()) return {};
  return it->second;
}

std::vector<const KnowledgeTriple*> KnowledgeBase::lookup(
    const std::optional<std::string>& subject, const std::optional<std::string>& predicate,
    const std::optional<std::string>& object) const {
  if (!subject && !predicate && !object) {
    throw UsageError("lookup requires at least one bound field; use dump() for full scans");
  }
  const std::vector<std::size_t>* base = nullptr;
  auto pick = [&](const std::map<std::string, std::vector<std::size_t>>& index,
                  const std::optional<std::string>& key) {
    if (!key) return;
    static const std::vector<std::size_t> kEmpty;
    auto it = index.find(normalize_field(*key));
    const std::vector<std::size_t>* hits = (it == index.end()) ? &kEmpty : &it->second;
    if (base == nullptr || hits->size() < base->size()) base = hits;
  };
  pick(by_subject_, subject);
  pick(by_predicate_, predicate);
  pick(by_object_, object);

  std::vector<const KnowledgeTriple*> out;
  for (std::size_t idx : *base) {
    const KnowledgeTriple& t = triples_[idx];
    if (subject && t.subject != normalize_field(*subject)) continue;
    if (predicate && t.predicate != normalize_field(*predicate)) continue;
    if (object && t.object != normalize_field(*object)) continue;
    out.push_back(&t);
  }
  return out;
}

void load_predicate_manifest(KnowledgeBase& kb, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predicate manifest: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("predicate manifest " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("predicates") || !doc["predicates"].is_array()) {
    throw DataError("predicate manifest " + path + ": expected {\"predicates\": [...]}");
  }
  std::vector<std::string> referenced;
  for (const auto& entry : doc["predicates"]) {
    if (!entry.is_object() || !entry.contains("name")) {
      throw DataError("predicate manifest " + path + ": entry without name");
    }
    PredicateMeta meta;
    meta.name = normalize_field(entry["name"].get<std::string>());
    if (meta.name.empty()) throw DataError("predicate manifest " + path + ": empty name");
    if (entry.contains("negation_form") && !entry["negation_form"].is_null()) {
      meta.negation_form = normalize_field(entry["negation_form"].get<std::string>());
      referenced.push_back(*meta.negation_form);
    }
    if (entry.contains("inverse_form") && !entry["inverse_form"].is_null()) {
      meta.inverse_form = normalize_field(entry["inverse_form"].get<std::string>());
      referenced.push_back(*meta.inverse_form);
    }
    if (entry.contains("symmetric")) meta.symmetric = entry["symmetric"].get<bool>();
    if (entry.contains("transitive")) meta.transitive = entry["transitive"].get<bool>();
    if (entry.contains("surface") && !entry["surface"].is_null()) {
      meta.surface = entry["surface"].get<std::string>();
    }
    kb.register_predicate(std::move(meta));
  }
  for (const auto& name : referenced) {
    if (!kb.has_predicate(name)) kb.register_predicate(PredicateMeta{.name = name});
  }
}

ImportReport import_triples(KnowledgeBase& kb, std::istream& in,
                            std::optional<Domain> default_domain) {
  ImportReport report;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = text::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    ++report.lines_read;

    std::vector<std::string> fields = text::split(stripped, '|');
    for (auto& f : fields) f = normalize_field(f);
    if (fields.size() < 3 || fields.size() > 4) {
      report.rejected.push_back({lineno, "expected 3 or 4 pipe-separated fields"});
      continue;
    }
    if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      report.rejected.push_back({lineno, "empty field"});
      continue;
    }

    Domain domain;
    if (fields.size() == 4) {
      if (fields[3].empty()) {
        report.rejected.push_back({lineno, "empty domain field"});
        continue;
      }
      auto parsed = parse_domain(fields[3]);
      if (!parsed) {
        throw DataError("line " + std::to_string(lineno) + ": unknown domain tag '" +
                        fields[3] + "'");
      }
      domain = *parsed;
    } else {
      if (!default_domain) {
        throw DataError("line " + std::to_string(lineno) +
                        ": record has no domain and no default domain was given");
      }
      domain = *default_domain;
    }

    bool fresh_predicate = !kb.has_predicate(fields[1]);
    KnowledgeTriple t{fields[0], fields[1], fields[2], domain};
    if (kb.add(std::move(t))) {
      ++report.kept;
      if (fresh_predicate) report.auto_registered.push_back(fields[1]);
    } else {
      ++report.duplicates;
    }
  }
  return report;
}

ImportReport import_triples_file(KnowledgeBase& kb, const std::string& path,
                                 std::optional<Domain> default_domain) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triple file: " + path);
  return import_triples(kb, in, default_domain);
}

namespace {

json meta_to_json(const PredicateMeta& m) {
  json j{{"name", m.name}};
  if (m.negation_form) j["negation_form"] = *m.negation_form;
  if (m.inverse_form) j["inverse_form"] = *m.inverse_form;
  if (m.symmetric) j["symmetric"] = true;
  if (m.transitive) j["transitive"] = true;
  if (m.surface) j["surface"] = *m.surface;
  return j;
}

}  // namespace

void save_kb(const KnowledgeBase& kb, const std::string& path) {
  json doc;
  doc["predicates"] = json::array();
  for (const auto& [name, meta] : kb.predicates()) doc["predicates"].push_back(meta_to_json(meta));
  doc["triples"] = json::array();
  for (const auto& t : kb.dump()) {
    doc["triples"].push_back(json{{"subject", t.subject},
                                  {"predicate", t.predicate},
                                  {"object", t.object},
                                  {"domain", to_string(t.domain)}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write kb file: " + path);
  out << doc.dump(2) << "\n";
}

KnowledgeBase load_kb(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open kb file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("kb file " + path + ": " + e.what());
  }
  KnowledgeBase kb;
  if (doc.contains("predicates")) {
    for (const auto& entry : doc["predicates"]) {
      PredicateMeta meta;
      meta.name = entry.at("name").get<std::string>();
      if (entry.contains("negation_form")) meta.negation_form = entry["negation_form"].get<std::string>();
      if (entry.contains("inverse_form")) meta.inverse_form = entry["inverse_form"].get<std::string>();
      if (entry.contains("symmetric")) meta.symmetric = entry["symmetric"].get<bool>();
      if (entry.contains("transitive")) meta.transitive = entry["transitive"].get<bool>();
      if (entry.contains("surface")) meta.surface = entry["surface"].get<std::string>();
      kb.register_predicate(std::move(meta));
    }
  }
  if (doc.contains("triples")) {
    for (const auto& entry : doc["triples"]) {
      auto domain = parse_domain(entry.at("domain").get<std::string>());
      if (!domain) throw DataError("kb file " + path + ": unknown domain tag");
      kb.add(KnowledgeTriple{entry.at("subject").get<std::string>(),
                             entry.at("predicate").get<std::string>(),
                             entry.at("object").get<std::string>(), *domain});
    }
  }
  return kb;
}

}  // namespace calibench
