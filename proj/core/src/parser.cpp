#include "calibench/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "calibench/errors.hpp"
#include "calibench/text.hpp"

namespace calibench {

using nlohmann::json;

std::string to_string(Answer a) {
  switch (a) {
    case Answer::Yes: return "yes";
    case Answer::No: return "no";
    case Answer::Missing: return "missing";
  }
  return "missing";
}

std::optional<Answer> parse_answer(const std::string& name) {
  if (name == "yes") return Answer::Yes;
  if (name == "no") return Answer::No;
  if (name == "missing") return Answer::Missing;
  return std::nullopt;
}

bool ModelResponse::has_flag(const std::string& name) const {
  return std::find(flags.begin(), flags.end(), name) != flags.end();
}

namespace {

constexpr const char* kAnswerAnchor = "the answer to the question is";

bool is_filler(char c) {
  return c == ' ' || c == '\t' || c == ':' || c == '"' || c == '\'' || c == '*' || c == '`';
}

std::optional<Answer> find_answer_declaration(const std::string& lower) {
  size_t pos = 0;
  while ((pos = lower.find(kAnswerAnchor, pos)) != std::string::npos) {
    size_t p = pos + std::strlen(kAnswerAnchor);
    while (p < lower.size() && is_filler(lower[p])) ++p;
    auto word_ends = [&](size_t end) {
      return end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
    };
    if (lower.compare(p, 3, "yes") == 0 && word_ends(p + 3)) return Answer::Yes;
    if (lower.compare(p, 2, "no") == 0 && word_ends(p + 2)) return Answer::No;
    pos = p;
  }
  return std::nullopt;
}

struct PercentHit {
  double probability = 0.0;
  bool out_of_range = false;
};

bool has_cue_word(const std::string& lower) {
  return lower.find("probability") != std::string::npos ||
         lower.find("confiden") != std::string::npos ||
         lower.find("estimate") != std::string::npos ||
         lower.find("chance") != std::string::npos ||
         lower.find("likelihood") != std::string::npos ||
         lower.find("percent") != std::string::npos;
}

/// First usable probability in the segment. Numbers marked with "%" or the
/// word "percent" always qualify; bare numbers only with a cue word nearby.
std::optional<PercentHit> first_percent(const std::string& segment) {
  std::string lower = text::lowercase(segment);
  bool cue = has_cue_word(lower);
  size_t i = 0;
  while (i < lower.size()) {
    if (!std::isdigit(static_cast<unsigned char>(lower[i]))) {
      ++i;
      continue;
    }
    if (i > 0 && (std::isalnum(static_cast<unsigned char>(lower[i - 1])) || lower[i - 1] == '.')) {
      while (i < lower.size() && std::isalnum(static_cast<unsigned char>(lower[i]))) ++i;
      continue;
    }
    size_t start = i;
    while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i]))) ++i;
    bool has_dot = false;
    if (i + 1 < lower.size() && lower[i] == '.' &&
        std::isdigit(static_cast<unsigned char>(lower[i + 1]))) {
      has_dot = true;
      ++i;
      while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i]))) ++i;
    }
    double value = std::stod(lower.substr(start, i - start));

    size_t after = i;
    while (after < lower.size() && lower[after] == ' ') ++after;
    bool marker = false;
    if (after < lower.size() && lower[after] == '%') {
      marker = true;
    } else if (lower.compare(after, 7, "percent") == 0 ||
               lower.compare(after, 8, "per cent") == 0) {
      marker = true;
    }

    PercentHit hit;
    if (marker) {
      if (value < 0.0 || value > 100.0) {
        hit.out_of_range = true;
      } else {
        hit.probability = value / 100.0;
      }
      return hit;
    }
    if (cue) {
      if (has_dot && value <= 1.0) {
        hit.probability = value;  // already a probability
      } else if (value >= 0.0 && value <= 100.0) {
        hit.probability = value / 100.0;  // bare number read as percent
      } else {
        hit.out_of_range = true;
      }
      return hit;
    }
    // Bare number without an elicitation cue (years, list ordinals): skip.
  }
  return std::nullopt;
}

enum class Slot { AnswerConf, Facts, Reasoning, None };

Slot classify_segment(const std::string& lower) {
  if (lower.find("fact") != std::string::npos) return Slot::Facts;
  if (lower.find("reason") != std::string::npos) return Slot::Reasoning;
  if (lower.find("answer") != std::string::npos || lower.find("confiden") != std::string::npos ||
      lower.find("correct") != std::string::npos) {
    return Slot::AnswerConf;
  }
  return Slot::None;
}

struct Line {
  std::string body;        // enumeration marker stripped
  bool enumerated = false;
};

std::vector<Line> split_lines(const std::string& raw) {
  std::vector<Line> out;
  for (const auto& l : text::split(raw, '\n')) {
    std::string s = text::trim(l);
    if (s.empty()) continue;
    Line line;
    size_t p = 0;
    while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) ++p;
    if (p > 0 && p <= 3 && p < s.size() && (s[p] == '.' || s[p] == ')') && p + 1 < s.size() &&
        s[p + 1] == ' ') {
      line.enumerated = true;
      line.body = text::trim(s.substr(p + 1));
    } else {
      line.body = s;
    }
    out.push_back(std::move(line));
  }
  return out;
}

void apply_status_flags(const RawResponse& raw, ModelResponse& out) {
  if (raw.status == ResponseStatus::Truncated) out.flags.push_back("truncated");
  if (raw.status == ResponseStatus::ProviderError) out.flags.push_back("provider-error");
}

ModelResponse make_shell(const RawResponse& raw) {
  ModelResponse out;
  out.question_id = raw.question_id;
  out.model = raw.model;
  out.frame = raw.frame;
  out.temperature = raw.temperature;
  return out;
}

}  // namespace

ModelResponse parse_baseline(const RawResponse& raw) {
  ModelResponse out = make_shell(raw);
  apply_status_flags(raw, out);
  if (raw.status == ResponseStatus::ProviderError) {
    out.flags.push_back("missing-answer");
    return out;
  }

  std::string lower = text::lowercase(raw.text);
  if (auto answer = find_answer_declaration(lower)) {
    out.answer = *answer;
  } else {
    out.flags.push_back("missing-answer");
  }

  std::vector<Line> lines = split_lines(raw.text);
  std::optional<double>* slots[3] = {&out.conf_answer, &out.conf_facts, &out.conf_reasoning};
  const char* slot_names[3] = {"answer", "facts", "reasoning"};
  std::vector<bool> consumed(lines.size(), false);
  std::vector<size_t> leftovers;

  for (size_t i = 0; i < lines.size(); ++i) {
    std::string lower_line = text::lowercase(lines[i].body);
    auto hit = first_percent(lines[i].body);
    Slot slot = classify_segment(lower_line);
    if (!hit) {
      // Keyword and cue but no number: a textual confidence statement.
      if (slot != Slot::None && has_cue_word(lower_line)) {
        out.flags.push_back("textual-confidence");
        consumed[i] = true;
      }
      continue;
    }
    if (hit->out_of_range) {
      out.flags.push_back("confidence-out-of-range");
      consumed[i] = true;
      continue;
    }
    if (slot == Slot::None) {
      if (has_cue_word(lower_line)) leftovers.push_back(i);
      continue;
    }
    size_t idx = slot == Slot::AnswerConf ? 0 : (slot == Slot::Facts ? 1 : 2);
    consumed[i] = true;
    if (slots[idx]->has_value()) {
      out.flags.push_back(std::string("conflict-") + slot_names[idx]);
    } else {
      slots[idx]->emplace(hit->probability);
    }
  }

  // Elicitation order fills whatever keywords could not place.
  size_t next = 0;
  for (size_t idx = 0; idx < 3 && next < leftovers.size(); ++idx) {
    if (slots[idx]->has_value()) continue;
    auto hit = first_percent(lines[leftovers[next]].body);
    consumed[leftovers[next]] = true;
    ++next;
    if (hit && !hit->out_of_range) slots[idx]->emplace(hit->probability);
  }

  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].enumerated && !consumed[i]) out.knowledge_items.push_back(lines[i].body);
  }

  if (out.conf_facts && out.conf_reasoning) {
    out.derived_conf = *out.conf_facts * *out.conf_reasoning;
  }
  return out;
}

ModelResponse parse_frame(const RawResponse& raw) {
  ModelResponse out = make_shell(raw);
  apply_status_flags(raw, out);
  if (raw.status == ResponseStatus::ProviderError) {
    out.flags.push_back("missing-answer");
    return out;
  }
  if (raw.frame == Frame::Baseline) {
    throw UsageError("parse_frame called on a baseline response");
  }

  std::optional<double> q;
  for (const auto& line : split_lines(raw.text)) {
    auto hit = first_percent(line.body);
    if (!hit) continue;
    if (hit->out_of_range) {
      out.flags.push_back("confidence-out-of-range");
      continue;
    }
    q = hit->probability;
    break;
  }
  if (!q) {
    out.flags.push_back("missing-answer");
    return out;
  }

  Answer framed = raw.frame == Frame::YesFrame ? Answer::Yes : Answer::No;
  Answer complement = raw.frame == Frame::YesFrame ? Answer::No : Answer::Yes;
  if (*q > 0.5) {
    out.answer = framed;
  } else if (*q < 0.5) {
    out.answer = complement;
  } else {
    out.answer = Answer::Missing;
    out.flags.push_back("tie");
  }
  out.conf_answer = std::max(*q, 1.0 - *q);
  return out;
}

ModelResponse parse_response(const RawResponse& raw) {
  return raw.frame == Frame::Baseline ? parse_baseline(raw) : parse_frame(raw);
}

ExtractedTriples extract_triples(const std::vector<std::string>& knowledge_items,
                                 const KnowledgeBase& kb, Domain domain) {
  // Longest surface first so e.g. "is not located in" beats "is located in".
  // Both renderings of a predicate are recognized: the manifest surface form
  // and the bare name with underscores as spaces.
  std::vector<std::pair<std::string, std::string>> surfaces;  // (lower surface, name)
  for (const auto& [name, meta] : kb.predicates()) {
    std::vector<std::string> forms = {text::replace_all(name, "_", " ")};
    if (meta.surface) forms.push_back(*meta.surface);
    for (const auto& form : forms) {
      std::string surface = text::collapse_spaces(form);
      if (!surface.empty()) surfaces.emplace_back(text::lowercase(surface), name);
    }
  }
  std::sort(surfaces.begin(), surfaces.end(), [](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
    return a.first < b.first;
  });

  ExtractedTriples out;
  for (const auto& raw_item : knowledge_items) {
    std::string sentence = text::collapse_spaces(raw_item);
    while (!sentence.empty() && (sentence.back() == '.' || sentence.back() == '!')) {
      sentence.pop_back();
    }
    sentence = text::trim(sentence);
    if (sentence.empty()) {
      ++out.unparseable;
      continue;
    }

    std::string padded_lower = " " + text::lowercase(sentence) + " ";
    bool matched = false;
    for (const auto& [surface, name] : surfaces) {
      std::string needle = " " + surface + " ";
      size_t pos = padded_lower.find(needle);
      if (pos == std::string::npos) continue;
      std::string subject = text::trim(sentence.substr(0, pos));
      std::string object = text::trim(sentence.substr(pos + needle.size() - 1));
      if (subject.empty() || object.empty()) continue;
      out.triples.push_back(KnowledgeTriple{subject, name, object, domain});
      matched = true;
      break;
    }
    if (matched) continue;

    // First-verb fallback: leading capitalized run is the subject, the next
    // word the predicate, the remainder the object.
    std::vector<std::string> words = text::split(sentence, ' ');
    size_t subject_end = 1;
    if (!words.empty() && std::isupper(static_cast<unsigned char>(words[0][0]))) {
      while (subject_end < words.size() &&
             std::isupper(static_cast<unsigned char>(words[subject_end][0]))) {
        ++subject_end;
      }
    }
    if (subject_end + 1 >= words.size()) {
      ++out.unparseable;
      continue;
    }
    std::string subject;
    for (size_t i = 0; i < subject_end; ++i) subject += (i ? " " : "") + words[i];
    std::string predicate = words[subject_end];
    std::string object;
    for (size_t i = subject_end + 1; i < words.size(); ++i) {
      object += (i > subject_end + 1 ? " " : "") + words[i];
    }
    out.triples.push_back(KnowledgeTriple{subject, predicate, object, domain});
  }
  return out;
}

std::map<std::string, ParseGroupStats> parse_quality(const std::vector<RawResponse>& raws,
                                                     const std::vector<ModelResponse>& parsed) {
  if (raws.size() != parsed.size()) {
    throw UsageError("parse_quality: raw and parsed vectors must align");
  }
  std::map<std::string, ParseGroupStats> out;
  for (size_t i = 0; i < raws.size(); ++i) {
    std::string temp = raws[i].effective_temperature.empty()
                           ? format_temperature(raws[i].temperature)
                           : raws[i].effective_temperature;
    std::string key = raws[i].model + "|" + to_string(raws[i].frame) + "|" + temp;
    ParseGroupStats& g = out[key];
    ++g.n;
    if (parsed[i].answer == Answer::Missing) ++g.missing_answer;
    if (!parsed[i].conf_answer) ++g.missing_confidence;
    if (parsed[i].has_flag("tie")) ++g.ties;
    if (parsed[i].has_flag("conflict-answer") || parsed[i].has_flag("conflict-facts") ||
        parsed[i].has_flag("conflict-reasoning")) {
      ++g.conflicts;
    }
    if (parsed[i].has_flag("provider-error")) ++g.provider_errors;
  }
  return out;
}

void save_parsed(const std::vector<ModelResponse>& parsed, const std::string& path,
                 const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write parsed file: " + path);
  if (!manifest_hash.empty()) {
    out << json{{"record", "header"}, {"kind", "parsed"}, {"manifest", manifest_hash}}.dump()
        << "\n";
  }
  for (const auto& r : parsed) {
    json j{{"question_id", r.question_id},
           {"model", r.model},
           {"frame", to_string(r.frame)},
           {"temperature", r.temperature},
           {"answer", to_string(r.answer)}};
    if (r.conf_answer) j["conf_answer"] = *r.conf_answer;
    if (r.conf_facts) j["conf_facts"] = *r.conf_facts;
    if (r.conf_reasoning) j["conf_reasoning"] = *r.conf_reasoning;
    if (r.derived_conf) j["derived_conf"] = *r.derived_conf;
    j["knowledge_items"] = r.knowledge_items;
    j["flags"] = r.flags;
    out << j.dump() << "\n";
  }
}

std::vector<ModelResponse> load_parsed(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open parsed file: " + path);
  std::vector<ModelResponse> out;
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
    ModelResponse r;
    r.question_id = j.at("question_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    auto frame = parse_frame(j.at("frame").get<std::string>());
    if (!frame) throw DataError(path + ":" + std::to_string(lineno) + ": unknown frame");
    r.frame = *frame;
    r.temperature = j.value("temperature", 0.0);
    auto answer = parse_answer(j.value("answer", "missing"));
    if (!answer) throw DataError(path + ":" + std::to_string(lineno) + ": unknown answer");
    r.answer = *answer;
    if (j.contains("conf_answer")) r.conf_answer = j["conf_answer"].get<double>();
    if (j.contains("conf_facts")) r.conf_facts = j["conf_facts"].get<double>();
    if (j.contains("conf_reasoning")) r.conf_reasoning = j["conf_reasoning"].get<double>();
    if (j.contains("derived_conf")) r.derived_conf = j["derived_conf"].get<double>();
    if (j.contains("knowledge_items")) {
      r.knowledge_items = j["knowledge_items"].get<std::vector<std::string>>();
    }
    if (j.contains("flags")) r.flags = j["flags"].get<std::vector<std::string>>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace calibench
