#include "calibench/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "calibench/errors.hpp"
#include "calibench/stats.hpp"

namespace calibench {

using nlohmann::json;

std::string to_string(ConfidenceSource s) {
  switch (s) {
    case ConfidenceSource::Answer: return "answer";
    case ConfidenceSource::Facts: return "facts";
    case ConfidenceSource::Reasoning: return "reasoning";
    case ConfidenceSource::Derived: return "derived";
  }
  return "answer";
}

std::optional<ConfidenceSource> parse_confidence_source(const std::string& name) {
  if (name == "answer") return ConfidenceSource::Answer;
  if (name == "facts") return ConfidenceSource::Facts;
  if (name == "reasoning") return ConfidenceSource::Reasoning;
  if (name == "derived") return ConfidenceSource::Derived;
  return std::nullopt;
}

std::vector<ScoredRecord> score(const std::vector<BenchmarkQuestion>& questions,
                                const std::vector<ModelResponse>& parsed,
                                const ScoringPolicy& policy) {
  std::unordered_map<std::string, const BenchmarkQuestion*> by_id;
  by_id.reserve(questions.size());
  for (const auto& q : questions) by_id[q.id] = &q;

  std::vector<ScoredRecord> out;
  out.reserve(parsed.size());
  for (const auto& r : parsed) {
    auto it = by_id.find(r.question_id);
    if (it == by_id.end()) {
      throw DataError("score: response references unknown question id " + r.question_id);
    }
    const BenchmarkQuestion& q = *it->second;
    ScoredRecord rec;
    rec.question_id = r.question_id;
    rec.model = r.model;
    rec.frame = r.frame;
    rec.temperature = r.temperature;
    rec.domain = q.domain;
    rec.type = q.type;
    rec.truth = q.truth;
    rec.answer = r.answer;
    rec.flags = r.flags;
    if (r.answer == Answer::Missing) {
      if (policy.punish_non_answer) rec.correct = false;
    } else {
      rec.correct = (r.answer == Answer::Yes) == q.truth;
    }
    switch (policy.confidence) {
      case ConfidenceSource::Answer: rec.confidence = r.conf_answer; break;
      case ConfidenceSource::Facts: rec.confidence = r.conf_facts; break;
      case ConfidenceSource::Reasoning: rec.confidence = r.conf_reasoning; break;
      case ConfidenceSource::Derived: rec.confidence = r.derived_conf; break;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

CalibrationSummary summarize(const std::vector<ScoredRecord>& records) {
  CalibrationSummary s;
  s.n = records.size();
  double correct_sum = 0.0, conf_sum = 0.0;
  for (const auto& r : records) {
    if (r.correct) {
      ++s.n_answered;
      correct_sum += *r.correct ? 1.0 : 0.0;
    }
    if (r.confidence) {
      ++s.n_confident;
      conf_sum += *r.confidence;
    }
  }
  s.accuracy = s.n_answered ? correct_sum / static_cast<double>(s.n_answered) : 0.0;
  s.mean_confidence = s.n_confident ? conf_sum / static_cast<double>(s.n_confident) : 0.0;
  s.bias = s.mean_confidence - s.accuracy;
  return s;
}

std::map<std::string, CalibrationSummary> summarize_by(const std::vector<ScoredRecord>& records,
                                                       GroupBy key) {
  std::map<std::string, std::vector<ScoredRecord>> groups;
  for (const auto& r : records) {
    std::string k;
    switch (key) {
      case GroupBy::Model: k = r.model; break;
      case GroupBy::Domain: k = to_string(r.domain); break;
      case GroupBy::QuestionType: k = to_string(r.type); break;
      case GroupBy::Frame: k = to_string(r.frame); break;
      case GroupBy::Temperature: k = format_temperature(r.temperature); break;
    }
    groups[k].push_back(r);
  }
  std::map<std::string, CalibrationSummary> out;
  for (const auto& [k, v] : groups) out[k] = summarize(v);
  return out;
}

OverconfidenceTest overconfidence_test(const std::vector<ScoredRecord>& records) {
  std::vector<double> d;
  for (const auto& r : records) {
    if (r.correct && r.confidence) {
      d.push_back(*r.confidence - (*r.correct ? 1.0 : 0.0));
    }
  }
  OverconfidenceTest t;
  t.n = d.size();
  if (d.size() < 2) return t;
  t.bias = stats::mean(d);
  double ss = 0.0;
  for (double x : d) ss += (x - t.bias) * (x - t.bias);
  t.se = std::sqrt(ss) / static_cast<double>(d.size());
  if (t.se > 0.0) {
    t.t_stat = t.bias / t.se;
    t.normal_approx = d.size() >= 200;
    t.p_value = t.normal_approx
                    ? stats::normal_two_sided_p(t.t_stat)
                    : stats::student_t_two_sided_p(t.t_stat, static_cast<double>(d.size() - 1));
  } else {
    t.p_value = t.bias == 0.0 ? 1.0 : 0.0;
  }
  return t;
}

GradientFit fit_gradient(const std::vector<ScoredRecord>& records) {
  std::vector<double> x, y;
  for (const auto& r : records) {
    if (r.correct && r.confidence) {
      x.push_back(*r.confidence - 1.0);
      y.push_back(*r.correct ? 1.0 : 0.0);
    }
  }
  if (x.size() < 2) throw DataError("fit_gradient: need at least two scored records");

  GradientFit g;
  regress::SeSpec spec;
  spec.type = regress::SeType::HC0;
  g.fit = regress::simple_ols(x, y, spec);

  // Grouped fit: one row per distinct confidence level, frequency-weighted.
  std::map<double, std::pair<double, std::size_t>> cells;  // x -> (sum y, count)
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& c = cells[x[i]];
    c.first += y[i];
    c.second += 1;
  }
  g.levels = cells.size();
  if (cells.size() >= 2) {
    std::vector<std::vector<double>> X;
    std::vector<double> Y, W;
    for (const auto& [xv, cell] : cells) {
      X.push_back({1.0, xv});
      Y.push_back(cell.first / static_cast<double>(cell.second));
      W.push_back(static_cast<double>(cell.second));
    }
    regress::SeSpec wspec;
    wspec.type = regress::SeType::Classical;
    wspec.weights = W;
    auto grouped = regress::ols(X, Y, wspec);
    g.grouped_coef = grouped.coef;
    for (std::size_t i = 0; i < grouped.coef.size(); ++i) {
      g.grouped_delta = std::max(g.grouped_delta, std::abs(grouped.coef[i] - g.fit.coef[i]));
    }
  } else {
    g.grouped_coef = g.fit.coef;
  }
  return g;
}

std::vector<CurvePoint> calibration_curve(const std::vector<ScoredRecord>& records) {
  std::map<double, std::pair<double, std::size_t>> cells;
  for (const auto& r : records) {
    if (r.correct && r.confidence) {
      auto& c = cells[*r.confidence];
      c.first += *r.correct ? 1.0 : 0.0;
      c.second += 1;
    }
  }
  std::vector<CurvePoint> out;
  out.reserve(cells.size());
  for (const auto& [conf, cell] : cells) {
    out.push_back({conf, cell.first / static_cast<double>(cell.second), cell.second});
  }
  return out;
}

ReplicationReport replication_consistency(const std::vector<std::vector<ScoredRecord>>& runs) {
  ReplicationReport rep;
  rep.n_runs = runs.size();
  if (runs.size() < 2) return rep;

  auto letter = [](const ScoredRecord& r) {
    if (!r.correct) return 'M';
    return *r.correct ? 'C' : 'W';
  };

  std::vector<std::unordered_map<std::string, const ScoredRecord*>> by_id(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& r : runs[i]) by_id[i][r.question_id] = &r;
  }
  // Questions present in every run, iterated in the first run's order.
  std::vector<std::string> common;
  for (const auto& r : runs[0]) {
    bool everywhere = true;
    for (std::size_t i = 1; i < runs.size() && everywhere; ++i) {
      everywhere = by_id[i].count(r.question_id) > 0;
    }
    if (everywhere) common.push_back(r.question_id);
  }
  rep.n_questions = common.size();
  if (common.empty()) return rep;

  std::size_t consistent = 0;
  for (const auto& id : common) {
    std::string pattern;
    for (std::size_t i = 0; i < runs.size(); ++i) pattern += letter(*by_id[i].at(id));
    bool same = std::all_of(pattern.begin(), pattern.end(),
                            [&](char c) { return c == pattern[0]; });
    if (same) ++consistent;
    rep.patterns[id] = pattern;
  }
  rep.consistent_fraction = static_cast<double>(consistent) / static_cast<double>(common.size());

  double change_sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      PairwiseConsistency pc;
      pc.run_a = a;
      pc.run_b = b;
      std::size_t same_corr = 0, changed = 0;
      for (const auto& id : common) {
        const ScoredRecord& ra = *by_id[a].at(id);
        const ScoredRecord& rb = *by_id[b].at(id);
        if (letter(ra) == letter(rb)) ++same_corr;
        if (ra.answer != rb.answer) ++changed;
      }
      pc.same_correctness = static_cast<double>(same_corr) / static_cast<double>(common.size());
      pc.answer_changed = static_cast<double>(changed) / static_cast<double>(common.size());
      change_sum += pc.answer_changed;
      ++pairs;
      rep.pairwise.push_back(pc);
    }
  }
  rep.answer_change_rate = pairs ? change_sum / static_cast<double>(pairs) : 0.0;
  return rep;
}

void save_scored(const std::vector<ScoredRecord>& records, const std::string& path,
                 const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scored file: " + path);
  if (!manifest_hash.empty()) {
    out << json{{"record", "header"}, {"kind", "scored"}, {"manifest", manifest_hash}}.dump()
        << "\n";
  }
  for (const auto& r : records) {
    json j{{"question_id", r.question_id},
           {"model", r.model},
           {"frame", to_string(r.frame)},
           {"temperature", r.temperature},
           {"domain", to_string(r.domain)},
           {"type", to_string(r.type)},
           {"truth", r.truth},
           {"answer", to_string(r.answer)}};
    if (r.correct) j["correct"] = *r.correct;
    if (r.confidence) j["confidence"] = *r.confidence;
    j["flags"] = r.flags;
    out << j.dump() << "\n";
  }
}

std::vector<ScoredRecord> load_scored(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scored file: " + path);
  std::vector<ScoredRecord> out;
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
    ScoredRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    auto loc = path + ":" + std::to_string(lineno);
    auto frame = parse_frame(j.at("frame").get<std::string>());
    if (!frame) throw DataError(loc + ": unknown frame");
    r.frame = *frame;
    r.temperature = j.value("temperature", 0.0);
    auto dom = parse_domain(j.at("domain").get<std::string>());
    if (!dom) throw DataError(loc + ": unknown domain");
    r.domain = *dom;
    auto ty = parse_reasoning_type(j.at("type").get<std::string>());
    if (!ty) throw DataError(loc + ": unknown question type");
    r.type = *ty;
    r.truth = j.at("truth").get<bool>();
    auto ans = parse_answer(j.value("answer", "missing"));
    if (!ans) throw DataError(loc + ": unknown answer");
    r.answer = *ans;
    if (j.contains("correct")) r.correct = j["correct"].get<bool>();
    if (j.contains("confidence")) r.confidence = j["confidence"].get<double>();
    if (j.contains("flags")) r.flags = j["flags"].get<std::vector<std::string>>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace calibench
