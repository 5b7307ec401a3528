#include "calibench/exposure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "calibench/errors.hpp"
#include "calibench/stats.hpp"
#include "calibench/text.hpp"

namespace calibench {

std::string to_string(Arm a) {
  switch (a) {
    case Arm::Control: return "control";
    case Arm::LLMAnswer: return "llm_answer";
    case Arm::LLMAnswerConf: return "llm_answer_conf";
  }
  return "control";
}

std::optional<Arm> parse_arm(const std::string& name) {
  std::string n = text::lowercase(text::trim(name));
  std::replace(n.begin(), n.end(), '-', '_');
  std::replace(n.begin(), n.end(), ' ', '_');
  if (n == "control") return Arm::Control;
  if (n == "llm_answer" || n == "llmanswer" || n == "answer") return Arm::LLMAnswer;
  if (n == "llm_answer_conf" || n == "llmanswerconf" || n == "llm_answer_confidence" ||
      n == "answer_conf") {
    return Arm::LLMAnswerConf;
  }
  return std::nullopt;
}

std::string to_string(Outcome o) {
  return o == Outcome::DAccuracy ? "d_accuracy" : "d_bias";
}

std::string to_string(Moderator m) {
  switch (m) {
    case Moderator::None: return "none";
    case Moderator::HumanConfBinary: return "human_conf_binary";
    case Moderator::LlmConfBinary: return "llm_conf_binary";
    case Moderator::Continuous: return "continuous";
  }
  return "none";
}

std::optional<Moderator> parse_moderator(const std::string& name) {
  if (name == "none") return Moderator::None;
  if (name == "human_conf_binary") return Moderator::HumanConfBinary;
  if (name == "llm_conf_binary") return Moderator::LlmConfBinary;
  if (name == "continuous") return Moderator::Continuous;
  return std::nullopt;
}

namespace {

double correct01(Answer answer, bool truth) {
  return (answer == Answer::Yes) == truth && answer != Answer::Missing ? 1.0 : 0.0;
}

}  // namespace

Deltas deltas(const ExposureRecord& r) {
  double pre = correct01(r.pre_answer, r.truth);
  double post = correct01(r.post_answer, r.truth);
  Deltas d;
  d.d_accuracy = post - pre;
  d.d_bias = (r.post_conf - post) - (r.pre_conf - pre);
  return d;
}

void validate_exposure(const std::vector<ExposureRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto where = [&] { return "exposure record " + std::to_string(i + 1) + ": "; };
    if (r.participant_id.empty() || r.question_id.empty()) {
      throw DataError(where() + "participant_id and question_id are required");
    }
    if (r.pre_conf < 0.0 || r.pre_conf > 1.0 || r.post_conf < 0.0 || r.post_conf > 1.0) {
      throw DataError(where() + "confidences must lie in [0,1]");
    }
    if (r.llm_conf && (*r.llm_conf < 0.0 || *r.llm_conf > 1.0)) {
      throw DataError(where() + "llm_conf must lie in [0,1]");
    }
    if (r.pre_answer == Answer::Missing || r.post_answer == Answer::Missing) {
      throw DataError(where() + "pre/post answers must be yes or no");
    }
    if (r.arm == Arm::Control && r.shown_model) {
      throw DataError(where() + "control rows must not name a shown model");
    }
  }
}

std::vector<ExposureRecord> load_exposure_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open exposure file: " + path);
  std::vector<ExposureRecord> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = text::split(line, ',');
    auto loc = [&] { return path + ":" + std::to_string(lineno) + ": "; };
    if (!header_seen) {
      header_seen = true;
      if (!fields.empty() && text::lowercase(text::trim(fields[0])) == "participant_id") {
        continue;  // header row
      }
    }
    if (fields.size() != 11) {
      throw DataError(loc() + "expected 11 comma-separated fields, got " +
                      std::to_string(fields.size()));
    }
    for (auto& f : fields) f = text::trim(f);
    ExposureRecord r;
    r.participant_id = fields[0];
    r.question_id = fields[1];
    auto arm = parse_arm(fields[2]);
    if (!arm) throw DataError(loc() + "unknown arm: " + fields[2]);
    r.arm = *arm;
    auto to_answer = [&](const std::string& s) -> Answer {
      std::string v = text::lowercase(s);
      if (v == "yes" || v == "y" || v == "1" || v == "true") return Answer::Yes;
      if (v == "no" || v == "n" || v == "0" || v == "false") return Answer::No;
      throw DataError(loc() + "expected yes/no, got: " + s);
    };
    r.pre_answer = to_answer(fields[3]);
    r.post_answer = to_answer(fields[4]);
    auto to_double = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw DataError(loc() + "expected a number, got: " + s);
      }
    };
    r.pre_conf = to_double(fields[5]);
    r.post_conf = to_double(fields[6]);
    std::string tv = text::lowercase(fields[7]);
    if (tv == "true" || tv == "1" || tv == "yes") {
      r.truth = true;
    } else if (tv == "false" || tv == "0" || tv == "no") {
      r.truth = false;
    } else {
      throw DataError(loc() + "expected true/false, got: " + fields[7]);
    }
    if (!fields[8].empty()) r.shown_model = fields[8];
    if (!fields[9].empty()) r.llm_answer = to_answer(fields[9]);
    if (!fields[10].empty()) r.llm_conf = to_double(fields[10]);
    out.push_back(std::move(r));
  }
  validate_exposure(out);
  return out;
}

void save_exposure_csv(const std::vector<ExposureRecord>& records, const std::string& path,
                       const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write exposure file: " + path);
  if (!manifest_hash.empty()) out << "# manifest: " << manifest_hash << "\n";
  out << "participant_id,question_id,arm,pre_answer,post_answer,pre_conf,post_conf,truth,"
         "shown_model,llm_answer,llm_conf\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  for (const auto& r : records) {
    out << r.participant_id << "," << r.question_id << "," << to_string(r.arm) << ","
        << to_string(r.pre_answer) << "," << to_string(r.post_answer) << "," << num(r.pre_conf)
        << "," << num(r.post_conf) << "," << (r.truth ? "true" : "false") << ","
        << (r.shown_model ? *r.shown_model : "") << ","
        << (r.llm_answer ? to_string(*r.llm_answer) : "") << ","
        << (r.llm_conf ? num(*r.llm_conf) : "") << "\n";
  }
}

namespace {

/// Map string ids to dense integer cluster ids, preserving nothing but
/// distinctness so relabeling cannot change results.
std::vector<std::int64_t> dense_ids(const std::vector<const std::string*>& keys) {
  std::map<std::string, std::int64_t> seen;
  std::vector<std::int64_t> out;
  out.reserve(keys.size());
  for (const auto* k : keys) {
    auto [it, fresh] = seen.try_emplace(*k, static_cast<std::int64_t>(seen.size()));
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> collinear_columns(const std::vector<std::vector<double>>& X,
                                           const std::vector<double>& y,
                                           const std::vector<std::string>& names) {
  std::vector<std::string> bad;
  for (std::size_t drop = 0; drop < names.size(); ++drop) {
    std::vector<std::vector<double>> Xd(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
      for (std::size_t j = 0; j < X[i].size(); ++j) {
        if (j != drop) Xd[i].push_back(X[i][j]);
      }
    }
    try {
      regress::ols(Xd, y, {});
      bad.push_back(names[drop]);  // dropping it restored full rank
    } catch (const DataError&) {
      // still singular without this column; it is not the culprit
    }
  }
  return bad;
}

}  // namespace

RegressionResult treatment_regression(const std::vector<ExposureRecord>& records,
                                      Outcome outcome, Moderator moderator) {
  // Row filter and moderator value.
  std::vector<const ExposureRecord*> rows;
  for (const auto& r : records) {
    switch (moderator) {
      case Moderator::None:
      case Moderator::HumanConfBinary:
        rows.push_back(&r);
        break;
      case Moderator::LlmConfBinary:
        if (r.llm_conf && *r.llm_conf > 0.8) rows.push_back(&r);
        break;
      case Moderator::Continuous:
        if (r.llm_conf) rows.push_back(&r);
        break;
    }
  }
  if (rows.size() < 3) throw DataError("treatment_regression: too few usable rows");

  double human_median = 0.0;
  if (moderator == Moderator::HumanConfBinary) {
    std::vector<double> confs;
    confs.reserve(rows.size());
    for (const auto* r : rows) confs.push_back(r->pre_conf);
    std::sort(confs.begin(), confs.end());
    std::size_t n = confs.size();
    human_median = n % 2 ? confs[n / 2] : 0.5 * (confs[n / 2 - 1] + confs[n / 2]);
  }

  std::vector<std::string> names = {"constant", "llm_answer", "llm_answer_conf"};
  std::string mod_name;
  switch (moderator) {
    case Moderator::None: break;
    case Moderator::HumanConfBinary: mod_name = "high_conf_human"; break;
    case Moderator::LlmConfBinary: mod_name = "high_conf_llm"; break;
    case Moderator::Continuous: mod_name = "llm_conf_centered"; break;
  }
  if (!mod_name.empty()) {
    names.push_back(mod_name);
    names.push_back("llm_answer_x_" + mod_name);
    names.push_back("llm_answer_conf_x_" + mod_name);
  }

  std::vector<std::vector<double>> X;
  std::vector<double> y;
  std::vector<const std::string*> part_keys, quest_keys;
  X.reserve(rows.size());
  for (const auto* r : rows) {
    double a = r->arm == Arm::LLMAnswer ? 1.0 : 0.0;
    double c = r->arm == Arm::LLMAnswerConf ? 1.0 : 0.0;
    std::vector<double> row = {1.0, a, c};
    if (moderator == Moderator::HumanConfBinary) {
      double m = r->pre_conf > human_median ? 1.0 : 0.0;
      row.insert(row.end(), {m, a * m, c * m});
    } else if (moderator == Moderator::LlmConfBinary) {
      double m = *r->llm_conf > 0.9 ? 1.0 : 0.0;
      row.insert(row.end(), {m, a * m, c * m});
    } else if (moderator == Moderator::Continuous) {
      double m = *r->llm_conf - 0.8;
      row.insert(row.end(), {m, a * m, c * m});
    }
    X.push_back(std::move(row));
    Deltas d = deltas(*r);
    y.push_back(outcome == Outcome::DAccuracy ? d.d_accuracy : d.d_bias);
    part_keys.push_back(&r->participant_id);
    quest_keys.push_back(&r->question_id);
  }

  regress::SeSpec spec;
  spec.type = regress::SeType::ClusterTwoWay;
  spec.cluster1 = dense_ids(part_keys);
  spec.cluster2 = dense_ids(quest_keys);
  auto distinct = [](const std::vector<std::int64_t>& v) {
    return static_cast<std::size_t>(*std::max_element(v.begin(), v.end())) + 1;
  };
  if (distinct(spec.cluster1) < 2 || distinct(spec.cluster2) < 2) {
    throw DataError("treatment_regression: need at least two clusters per dimension");
  }

  regress::FitResult fit;
  try {
    fit = regress::ols(X, y, spec);
  } catch (const DataError&) {
    auto bad = collinear_columns(X, y, names);
    std::string msg = "treatment_regression: singular design; collinear columns:";
    if (bad.empty()) msg += " (undetermined)";
    for (const auto& b : bad) msg += " " + b;
    throw DataError(msg);
  }

  RegressionResult res;
  res.outcome = outcome;
  res.moderator = moderator;
  res.n = fit.n;
  res.r_squared = fit.r_squared;
  res.clusters_participant = fit.clusters1;
  res.clusters_question = fit.clusters2;
  res.eigenvalue_truncated = fit.eigenvalue_truncated;
  res.notes = fit.notes;
  for (std::size_t i = 0; i < names.size(); ++i) {
    res.coefficients.push_back({names[i], fit.coef[i], fit.se[i], fit.t_stat[i], fit.p_value[i]});
  }
  return res;
}

namespace {

struct CellAccum {
  std::vector<double> values;
};

void fill_panel(SubgroupPanel& panel, const std::array<std::array<CellAccum, 2>, 2>& cells) {
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const auto& v = cells[i][j].values;
      panel.n[i][j] = v.size();
      if (v.empty()) {
        panel.present[i][j] = false;
        continue;
      }
      panel.present[i][j] = true;
      panel.value[i][j] = stats::mean(v);
      panel.sd[i][j] = v.size() > 1 ? stats::sd_sample(v) : 0.0;
    }
  }
}

void pairwise_corr(std::vector<CorrelationEntry>& out, const std::string& name_a,
                   const std::vector<std::optional<double>>& a, const std::string& name_b,
                   const std::vector<std::optional<double>>& b) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) {
      xs.push_back(*a[i]);
      ys.push_back(*b[i]);
    }
  }
  CorrelationEntry e;
  e.var_a = name_a;
  e.var_b = name_b;
  e.n = xs.size();
  if (xs.size() >= 3) {
    e.r = stats::pearson(xs, ys);
    double df = static_cast<double>(xs.size() - 2);
    double denom = 1.0 - e.r * e.r;
    if (denom <= 0.0) {
      e.p_value = 0.0;
    } else {
      double t = e.r * std::sqrt(df / denom);
      e.p_value = stats::student_t_two_sided_p(t, df);
    }
  }
  out.push_back(e);
}

}  // namespace

SubgroupSummary subgroup_summary(const std::vector<ExposureRecord>& records,
                                 double llm_threshold) {
  if (llm_threshold < 0.0 || llm_threshold > 1.0) {
    throw UsageError("subgroup_summary: llm_threshold must lie in [0,1]");
  }
  SubgroupSummary s;
  s.llm_threshold = llm_threshold;

  std::vector<const ExposureRecord*> rows;
  for (const auto& r : records) {
    if (r.llm_conf) rows.push_back(&r);
  }
  s.n_total = rows.size();
  if (rows.empty()) return s;

  std::vector<double> confs;
  confs.reserve(rows.size());
  for (const auto* r : rows) confs.push_back(r->pre_conf);
  std::sort(confs.begin(), confs.end());
  std::size_t n = confs.size();
  s.human_conf_median = n % 2 ? confs[n / 2] : 0.5 * (confs[n / 2 - 1] + confs[n / 2]);

  std::array<std::array<CellAccum, 2>, 2> share, hacc, hbias, lacc, lbias;
  for (const auto* r : rows) {
    int hi_llm = *r->llm_conf > llm_threshold ? 1 : 0;
    int hi_hum = r->pre_conf > s.human_conf_median ? 1 : 0;
    share[hi_llm][hi_hum].values.push_back(1.0);
    double pre = correct01(r->pre_answer, r->truth);
    hacc[hi_llm][hi_hum].values.push_back(pre);
    hbias[hi_llm][hi_hum].values.push_back(r->pre_conf - pre);
    if (r->llm_answer) {
      double lc = correct01(*r->llm_answer, r->truth);
      lacc[hi_llm][hi_hum].values.push_back(lc);
      lbias[hi_llm][hi_hum].values.push_back(*r->llm_conf - lc);
    }
  }
  fill_panel(s.human_accuracy, hacc);
  fill_panel(s.human_bias, hbias);
  fill_panel(s.llm_accuracy, lacc);
  fill_panel(s.llm_bias, lbias);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      s.share.n[i][j] = share[i][j].values.size();
      s.share.present[i][j] = true;
      s.share.value[i][j] =
          static_cast<double>(share[i][j].values.size()) / static_cast<double>(rows.size());
      s.share.sd[i][j] = 0.0;
    }
  }

  // Correlations of the four baseline measures over all records.
  std::vector<std::optional<double>> v_hconf, v_hcorr, v_lconf, v_lcorr;
  for (const auto& r : records) {
    v_hconf.push_back(r.pre_conf);
    v_hcorr.push_back(correct01(r.pre_answer, r.truth));
    v_lconf.push_back(r.llm_conf);
    if (r.llm_answer && r.llm_conf) {
      v_lcorr.push_back(correct01(*r.llm_answer, r.truth));
    } else {
      v_lcorr.push_back(std::nullopt);
    }
  }
  pairwise_corr(s.correlations, "human_conf", v_hconf, "human_correct", v_hcorr);
  pairwise_corr(s.correlations, "human_conf", v_hconf, "llm_conf", v_lconf);
  pairwise_corr(s.correlations, "human_conf", v_hconf, "llm_correct", v_lcorr);
  pairwise_corr(s.correlations, "human_correct", v_hcorr, "llm_conf", v_lconf);
  pairwise_corr(s.correlations, "human_correct", v_hcorr, "llm_correct", v_lcorr);
  pairwise_corr(s.correlations, "llm_conf", v_lconf, "llm_correct", v_lcorr);
  return s;
}

AnovaResult randomization_check(const std::vector<ExposureRecord>& records,
                                BaselineMeasure measure) {
  std::vector<double> values;
  std::vector<int> groups;
  for (const auto& r : records) {
    values.push_back(measure == BaselineMeasure::PreConf ? r.pre_conf
                                                         : correct01(r.pre_answer, r.truth));
    groups.push_back(static_cast<int>(r.arm));
  }
  auto a = stats::one_way_anova(values, groups);
  AnovaResult res;
  res.f_stat = a.f_stat;
  res.df_between = a.df_between;
  res.df_within = a.df_within;
  res.p_value = a.p_value;
  return res;
}

NamedSpecResult run_named_spec(const std::vector<ExposureRecord>& records,
                               const std::string& name) {
  NamedSpecResult out;
  if (name == "fig2") {
    out.regressions.push_back(treatment_regression(records, Outcome::DAccuracy));
    out.regressions.push_back(treatment_regression(records, Outcome::DBias));
  } else if (name == "table3") {
    for (auto mod : {Moderator::HumanConfBinary, Moderator::LlmConfBinary}) {
      out.regressions.push_back(treatment_regression(records, Outcome::DAccuracy, mod));
      out.regressions.push_back(treatment_regression(records, Outcome::DBias, mod));
    }
  } else if (name == "continuous") {
    out.regressions.push_back(
        treatment_regression(records, Outcome::DAccuracy, Moderator::Continuous));
    out.regressions.push_back(
        treatment_regression(records, Outcome::DBias, Moderator::Continuous));
  } else if (name == "subsample4x4") {
    out.subgroup = subgroup_summary(records);
  } else {
    throw UsageError("unknown exposure spec: " + name +
                     " (expected fig2, table3, continuous, or subsample4x4)");
  }
  return out;
}

void save_exposure_results_csv(const NamedSpecResult& result, const std::string& path,
                               const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write exposure results: " + path);
  if (!manifest_hash.empty()) out << "# manifest: " << manifest_hash << "\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  if (!result.regressions.empty()) {
    out << "outcome,moderator,term,estimate,se,t_stat,p_value,n,r_squared,"
           "clusters_participant,clusters_question,eigenvalue_truncated\n";
    for (const auto& reg : result.regressions) {
      for (const auto& c : reg.coefficients) {
        out << to_string(reg.outcome) << "," << to_string(reg.moderator) << "," << c.name << ","
            << num(c.estimate) << "," << num(c.se) << "," << num(c.t_stat) << ","
            << num(c.p_value) << "," << reg.n << "," << num(reg.r_squared) << ","
            << reg.clusters_participant << "," << reg.clusters_question << ","
            << (reg.eigenvalue_truncated ? "true" : "false") << "\n";
      }
    }
  }
  if (result.subgroup) {
    const auto& s = *result.subgroup;
    out << "panel,llm_conf,human_conf,value,sd,n\n";
    auto panel = [&](const char* name, const SubgroupPanel& p) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          out << name << "," << (i ? "high" : "low") << "," << (j ? "high" : "low") << ",";
          if (p.present[i][j]) {
            out << num(p.value[i][j]) << "," << num(p.sd[i][j]);
          } else {
            out << ",";
          }
          out << "," << p.n[i][j] << "\n";
        }
      }
    };
    panel("share", s.share);
    panel("human_accuracy", s.human_accuracy);
    panel("human_bias", s.human_bias);
    panel("llm_accuracy", s.llm_accuracy);
    panel("llm_bias", s.llm_bias);
    out << "correlation_a,correlation_b,r,p_value,n\n";
    for (const auto& c : s.correlations) {
      out << c.var_a << "," << c.var_b << "," << num(c.r) << "," << num(c.p_value) << "," << c.n
          << "\n";
    }
  }
}

}  // namespace calibench
