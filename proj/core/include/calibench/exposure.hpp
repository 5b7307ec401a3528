#pragma once

/// Analysis of the human exposure experiment: participants answer questions
/// before and after seeing nothing (control), a model's answer, or a model's
/// answer plus its confidence. Computes per-record accuracy/bias deltas,
/// difference-in-difference treatment regressions with two-way clustered
/// errors, confidence-moderated variants, and the 2x2 subgroup summary.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "calibench/parser.hpp"
#include "calibench/regress.hpp"

namespace calibench {

enum class Arm { Control, LLMAnswer, LLMAnswerConf };

std::string to_string(Arm a);
std::optional<Arm> parse_arm(const std::string& name);

struct ExposureRecord {
  std::string participant_id;
  std::string question_id;
  Arm arm = Arm::Control;
  Answer pre_answer = Answer::Missing;
  Answer post_answer = Answer::Missing;
  double pre_conf = 0.0;
  double post_conf = 0.0;
  bool truth = false;
  /// Model shown to the participant; absent in the control arm.
  std::optional<std::string> shown_model;
  /// The model's answer/confidence on this question. Control rows may carry
  /// them too (e.g. an average over models) so confidence-moderated
  /// regressions can cover all arms.
  std::optional<Answer> llm_answer;
  std::optional<double> llm_conf;
};

struct Deltas {
  double d_accuracy = 0.0;  ///< 1[post correct] - 1[pre correct]
  double d_bias = 0.0;      ///< (post_conf - 1[post correct]) - (pre_conf - 1[pre correct])
};

Deltas deltas(const ExposureRecord& r);

/// CSV columns: participant_id,question_id,arm,pre_answer,post_answer,
/// pre_conf,post_conf,truth,shown_model,llm_answer,llm_conf
/// (the last three may be empty; lines starting with '#' are skipped).
std::vector<ExposureRecord> load_exposure_csv(const std::string& path);
void save_exposure_csv(const std::vector<ExposureRecord>& records, const std::string& path,
                       const std::string& manifest_hash = "");

/// Confidence ranges, answer presence, and control-arm purity
/// (shown_model must be absent). Throws DataError on the first violation.
void validate_exposure(const std::vector<ExposureRecord>& records);

enum class Outcome { DAccuracy, DBias };
std::string to_string(Outcome o);

/// Moderation of the treatment effect:
///  - None: arm indicators only.
///  - HumanConfBinary: above-median baseline confidence, main + interactions.
///  - LlmConfBinary: restricted to rows with model confidence > 0.8; the
///    moderator indicates model confidence > 0.9.
///  - Continuous: model confidence centered at 0.8, main + interactions;
///    rows without model confidence are dropped.
enum class Moderator { None, HumanConfBinary, LlmConfBinary, Continuous };
std::string to_string(Moderator m);
std::optional<Moderator> parse_moderator(const std::string& name);

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

struct RegressionResult {
  Outcome outcome = Outcome::DAccuracy;
  Moderator moderator = Moderator::None;
  std::vector<Coefficient> coefficients;
  std::size_t n = 0;
  double r_squared = 0.0;
  std::size_t clusters_participant = 0;
  std::size_t clusters_question = 0;
  bool eigenvalue_truncated = false;
  std::vector<std::string> notes;
};

/// OLS of the chosen delta on treatment indicators (plus moderator terms),
/// standard errors clustered two-way at the participant and question level.
/// Requires at least two clusters in each dimension; a singular design
/// raises DataError naming the collinear columns.
RegressionResult treatment_regression(const std::vector<ExposureRecord>& records,
                                      Outcome outcome, Moderator moderator = Moderator::None);

/// One 2x2 panel: [llm high?][human high?] -> value. Cells with no data are
/// marked absent.
struct SubgroupPanel {
  std::array<std::array<double, 2>, 2> value{};
  std::array<std::array<double, 2>, 2> sd{};
  std::array<std::array<std::size_t, 2>, 2> n{};
  std::array<std::array<bool, 2>, 2> present{};
};

struct CorrelationEntry {
  std::string var_a;
  std::string var_b;
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

struct SubgroupSummary {
  std::size_t n_total = 0;       ///< rows with model confidence available
  double human_conf_median = 0.0;
  double llm_threshold = 0.9;
  SubgroupPanel share;           ///< observation fraction per cell
  SubgroupPanel human_accuracy;  ///< baseline-stage accuracy
  SubgroupPanel human_bias;      ///< baseline confidence - correctness
  SubgroupPanel llm_accuracy;    ///< model correctness (needs llm_answer)
  SubgroupPanel llm_bias;        ///< model confidence - correctness
  /// Pairwise correlations of the four baseline measures
  /// (human_conf, human_correct, llm_conf, llm_correct).
  std::vector<CorrelationEntry> correlations;
};

/// Cells split model confidence at `llm_threshold` (high: strictly above)
/// and baseline human confidence at its median over the included rows.
SubgroupSummary subgroup_summary(const std::vector<ExposureRecord>& records,
                                 double llm_threshold = 0.9);

struct AnovaResult {
  double f_stat = 0.0;
  double df_between = 0.0;
  double df_within = 0.0;
  double p_value = 1.0;
};

/// Randomization check: one-way ANOVA of a baseline measure across arms.
enum class BaselineMeasure { PreConf, PreCorrect };
AnovaResult randomization_check(const std::vector<ExposureRecord>& records,
                                BaselineMeasure measure);

struct NamedSpecResult {
  std::vector<RegressionResult> regressions;
  std::optional<SubgroupSummary> subgroup;
};

/// Built-in analysis bundles:
///  - "fig2": both deltas on arm indicators.
///  - "table3": both deltas, human-confidence and model-confidence binary
///    moderators (four regressions).
///  - "continuous": both deltas with the continuous moderator.
///  - "subsample4x4": the 2x2 subgroup summary.
/// Unknown names raise UsageError.
NamedSpecResult run_named_spec(const std::vector<ExposureRecord>& records,
                               const std::string& name);

void save_exposure_results_csv(const NamedSpecResult& result, const std::string& path,
                               const std::string& manifest_hash = "");

}  // namespace calibench
