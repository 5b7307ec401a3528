#pragma once

/// Scoring and calibration analysis: joins parsed model responses with the
/// benchmark questions, measures accuracy / stated confidence / bias,
/// regresses correctness on confidence, runs the overconfidence test, and
/// checks consistency across repeated runs.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calibench/parser.hpp"
#include "calibench/qgen.hpp"
#include "calibench/regress.hpp"

namespace calibench {

/// Which elicited probability to treat as the record's confidence.
enum class ConfidenceSource { Answer, Facts, Reasoning, Derived };

std::string to_string(ConfidenceSource s);
std::optional<ConfidenceSource> parse_confidence_source(const std::string& name);

struct ScoringPolicy {
  /// When true a missing answer scores as incorrect (confidence, if any,
  /// is kept as reported). When false unanswered records carry no
  /// correctness and are excluded from accuracy.
  bool punish_non_answer = false;
  ConfidenceSource confidence = ConfidenceSource::Answer;
};

struct ScoredRecord {
  std::string question_id;
  std::string model;
  Frame frame = Frame::Baseline;
  double temperature = 0.0;
  Domain domain = Domain::Culture;
  ReasoningType type = ReasoningType::Transitive;
  bool truth = false;
  Answer answer = Answer::Missing;
  std::optional<bool> correct;
  std::optional<double> confidence;
  std::vector<std::string> flags;
};

/// Join parsed responses with their questions and apply the scoring policy.
/// Unknown question ids raise DataError.
std::vector<ScoredRecord> score(const std::vector<BenchmarkQuestion>& questions,
                                const std::vector<ModelResponse>& parsed,
                                const ScoringPolicy& policy = {});

struct CalibrationSummary {
  std::size_t n = 0;            ///< records in the group
  std::size_t n_answered = 0;   ///< records carrying a correctness value
  std::size_t n_confident = 0;  ///< records carrying a confidence value
  double accuracy = 0.0;        ///< mean correctness over n_answered
  double mean_confidence = 0.0; ///< mean confidence over n_confident
  double bias = 0.0;            ///< mean_confidence - accuracy
};

CalibrationSummary summarize(const std::vector<ScoredRecord>& records);

enum class GroupBy { Model, Domain, QuestionType, Frame, Temperature };

std::map<std::string, CalibrationSummary> summarize_by(const std::vector<ScoredRecord>& records,
                                                       GroupBy key);

struct OverconfidenceTest {
  std::size_t n = 0;         ///< records with both confidence and correctness
  double bias = 0.0;         ///< mean(confidence - correctness)
  double se = 0.0;           ///< robust standard error of the mean
  double t_stat = 0.0;
  double p_value = 0.0;      ///< two-sided
  bool normal_approx = false;  ///< true when n >= 200 used the normal tail
};

/// One-sample test of mean(confidence - correctness) = 0 with a
/// heteroskedasticity-robust standard error.
OverconfidenceTest overconfidence_test(const std::vector<ScoredRecord>& records);

struct GradientFit {
  /// Ungrouped OLS of correctness on (confidence - 1) with HC0 errors.
  /// Coefficient order: {intercept, slope}. The intercept is the predicted
  /// accuracy of a fully confident answer.
  regress::FitResult fit;
  /// Coefficients from the frequency-weighted fit on unique confidence
  /// levels; identical to the ungrouped coefficients up to rounding.
  std::vector<double> grouped_coef;
  double grouped_delta = 0.0;  ///< max |ungrouped - grouped| coefficient gap
  std::size_t levels = 0;      ///< distinct confidence levels observed
};

/// Calibration gradient: slope > 1 means stated confidence moves more than
/// one-for-one with realized accuracy.
GradientFit fit_gradient(const std::vector<ScoredRecord>& records);

struct CurvePoint {
  double confidence = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

/// Accuracy at each distinct stated confidence level, for plotting.
std::vector<CurvePoint> calibration_curve(const std::vector<ScoredRecord>& records);

struct PairwiseConsistency {
  std::size_t run_a = 0;
  std::size_t run_b = 0;
  double same_correctness = 0.0;  ///< share of questions scored identically
  double answer_changed = 0.0;    ///< share of questions whose answer flipped
};

struct ReplicationReport {
  std::size_t n_runs = 0;
  std::size_t n_questions = 0;        ///< questions present in every run
  double consistent_fraction = 0.0;   ///< same correctness across all runs
  double answer_change_rate = 0.0;    ///< mean pairwise answer-change share
  std::vector<PairwiseConsistency> pairwise;
  /// question id -> per-run correctness pattern ('C' correct, 'W' wrong,
  /// 'M' missing), useful for drill-down.
  std::map<std::string, std::string> patterns;
};

/// Compare repeated runs of the same question set. Questions absent from any
/// run are dropped from the comparison.
ReplicationReport replication_consistency(const std::vector<std::vector<ScoredRecord>>& runs);

void save_scored(const std::vector<ScoredRecord>& records, const std::string& path,
                 const std::string& manifest_hash = "");
std::vector<ScoredRecord> load_scored(const std::string& path);

}  // namespace calibench
