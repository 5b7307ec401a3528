#pragma once

/// End-to-end run driver: knowledge base -> derived facts -> balanced
/// question set -> provider batch -> parsed responses -> calibration
/// metrics (plus similarity, exposure, and welfare stages when configured).
/// Every artifact lands in one output directory and references the run
/// manifest hash.
///
/// Configuration is a single JSON document:
/// {
///   "kb": {
///     "predicates": "predicates.json",
///     "triples": ["triples.txt", ...],
///     "default_domain": "Geography",        // optional
///     "imported_facts": "temporal.jsonl"    // optional, pre-derived facts
///   },
///   "closure": { "max_composite_depth": 3 },
///   "questions": {
///     "quota": 2, "seed": 42, "balance_truth": false,
///     "domains": ["Culture", ...],          // optional subset
///     "types": ["Negation", ...]            // optional subset
///   },
///   "ask": {
///     "models": ["mock-a"],
///     "frames": ["baseline"],
///     "temperatures": [0.0],
///     "parallelism": 4, "max_retries": 3,
///     "cache_dir": "cache",                 // optional; default <out_dir>/cache
///     "mock": { "accuracy": 0.35, "confidence_percent": 94,
///               "seed": 7, "error_rate": 0.0 },
///     "http": { "base_url": "...", "api_key_env": "OPENAI_API_KEY" }
///   },
///   "scoring": { "punish_non_answer": false, "confidence": "answer" },
///   "similarity": { "enabled": false, "threshold": 0.5,
///                   "function": "jaccard_tokens" },
///   "exposure": { "data": "experiment.csv", "spec": "fig2" },   // optional
///   "welfare": { "pi": 2.0, "gamma": 1.0,
///                "p_values": [...], "b_values": [...] },        // optional
///   "out_dir": "artifacts"
/// }
/// Relative paths resolve against the config file's directory.

#include <optional>
#include <string>
#include <vector>

#include "calibench/calibration.hpp"
#include "calibench/gateway.hpp"
#include "calibench/inference.hpp"
#include "calibench/kb.hpp"
#include "calibench/qgen.hpp"
#include "calibench/similarity.hpp"

namespace calibench {

struct PipelineConfig {
  // kb
  std::string predicates_path;
  std::vector<std::string> triples_paths;
  std::optional<Domain> default_domain;
  std::optional<std::string> imported_facts_path;
  // closure
  ClosureOptions closure;
  // questions
  BalanceOptions balance;
  // ask
  BatchSpec batch;
  MockProfile mock;
  HttpProviderConfig http;
  // scoring
  ScoringPolicy scoring;
  // optional stages
  bool similarity_enabled = false;
  SimilarityConfig similarity;
  std::optional<std::string> exposure_data_path;
  std::string exposure_spec = "fig2";
  bool welfare_enabled = false;
  double welfare_pi = 2.0;
  double welfare_gamma = 1.0;
  std::vector<double> welfare_p_values;
  std::vector<double> welfare_b_values;
  // output
  std::string out_dir;
  /// Original config text, preserved verbatim for the manifest snapshot.
  std::string config_text;
};

/// Parses and validates a config document. `base_dir` anchors relative
/// paths; pass the config file's directory.
PipelineConfig parse_pipeline_config(const std::string& json_text, const std::string& base_dir);
PipelineConfig load_pipeline_config(const std::string& path);

struct PipelineResult {
  std::string manifest_hash;
  std::string out_dir;
  ClosureReport closure_report;
  std::size_t questions = 0;
  std::vector<CellShortfall> shortfalls;
  BatchReport batch_report;
  CalibrationSummary summary;
  OverconfidenceTest overconfidence;
  std::optional<GradientFit> gradient;  ///< absent when too few levels
  std::vector<std::string> artifacts;   ///< paths written, in emit order
};

/// Runs every configured stage. Any stage failure is rethrown with the
/// stage name prefixed so operators can see where a run died.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace calibench
