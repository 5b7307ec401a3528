#include "calibench/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "calibench/errors.hpp"
#include "calibench/exposure.hpp"
#include "calibench/manifest.hpp"
#include "calibench/svg.hpp"
#include "calibench/text.hpp"
#include "calibench/welfare.hpp"

namespace calibench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

/// Rethrows module errors with the failing stage's name attached.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError(std::string("stage ") + name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string("stage ") + name + ": " + e.what());
  } catch (const ProviderError& e) {
    throw ProviderError(std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("pipeline config: ") + e.what());
  }

  PipelineConfig cfg;
  cfg.config_text = json_text;

  if (!j.contains("out_dir") || !j["out_dir"].is_string()) {
    throw DataError("pipeline config: out_dir is required");
  }
  cfg.out_dir = resolve(base_dir, j["out_dir"].get<std::string>());

  if (!j.contains("kb") || !j["kb"].is_object()) {
    throw DataError("pipeline config: kb section is required");
  }
  const json& kb = j["kb"];
  if (!kb.contains("predicates")) throw DataError("pipeline config: kb.predicates is required");
  cfg.predicates_path = resolve(base_dir, kb["predicates"].get<std::string>());
  if (!kb.contains("triples") || !kb["triples"].is_array() || kb["triples"].empty()) {
    throw DataError("pipeline config: kb.triples must list at least one file");
  }
  for (const auto& t : kb["triples"]) {
    cfg.triples_paths.push_back(resolve(base_dir, t.get<std::string>()));
  }
  if (kb.contains("default_domain")) {
    auto d = parse_domain(kb["default_domain"].get<std::string>());
    if (!d) throw DataError("pipeline config: unknown default_domain");
    cfg.default_domain = d;
  }
  if (kb.contains("imported_facts")) {
    cfg.imported_facts_path = resolve(base_dir, kb["imported_facts"].get<std::string>());
  }

  if (j.contains("closure")) {
    cfg.closure.max_composite_depth = j["closure"].value("max_composite_depth", 3);
    cfg.closure.max_iterations = j["closure"].value("max_iterations", 0);
  }

  if (!j.contains("questions") || !j["questions"].is_object()) {
    throw DataError("pipeline config: questions section is required");
  }
  const json& q = j["questions"];
  cfg.balance.quota = q.value("quota", std::size_t{0});
  if (cfg.balance.quota == 0) throw DataError("pipeline config: questions.quota must be positive");
  cfg.balance.seed = q.value("seed", std::uint64_t{0});
  cfg.balance.balance_truth = q.value("balance_truth", false);
  if (q.contains("domains")) {
    cfg.balance.domains.clear();
    for (const auto& d : q["domains"]) {
      auto dom = parse_domain(d.get<std::string>());
      if (!dom) throw DataError("pipeline config: unknown domain in questions.domains");
      cfg.balance.domains.push_back(*dom);
    }
  }
  if (q.contains("types")) {
    cfg.balance.types.clear();
    for (const auto& t : q["types"]) {
      auto ty = parse_reasoning_type(t.get<std::string>());
      if (!ty) throw DataError("pipeline config: unknown type in questions.types");
      cfg.balance.types.push_back(*ty);
    }
  }

  if (!j.contains("ask") || !j["ask"].is_object()) {
    throw DataError("pipeline config: ask section is required");
  }
  const json& ask = j["ask"];
  if (!ask.contains("models") || !ask["models"].is_array() || ask["models"].empty()) {
    throw DataError("pipeline config: ask.models must list at least one model");
  }
  for (const auto& m : ask["models"]) cfg.batch.models.push_back(m.get<std::string>());
  if (ask.contains("frames")) {
    cfg.batch.frames.clear();
    for (const auto& f : ask["frames"]) {
      auto frame = parse_frame(f.get<std::string>());
      if (!frame) throw DataError("pipeline config: unknown frame in ask.frames");
      cfg.batch.frames.push_back(*frame);
    }
  }
  if (ask.contains("temperatures")) {
    cfg.batch.temperatures = ask["temperatures"].get<std::vector<double>>();
  }
  cfg.batch.parallelism = ask.value("parallelism", 1);
  cfg.batch.max_retries = ask.value("max_retries", 3);
  cfg.batch.backoff_base_ms = ask.value("backoff_base_ms", 250);
  cfg.batch.rate_limit_per_s = ask.value("rate_limit_per_s", 0.0);
  if (ask.contains("cache_dir")) {
    std::string dir = ask["cache_dir"].get<std::string>();
    cfg.batch.cache_dir = dir.empty() ? "" : resolve(base_dir, dir);
  } else {
    cfg.batch.cache_dir = (fs::path(cfg.out_dir) / "cache").string();
  }
  if (ask.contains("mock")) {
    const json& m = ask["mock"];
    cfg.mock.accuracy = m.value("accuracy", 0.5);
    cfg.mock.seed = m.value("seed", std::uint64_t{0});
    cfg.mock.error_rate = m.value("error_rate", 0.0);
    if (m.contains("confidence_percent")) {
      cfg.mock.confidence = MockConfidence::point(m["confidence_percent"].get<int>());
    }
    if (m.contains("confidence_choices")) {
      cfg.mock.confidence.choices.clear();
      for (const auto& c : m["confidence_choices"]) {
        cfg.mock.confidence.choices.emplace_back(c.at(0).get<int>(), c.at(1).get<double>());
      }
    }
  }
  if (ask.contains("http")) {
    const json& h = ask["http"];
    cfg.http.base_url = h.value("base_url", cfg.http.base_url);
    cfg.http.path = h.value("path", cfg.http.path);
    cfg.http.api_key_env = h.value("api_key_env", cfg.http.api_key_env);
    cfg.http.timeout_seconds = h.value("timeout_seconds", cfg.http.timeout_seconds);
    if (h.contains("no_temperature_prefixes")) {
      cfg.http.no_temperature_prefixes =
          h["no_temperature_prefixes"].get<std::vector<std::string>>();
    }
  }

  if (j.contains("scoring")) {
    cfg.scoring.punish_non_answer = j["scoring"].value("punish_non_answer", false);
    if (j["scoring"].contains("confidence")) {
      auto src = parse_confidence_source(j["scoring"]["confidence"].get<std::string>());
      if (!src) throw DataError("pipeline config: unknown scoring.confidence");
      cfg.scoring.confidence = *src;
    }
  }

  if (j.contains("similarity")) {
    cfg.similarity_enabled = j["similarity"].value("enabled", true);
    cfg.similarity.token_match_threshold = j["similarity"].value("threshold", 0.5);
    if (j["similarity"].contains("function")) {
      auto f = parse_sim_function(j["similarity"]["function"].get<std::string>());
      if (!f) throw DataError("pipeline config: unknown similarity.function");
      cfg.similarity.sim_function = *f;
    }
  }

  if (j.contains("exposure")) {
    if (!j["exposure"].contains("data")) {
      throw DataError("pipeline config: exposure.data is required when exposure is configured");
    }
    cfg.exposure_data_path = resolve(base_dir, j["exposure"]["data"].get<std::string>());
    cfg.exposure_spec = j["exposure"].value("spec", std::string("fig2"));
  }

  if (j.contains("welfare")) {
    cfg.welfare_enabled = true;
    cfg.welfare_pi = j["welfare"].value("pi", 2.0);
    cfg.welfare_gamma = j["welfare"].value("gamma", 1.0);
    if (j["welfare"].contains("p_values")) {
      cfg.welfare_p_values = j["welfare"]["p_values"].get<std::vector<double>>();
    }
    if (j["welfare"].contains("b_values")) {
      cfg.welfare_b_values = j["welfare"]["b_values"].get<std::vector<double>>();
    }
    if (cfg.welfare_p_values.empty() || cfg.welfare_b_values.empty()) {
      throw DataError("pipeline config: welfare.p_values and welfare.b_values are required");
    }
  }

  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pipeline config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pipeline_config(buf.str(), fs::path(path).parent_path().string());
}

namespace {

json summary_to_json(const CalibrationSummary& s) {
  return json{{"n", s.n},
              {"n_answered", s.n_answered},
              {"n_confident", s.n_confident},
              {"accuracy", s.accuracy},
              {"mean_confidence", s.mean_confidence},
              {"bias", s.bias}};
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  PipelineResult result;
  result.out_dir = config.out_dir;
  fs::create_directories(config.out_dir);
  auto artifact = [&](const std::string& name) {
    std::string path = (fs::path(config.out_dir) / name).string();
    result.artifacts.push_back(path);
    return path;
  };

  // Manifest covers everything deterministic about this run.
  RunManifest manifest;
  {
    json snapshot = json::parse(config.config_text);
    manifest.config_snapshot = snapshot.dump();
  }
  manifest.input_hashes["predicates:" + config.predicates_path] =
      stage("manifest", [&] { return hash_file(config.predicates_path); });
  for (const auto& t : config.triples_paths) {
    manifest.input_hashes["triples:" + t] = stage("manifest", [&] { return hash_file(t); });
  }
  if (config.imported_facts_path) {
    manifest.input_hashes["imported:" + *config.imported_facts_path] =
        stage("manifest", [&] { return hash_file(*config.imported_facts_path); });
  }
  if (config.exposure_data_path) {
    manifest.input_hashes["exposure:" + *config.exposure_data_path] =
        stage("manifest", [&] { return hash_file(*config.exposure_data_path); });
  }
  manifest.seeds["questions"] = config.balance.seed;
  manifest.seeds["mock"] = config.mock.seed;
  manifest.created_at = now_rfc3339();
  result.manifest_hash = manifest.hash();
  save_manifest(manifest, artifact("manifest.json"));
  const std::string& mh = result.manifest_hash;

  // kb
  KnowledgeBase kb;
  ImportReport import_report;
  stage("kb", [&] {
    load_predicate_manifest(kb, config.predicates_path);
    for (const auto& path : config.triples_paths) {
      ImportReport r = import_triples_file(kb, path, config.default_domain);
      import_report.lines_read += r.lines_read;
      import_report.kept += r.kept;
      import_report.duplicates += r.duplicates;
      import_report.rejected.insert(import_report.rejected.end(), r.rejected.begin(),
                                    r.rejected.end());
      import_report.auto_registered.insert(import_report.auto_registered.end(),
                                           r.auto_registered.begin(), r.auto_registered.end());
    }
    save_kb(kb, artifact("kb.json"));
    return 0;
  });

  // derive
  std::vector<DerivedFact> imported;
  if (config.imported_facts_path) {
    imported = stage("derive", [&] { return load_derived_facts(*config.imported_facts_path); });
  }
  Closure closure = stage("derive", [&] { return close(kb, config.closure, imported); });
  result.closure_report = closure.report;
  stage("derive", [&] {
    save_closure(closure, artifact("closure.jsonl"), mh);
    return 0;
  });

  // qgen
  BalanceResult balanced = stage("qgen", [&] {
    auto questions = generate_questions(kb, closure);
    return balance_sample(questions, config.balance);
  });
  result.questions = balanced.sample.size();
  result.shortfalls = balanced.shortfalls;
  stage("qgen", [&] {
    save_questions(balanced.sample, artifact("questions.jsonl"), mh);
    return 0;
  });

  // ask
  BatchResult batch = stage("ask", [&] {
    ProviderRegistry registry;
    bool any_mock = false, any_live = false;
    for (const auto& m : config.batch.models) {
      (text::starts_with_ci(m, "mock") ? any_mock : any_live) = true;
    }
    if (any_mock) {
      registry.add(std::make_shared<MockProvider>(config.mock, balanced.sample));
    }
    if (any_live) {
      registry.add(std::make_shared<HttpProvider>(config.http));
    }
    return run_batch(balanced.sample, config.batch, registry);
  });
  result.batch_report = batch.report;
  stage("ask", [&] {
    save_responses(batch.responses, artifact("responses.jsonl"), mh);
    return 0;
  });

  // parse
  std::vector<ModelResponse> parsed;
  stage("parse", [&] {
    parsed.reserve(batch.responses.size());
    for (const auto& raw : batch.responses) parsed.push_back(parse_response(raw));
    save_parsed(parsed, artifact("parsed.jsonl"), mh);
    return 0;
  });
  auto quality = parse_quality(batch.responses, parsed);

  // calibrate
  std::vector<ScoredRecord> scored = stage("calibrate", [&] {
    auto s = score(balanced.sample, parsed, config.scoring);
    save_scored(s, artifact("scored.jsonl"), mh);
    return s;
  });
  result.summary = summarize(scored);
  result.overconfidence = overconfidence_test(scored);
  try {
    result.gradient = fit_gradient(scored);
  } catch (const DataError&) {
    result.gradient.reset();  // too few records or a single confidence level
  }
  std::vector<CurvePoint> curve = calibration_curve(scored);

  stage("calibrate", [&] {
    json metrics;
    metrics["manifest"] = mh;
    metrics["import"] = {{"lines_read", import_report.lines_read},
                         {"kept", import_report.kept},
                         {"duplicates", import_report.duplicates},
                         {"rejected", import_report.rejected.size()},
                         {"auto_registered", import_report.auto_registered}};
    json closure_counts = json::object();
    for (const auto& [type, count] : closure.report.counts) {
      closure_counts[to_string(type)] = count;
    }
    metrics["closure"] = {{"base_count", closure.report.base_count},
                          {"derived_counts", closure_counts},
                          {"iterations", closure.report.iterations},
                          {"truncated", closure.report.truncated}};
    metrics["questions"] = {{"sampled", balanced.sample.size()},
                            {"shortfalls", balanced.shortfalls.size()}};
    metrics["batch"] = {{"total", batch.report.total},
                        {"from_cache", batch.report.from_cache},
                        {"live_calls", batch.report.live_calls},
                        {"retries", batch.report.retries},
                        {"errors", batch.report.errors}};
    metrics["summary"] = summary_to_json(result.summary);
    json by_model = json::object();
    for (const auto& [model, s] : summarize_by(scored, GroupBy::Model)) {
      by_model[model] = summary_to_json(s);
    }
    metrics["by_model"] = by_model;
    metrics["overconfidence"] = {{"n", result.overconfidence.n},
                                 {"bias", result.overconfidence.bias},
                                 {"se", result.overconfidence.se},
                                 {"t_stat", result.overconfidence.t_stat},
                                 {"p_value", result.overconfidence.p_value},
                                 {"normal_approx", result.overconfidence.normal_approx}};
    if (result.gradient) {
      metrics["gradient"] = {{"intercept", result.gradient->fit.coef[0]},
                             {"slope", result.gradient->fit.coef[1]},
                             {"intercept_se", result.gradient->fit.se[0]},
                             {"slope_se", result.gradient->fit.se[1]},
                             {"levels", result.gradient->levels},
                             {"grouped_delta", result.gradient->grouped_delta},
                             {"n", result.gradient->fit.n}};
    }
    json quality_json = json::object();
    for (const auto& [key, g] : quality) {
      quality_json[key] = {{"n", g.n},
                           {"missing_answer", g.missing_answer},
                           {"missing_confidence", g.missing_confidence},
                           {"ties", g.ties},
                           {"conflicts", g.conflicts},
                           {"provider_errors", g.provider_errors}};
    }
    metrics["parse_quality"] = quality_json;
    std::ofstream out(artifact("metrics.json"));
    if (!out) throw DataError("cannot write metrics.json");
    out << metrics.dump(2) << "\n";

    SvgPlotOptions opts;
    opts.title = "Stated confidence vs accuracy";
    save_calibration_svg(curve, artifact("calibration.svg"), opts, mh);
    return 0;
  });

  // similarity
  if (config.similarity_enabled) {
    stage("similarity", [&] {
      auto rows = corpus_similarity(balanced.sample, parsed, kb, config.similarity);
      save_similarity_csv(rows, artifact("similarity.csv"), mh);
      return 0;
    });
  }

  // exposure
  if (config.exposure_data_path) {
    stage("exposure", [&] {
      auto records = load_exposure_csv(*config.exposure_data_path);
      auto spec_result = run_named_spec(records, config.exposure_spec);
      save_exposure_results_csv(spec_result, artifact("exposure.csv"), mh);
      return 0;
    });
  }

  // welfare
  if (config.welfare_enabled) {
    stage("welfare", [&] {
      auto grid = welfare_grid(config.welfare_pi, CostSpec::exponential(config.welfare_gamma),
                               config.welfare_p_values, config.welfare_b_values);
      save_welfare_grid_csv(grid, artifact("welfare.csv"), mh);
      return 0;
    });
  }

  return result;
}

}  // namespace calibench
