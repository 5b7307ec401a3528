// Command-line front end: each subcommand wraps one library stage, and
// `pipeline` chains them all from a single JSON config.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calibench/calibration.hpp"
#include "calibench/errors.hpp"
#include "calibench/exposure.hpp"
#include "calibench/gateway.hpp"
#include "calibench/inference.hpp"
#include "calibench/kb.hpp"
#include "calibench/parser.hpp"
#include "calibench/pipeline.hpp"
#include "calibench/prompts.hpp"
#include "calibench/qgen.hpp"
#include "calibench/similarity.hpp"
#include "calibench/svg.hpp"
#include "calibench/text.hpp"
#include "calibench/welfare.hpp"

namespace {

using namespace calibench;

Domain require_domain(const std::string& name) {
  auto d = parse_domain(name);
  if (!d) throw UsageError("unknown domain: " + name);
  return *d;
}

ReasoningType require_type(const std::string& name) {
  auto t = parse_reasoning_type(name);
  if (!t) throw UsageError("unknown reasoning type: " + name);
  return *t;
}

Frame require_frame(const std::string& name) {
  auto f = parse_frame(name);
  if (!f) throw UsageError("unknown frame: " + name);
  return *f;
}

void print_import_report(const ImportReport& r) {
  std::printf("lines read      %zu\n", r.lines_read);
  std::printf("triples kept    %zu\n", r.kept);
  std::printf("duplicates      %zu\n", r.duplicates);
  std::printf("rejected        %zu\n", r.rejected.size());
  for (const auto& rej : r.rejected) {
    std::printf("  line %zu: %s\n", rej.line, rej.reason.c_str());
  }
  if (!r.auto_registered.empty()) {
    std::printf("auto-registered predicates (%zu):", r.auto_registered.size());
    for (const auto& p : r.auto_registered) std::printf(" %s", p.c_str());
    std::printf("\n");
  }
}

void print_closure_report(const ClosureReport& r) {
  std::printf("base facts      %zu\n", r.base_count);
  for (const auto& [type, count] : r.counts) {
    std::printf("%-15s %zu\n", to_string(type).c_str(), count);
  }
  std::printf("iterations      %zu\n", r.iterations);
  std::printf("truncated       %s\n", r.truncated ? "yes" : "no");
}

void print_summary(const char* label, const CalibrationSummary& s) {
  std::printf("%-24s n=%-6zu answered=%-6zu accuracy=%.4f confidence=%.4f bias=%+.4f\n", label,
              s.n, s.n_answered, s.accuracy, s.mean_confidence, s.bias);
}

void print_regression(const RegressionResult& r) {
  std::printf("outcome=%s moderator=%s n=%zu clusters=(%zu,%zu) R2=%.4f\n",
              to_string(r.outcome).c_str(), to_string(r.moderator).c_str(), r.n,
              r.clusters_participant, r.clusters_question, r.r_squared);
  for (const auto& c : r.coefficients) {
    std::printf("  %-28s %+.4f  (se %.4f, t %+.2f, p %.4g)\n", c.name.c_str(), c.estimate, c.se,
                c.t_stat, c.p_value);
  }
  for (const auto& note : r.notes) std::printf("  note: %s\n", note.c_str());
}

void setup_kb(CLI::App& app) {
  auto* kb_cmd = app.add_subcommand("kb", "Build a knowledge base from triple files");
  auto* import = kb_cmd->add_subcommand("import", "Import triples against a predicate manifest");
  struct Opts {
    std::vector<std::string> triples;
    std::string predicates, out, default_domain;
  };
  auto opts = std::make_shared<Opts>();
  import->add_option("--triples", opts->triples, "Triple file(s): subject|predicate|object[|domain]")
      ->required();
  import->add_option("--predicates", opts->predicates, "Predicate manifest (JSON)")->required();
  import->add_option("--out", opts->out, "Output knowledge-base file")->required();
  import->add_option("--default-domain", opts->default_domain,
                     "Domain for triples that do not carry one");
  import->callback([opts] {
    KnowledgeBase kb;
    load_predicate_manifest(kb, opts->predicates);
    std::optional<Domain> dom;
    if (!opts->default_domain.empty()) dom = require_domain(opts->default_domain);
    ImportReport total;
    for (const auto& path : opts->triples) {
      ImportReport r = import_triples_file(kb, path, dom);
      total.lines_read += r.lines_read;
      total.kept += r.kept;
      total.duplicates += r.duplicates;
      total.rejected.insert(total.rejected.end(), r.rejected.begin(), r.rejected.end());
      total.auto_registered.insert(total.auto_registered.end(), r.auto_registered.begin(),
                                   r.auto_registered.end());
    }
    save_kb(kb, opts->out);
    print_import_report(total);
    std::printf("wrote %s (%zu triples)\n", opts->out.c_str(), kb.size());
  });
  kb_cmd->require_subcommand(1);
}

void setup_derive(CLI::App& app) {
  auto* cmd = app.add_subcommand("derive", "Expand a knowledge base into derived facts");
  struct Opts {
    std::string kb, out, imported;
    int depth = 3;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--kb", opts->kb, "Knowledge-base file from `kb import`")->required();
  cmd->add_option("--depth", opts->depth, "Maximum chained derivation steps")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", opts->out, "Output derived-facts file (JSONL)")->required();
  cmd->add_option("--imported", opts->imported,
                  "Pre-derived facts to seed the closure (e.g. time-anchored facts)");
  cmd->callback([opts] {
    KnowledgeBase kb = load_kb(opts->kb);
    std::vector<DerivedFact> imported;
    if (!opts->imported.empty()) imported = load_derived_facts(opts->imported);
    ClosureOptions copts;
    copts.max_composite_depth = opts->depth;
    Closure closure = close(kb, copts, imported);
    save_closure(closure, opts->out);
    print_closure_report(closure.report);
    std::printf("wrote %s (%zu facts)\n", opts->out.c_str(), closure.facts.size());
  });
}

void setup_qgen(CLI::App& app) {
  auto* cmd = app.add_subcommand("qgen", "Sample a balanced question set from derived facts");
  struct Opts {
    std::string closure, kb, out;
    std::size_t quota = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> domains, types;
    bool balance_truth = false;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--closure", opts->closure, "Derived-facts file from `derive`")->required();
  cmd->add_option("--kb", opts->kb, "Knowledge base (for predicate surface forms)");
  cmd->add_option("--quota", opts->quota, "Questions per (domain, type) cell")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opts->seed, "Sampling seed");
  cmd->add_option("--domains", opts->domains, "Domains to include (default: all ten)");
  cmd->add_option("--types", opts->types, "Reasoning types to include (default: all five)");
  cmd->add_flag("--balance-truth", opts->balance_truth, "Aim for 50/50 true/false per cell");
  cmd->add_option("--out", opts->out, "Output question file (JSONL)")->required();
  cmd->callback([opts] {
    KnowledgeBase kb;
    if (!opts->kb.empty()) kb = load_kb(opts->kb);
    Closure closure;
    closure.facts = load_derived_facts(opts->closure);
    auto questions = generate_questions(kb, closure);
    BalanceOptions bopts;
    bopts.quota = opts->quota;
    bopts.seed = opts->seed;
    bopts.balance_truth = opts->balance_truth;
    if (!opts->domains.empty()) {
      bopts.domains.clear();
      for (const auto& d : opts->domains) bopts.domains.push_back(require_domain(d));
    }
    if (!opts->types.empty()) {
      bopts.types.clear();
      for (const auto& t : opts->types) bopts.types.push_back(require_type(t));
    }
    BalanceResult result = balance_sample(questions, bopts);
    save_questions(result.sample, opts->out);
    std::printf("candidates      %zu\n", questions.size());
    std::printf("sampled         %zu\n", result.sample.size());
    for (const auto& s : result.shortfalls) {
      std::printf("shortfall       %s/%s: %zu of %zu\n", to_string(s.domain).c_str(),
                  to_string(s.type).c_str(), s.available, s.requested);
    }
    std::printf("wrote %s\n", opts->out.c_str());
  });
}

void setup_ask(CLI::App& app) {
  auto* cmd = app.add_subcommand("ask", "Send questions to model providers");
  struct Opts {
    std::string questions, out, cache_dir, base_url, api_key_env;
    std::vector<std::string> models, frames;
    std::vector<double> temperatures;
    int parallelism = 1, max_retries = 3;
    double rate_limit = 0.0;
    double mock_accuracy = 0.5, mock_error_rate = 0.0;
    int mock_confidence = 90;
    std::uint64_t mock_seed = 0;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--questions", opts->questions, "Question file from `qgen`")->required();
  cmd->add_option("--model", opts->models, "Model id(s); ids starting with 'mock' use the mock provider")
      ->required();
  cmd->add_option("--frame", opts->frames, "Prompt frame(s): baseline, yes-frame, no-frame");
  cmd->add_option("--temperature", opts->temperatures, "Sampling temperature(s) in [0,2]");
  cmd->add_option("--out", opts->out, "Output raw-response file (JSONL)")->required();
  cmd->add_option("--cache", opts->cache_dir, "Response cache directory");
  cmd->add_option("--parallelism", opts->parallelism, "Concurrent in-flight requests")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-retries", opts->max_retries, "Retries per transient failure");
  cmd->add_option("--rate-limit", opts->rate_limit, "Max live requests per second (0 = off)");
  cmd->add_option("--base-url", opts->base_url, "HTTP provider base URL");
  cmd->add_option("--api-key-env", opts->api_key_env, "Environment variable holding the API key");
  cmd->add_option("--mock-accuracy", opts->mock_accuracy, "Mock provider answer accuracy");
  cmd->add_option("--mock-confidence", opts->mock_confidence, "Mock provider stated percent");
  cmd->add_option("--mock-seed", opts->mock_seed, "Mock provider seed");
  cmd->add_option("--mock-error-rate", opts->mock_error_rate, "Mock provider failure fraction");
  cmd->callback([opts] {
    auto questions = load_questions(opts->questions);
    BatchSpec spec;
    spec.models = opts->models;
    if (!opts->frames.empty()) {
      spec.frames.clear();
      for (const auto& f : opts->frames) spec.frames.push_back(require_frame(f));
    }
    if (!opts->temperatures.empty()) spec.temperatures = opts->temperatures;
    spec.parallelism = opts->parallelism;
    spec.max_retries = opts->max_retries;
    spec.rate_limit_per_s = opts->rate_limit;
    spec.cache_dir = opts->cache_dir;

    ProviderRegistry registry;
    bool any_mock = false, any_live = false;
    for (const auto& m : spec.models) (text::starts_with_ci(m, "mock") ? any_mock : any_live) = true;
    if (any_mock) {
      MockProfile profile;
      profile.accuracy = opts->mock_accuracy;
      profile.confidence = MockConfidence::point(opts->mock_confidence);
      profile.seed = opts->mock_seed;
      profile.error_rate = opts->mock_error_rate;
      registry.add(std::make_shared<MockProvider>(profile, questions));
    }
    if (any_live) {
      HttpProviderConfig config;
      if (!opts->base_url.empty()) config.base_url = opts->base_url;
      if (!opts->api_key_env.empty()) config.api_key_env = opts->api_key_env;
      registry.add(std::make_shared<HttpProvider>(config));
    }

    BatchResult result = run_batch(questions, spec, registry);
    save_responses(result.responses, opts->out);
    std::printf("completions     %zu\n", result.report.total);
    std::printf("from cache      %zu\n", result.report.from_cache);
    std::printf("live calls      %zu\n", result.report.live_calls);
    std::printf("retries         %zu\n", result.report.retries);
    std::printf("errors          %zu\n", result.report.errors);
    std::printf("wrote %s\n", opts->out.c_str());
  });
}

void setup_parse(CLI::App& app) {
  auto* cmd = app.add_subcommand("parse", "Extract answers and confidence from raw responses");
  struct Opts { std::string responses, out; };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--responses", opts->responses, "Raw-response file from `ask`")->required();
  cmd->add_option("--out", opts->out, "Output parsed-response file (JSONL)")->required();
  cmd->callback([opts] {
    auto raws = load_responses(opts->responses);
    std::vector<ModelResponse> parsed;
    parsed.reserve(raws.size());
    for (const auto& raw : raws) parsed.push_back(parse_response(raw));
    save_parsed(parsed, opts->out);
    for (const auto& [key, g] : parse_quality(raws, parsed)) {
      std::printf("%-40s n=%-5zu no-answer=%-4zu no-conf=%-4zu ties=%-3zu conflicts=%-3zu errors=%zu\n",
                  key.c_str(), g.n, g.missing_answer, g.missing_confidence, g.ties, g.conflicts,
                  g.provider_errors);
    }
    std::printf("wrote %s\n", opts->out.c_str());
  });
}

void setup_calibrate(CLI::App& app) {
  auto* cmd = app.add_subcommand("calibrate", "Score parsed responses and measure calibration");
  struct Opts {
    std::string questions, parsed, out, by, confidence = "answer";
    bool punish_non_answer = false;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--questions", opts->questions, "Question file from `qgen`")->required();
  cmd->add_option("--parsed", opts->parsed, "Parsed-response file from `parse`")->required();
  cmd->add_option("--out", opts->out, "Output scored-record file (JSONL)")->required();
  cmd->add_option("--confidence", opts->confidence,
                  "Confidence slot to score: answer, facts, reasoning, derived");
  cmd->add_flag("--punish-non-answer", opts->punish_non_answer,
                "Count missing answers as incorrect");
  cmd->add_option("--by", opts->by, "Also summarize by: model, domain, type, frame, temperature");
  cmd->callback([opts] {
    auto questions = load_questions(opts->questions);
    auto parsed = load_parsed(opts->parsed);
    ScoringPolicy policy;
    policy.punish_non_answer = opts->punish_non_answer;
    auto src = parse_confidence_source(opts->confidence);
    if (!src) throw UsageError("unknown confidence source: " + opts->confidence);
    policy.confidence = *src;
    auto scored = score(questions, parsed, policy);
    save_scored(scored, opts->out);

    print_summary("overall", summarize(scored));
    if (!opts->by.empty()) {
      GroupBy key;
      if (opts->by == "model") key = GroupBy::Model;
      else if (opts->by == "domain") key = GroupBy::Domain;
      else if (opts->by == "type") key = GroupBy::QuestionType;
      else if (opts->by == "frame") key = GroupBy::Frame;
      else if (opts->by == "temperature") key = GroupBy::Temperature;
      else throw UsageError("unknown group key: " + opts->by);
      for (const auto& [label, s] : summarize_by(scored, key)) print_summary(label.c_str(), s);
    }
    OverconfidenceTest oc = overconfidence_test(scored);
    std::printf("overconfidence  bias=%+.4f se=%.4f t=%+.2f p=%.4g (n=%zu, %s)\n", oc.bias, oc.se,
                oc.t_stat, oc.p_value, oc.n, oc.normal_approx ? "normal" : "t");
    try {
      GradientFit g = fit_gradient(scored);
      std::printf("gradient        slope=%.4f (se %.4f), full-confidence accuracy=%.4f (se %.4f), levels=%zu\n",
                  g.fit.coef[1], g.fit.se[1], g.fit.coef[0], g.fit.se[0], g.levels);
    } catch (const DataError& e) {
      std::printf("gradient        unavailable: %s\n", e.what());
    }
    std::printf("wrote %s\n", opts->out.c_str());
  });
}

void setup_similarity(CLI::App& app) {
  auto* cmd = app.add_subcommand("similarity",
                                 "Compare stated knowledge and reasoning against question evidence");
  struct Opts {
    std::string questions, parsed, out, predicates, function = "jaccard_tokens";
    double threshold = 0.5;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--questions", opts->questions, "Question file from `qgen`")->required();
  cmd->add_option("--parsed", opts->parsed, "Parsed-response file from `parse`")->required();
  cmd->add_option("--out", opts->out, "Output score CSV")->required();
  cmd->add_option("--predicates", opts->predicates, "Predicate manifest (improves triple extraction)");
  cmd->add_option("--threshold", opts->threshold, "Token-similarity threshold for a match");
  cmd->add_option("--function", opts->function, "jaccard_tokens or overlap_tokens");
  cmd->callback([opts] {
    auto questions = load_questions(opts->questions);
    auto parsed = load_parsed(opts->parsed);
    KnowledgeBase kb;
    if (!opts->predicates.empty()) load_predicate_manifest(kb, opts->predicates);
    SimilarityConfig cfg;
    cfg.token_match_threshold = opts->threshold;
    auto fn = parse_sim_function(opts->function);
    if (!fn) throw UsageError("unknown similarity function: " + opts->function);
    cfg.sim_function = *fn;
    auto rows = corpus_similarity(questions, parsed, kb, cfg);
    save_similarity_csv(rows, opts->out);
    double fact_avg = 0, fact_max = 0, reasoning = 0;
    std::size_t n_avg = 0, n_max = 0, n_reason = 0;
    for (const auto& r : rows) {
      if (r.scores.fact_avg) { fact_avg += *r.scores.fact_avg; ++n_avg; }
      if (r.scores.fact_max) { fact_max += *r.scores.fact_max; ++n_max; }
      if (r.scores.reasoning) { reasoning += *r.scores.reasoning; ++n_reason; }
    }
    std::printf("rows            %zu\n", rows.size());
    if (n_avg) std::printf("mean fact_avg   %.4f (n=%zu)\n", fact_avg / n_avg, n_avg);
    if (n_max) std::printf("mean fact_max   %.4f (n=%zu)\n", fact_max / n_max, n_max);
    if (n_reason) std::printf("mean reasoning  %.4f (n=%zu)\n", reasoning / n_reason, n_reason);
    std::printf("wrote %s\n", opts->out.c_str());
  });
}

void setup_exposure(CLI::App& app) {
  auto* cmd = app.add_subcommand("exposure", "Analyze a pre/post model-exposure experiment");
  struct Opts { std::string data, spec = "fig2", out; };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--data", opts->data, "Experiment CSV")->required();
  cmd->add_option("--spec", opts->spec, "fig2, table3, continuous, or subsample4x4");
  cmd->add_option("--out", opts->out, "Output results CSV")->required();
  cmd->callback([opts] {
    auto records = load_exposure_csv(opts->data);
    NamedSpecResult result = run_named_spec(records, opts->spec);
    save_exposure_results_csv(result, opts->out);
    for (const auto& r : result.regressions) print_regression(r);
    if (result.subgroup) {
      std::printf("subgroup summary over %zu records with model confidence\n",
                  result.subgroup->n_total);
    }
    AnovaResult anova = randomization_check(records, BaselineMeasure::PreConf);
    std::printf("randomization   F=%.4f (df %g, %g) p=%.4g on baseline confidence\n", anova.f_stat,
                anova.df_between, anova.df_within, anova.p_value);
    std::printf("wrote %s\n", opts->out.c_str());
  });
}

CostSpec parse_cost_arg(const std::string& arg) {
  if (text::starts_with_ci(arg, "exp:")) {
    double gamma = 0.0;
    try {
      gamma = std::stod(arg.substr(4));
    } catch (const std::exception&) {
      throw UsageError("bad cost spec: " + arg);
    }
    return CostSpec::exponential(gamma);
  }
  throw UsageError("unsupported cost spec '" + arg + "' (expected exp:<gamma>)");
}

void setup_welfare(CLI::App& app) {
  auto* cmd = app.add_subcommand("welfare", "Welfare effects of accuracy and bias changes");
  struct Opts {
    double p = 0.6, b = 0.1, pi = 2.0, dp = 0.05, alpha = 1.0;
    std::string cost = "exp:1.0", out;
    std::vector<double> p_list, b_list;
    bool grid = false;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--p", opts->p, "True success probability");
  cmd->add_option("--b", opts->b, "Belief bias (perceived minus true)");
  cmd->add_option("--pi", opts->pi, "Payoff on success");
  cmd->add_option("--cost", opts->cost, "Effort cost, exp:<gamma>");
  cmd->add_option("--dp", opts->dp, "Accuracy change for the term report");
  cmd->add_option("--alpha", opts->alpha, "Bias change per unit accuracy change (>= 1)");
  cmd->add_flag("--grid", opts->grid, "Sweep (p, b) combinations and emit CSV");
  cmd->add_option("--p-list", opts->p_list, "Grid p values");
  cmd->add_option("--b-list", opts->b_list, "Grid b values");
  cmd->add_option("--out", opts->out, "Grid CSV path (grid mode)");
  cmd->callback([opts] {
    CostSpec cost = parse_cost_arg(opts->cost);
    if (opts->grid) {
      if (opts->p_list.empty() || opts->b_list.empty() || opts->out.empty()) {
        throw UsageError("grid mode needs --p-list, --b-list, and --out");
      }
      auto grid = welfare_grid(opts->pi, cost, opts->p_list, opts->b_list);
      save_welfare_grid_csv(grid, opts->out);
      std::printf("wrote %s (%zu points)\n", opts->out.c_str(), grid.size());
      return;
    }
    WelfareScenario s(opts->p, opts->b, opts->pi, cost);
    EffortResult effort = optimal_effort(s);
    WelfareDerivatives deriv = welfare_derivatives(s);
    std::printf("scenario        p=%.4f b=%.4f pi=%.4f\n", s.p, s.b, s.pi);
    std::printf("effort          %.6f%s\n", effort.effort,
                effort.negative_effort ? "  (below zero: perceived payoff under marginal cost)" : "");
    std::printf("welfare         %.6f\n", welfare(s));
    std::printf("effort slope    %.6f\n", deriv.e_prime);
    std::printf("dW/dp           %+.6f\n", deriv.dW_dp);
    std::printf("dW/db           %+.6f\n", deriv.dW_db);

    TaylorTerms t = taylor_delta(s, opts->dp, opts->alpha * opts->dp);
    std::printf("change          dp=%+.4f db=%+.4f\n", t.dp, t.db);
    std::printf("  accuracy, first order   %+.6f\n", t.first_order_p);
    std::printf("  accuracy, second order  %+.6f\n", t.second_order_p);
    std::printf("  bias, first order       %+.6f\n", t.first_order_b);
    std::printf("  bias, second order      %+.6f\n", t.second_order_b);
    std::printf("  total                   %+.6f\n", t.total);

    ResultChecks checks = check_results(s, opts->dp, opts->alpha);
    std::printf("accuracy condition        pi*e=%.6f vs b*pi*e'=%.6f -> %s\n",
                checks.accuracy_condition.lhs, checks.accuracy_condition.rhs,
                checks.accuracy_condition.welfare_decreasing_in_p
                    ? "more accuracy REDUCES welfare"
                    : "more accuracy raises welfare");
    std::printf("combined condition (a=%g)  pi*e=%.6f vs (1+a)*b*pi*e'=%.6f -> %s\n",
                checks.combined_condition.alpha, checks.combined_condition.lhs,
                checks.combined_condition.rhs,
                checks.combined_condition.combined_reduces_welfare ? "combined change REDUCES welfare"
                                                                   : "combined change raises welfare");
    std::printf("debias gain     %+.6f\n", checks.debias_gain);
  });
}

void setup_report(CLI::App& app) {
  auto* cmd = app.add_subcommand("report", "Plot a calibration curve from scored records");
  struct Opts {
    std::string scored, out, title = "Stated confidence vs accuracy";
    int width = 640, height = 480;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--scored", opts->scored, "Scored-record file from `calibrate`")->required();
  cmd->add_option("--out", opts->out, "Output SVG path")->required();
  cmd->add_option("--title", opts->title, "Plot title");
  cmd->add_option("--width", opts->width, "Plot width (px)");
  cmd->add_option("--height", opts->height, "Plot height (px)");
  cmd->callback([opts] {
    auto scored = load_scored(opts->scored);
    auto curve = calibration_curve(scored);
    SvgPlotOptions plot;
    plot.width = opts->width;
    plot.height = opts->height;
    plot.title = opts->title;
    save_calibration_svg(curve, opts->out, plot);
    std::printf("wrote %s (%zu points)\n", opts->out.c_str(), curve.size());
  });
}

void setup_pipeline(CLI::App& app) {
  auto* cmd = app.add_subcommand("pipeline", "Run every stage from one JSON config");
  struct Opts {
    std::string config, out_dir;
    std::size_t quota = 0;
    std::optional<std::uint64_t> seed;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--config", opts->config, "Pipeline config (JSON)")->required();
  cmd->add_option("--out-dir", opts->out_dir, "Override the config's output directory");
  cmd->add_option("--quota", opts->quota, "Override questions-per-cell quota");
  cmd->add_option("--seed", opts->seed, "Override the sampling seed");
  cmd->callback([opts] {
    PipelineConfig config = load_pipeline_config(opts->config);
    if (!opts->out_dir.empty()) config.out_dir = opts->out_dir;
    if (opts->quota > 0) config.balance.quota = opts->quota;
    if (opts->seed) config.balance.seed = *opts->seed;
    PipelineResult result = run_pipeline(config);
    std::printf("manifest        %s\n", result.manifest_hash.c_str());
    print_closure_report(result.closure_report);
    std::printf("questions       %zu (%zu cells short)\n", result.questions,
                result.shortfalls.size());
    std::printf("completions     %zu (cache %zu, live %zu, errors %zu)\n",
                result.batch_report.total, result.batch_report.from_cache,
                result.batch_report.live_calls, result.batch_report.errors);
    print_summary("scored", result.summary);
    if (result.gradient) {
      std::printf("gradient        slope=%.4f, full-confidence accuracy=%.4f\n",
                  result.gradient->fit.coef[1], result.gradient->fit.coef[0]);
    }
    std::printf("artifacts in %s:\n", result.out_dir.c_str());
    for (const auto& a : result.artifacts) std::printf("  %s\n", a.c_str());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-grounded question benchmark and calibration analysis toolkit"};
  app.require_subcommand(1);
  setup_kb(app);
  setup_derive(app);
  setup_qgen(app);
  setup_ask(app);
  setup_parse(app);
  setup_calibrate(app);
  setup_similarity(app);
  setup_exposure(app);
  setup_welfare(app);
  setup_report(app);
  setup_pipeline(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
