#include "calibench/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#ifdef CALIBENCH_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "calibench/errors.hpp"
#include "calibench/stats.hpp"
#include "calibench/text.hpp"

namespace calibench {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ResponseStatus s) {
  switch (s) {
    case ResponseStatus::Ok: return "ok";
    case ResponseStatus::Truncated: return "truncated";
    case ResponseStatus::ProviderError: return "provider_error";
  }
  return "ok";
}

std::optional<ResponseStatus> parse_response_status(const std::string& name) {
  if (name == "ok") return ResponseStatus::Ok;
  if (name == "truncated") return ResponseStatus::Truncated;
  if (name == "provider_error") return ResponseStatus::ProviderError;
  return std::nullopt;
}

std::string format_temperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", t);
  return buf;
}

std::string completion_cache_key(const std::string& model, Frame frame, double temperature,
                                 const std::string& prompt) {
  std::string material = model;
  material.push_back('\x1f');
  material += to_string(frame);
  material.push_back('\x1f');
  material += format_temperature(temperature);
  material.push_back('\x1f');
  material += prompt;
  uint64_t lo = text::fnv1a64(material);
  uint64_t hi = text::fnv1a64(material, 0x6a09e667f3bcc908ull);
  return text::hex64(hi) + text::hex64(lo);
}

// ---------------------------------------------------------------------------
// Mock provider

MockProvider::MockProvider(MockProfile profile, const std::vector<BenchmarkQuestion>& questions)
    : profile_(std::move(profile)) {
  for (const auto& q : questions) {
    questions_.emplace(q.id, QuestionInfo{q.truth, q.evidence});
  }
  if (profile_.confidence.choices.empty()) {
    profile_.confidence.choices = {{90, 1.0}};
  }
}

bool MockProvider::accepts_model(const std::string& model) const {
  return text::starts_with_ci(model, "mock");
}

namespace {

int draw_percent(const MockConfidence& conf, stats::Rng& rng) {
  double total = 0.0;
  for (const auto& [pct, w] : conf.choices) total += w;
  double r = rng.uniform01() * total;
  double acc = 0.0;
  for (const auto& [pct, w] : conf.choices) {
    acc += w;
    if (r < acc) return pct;
  }
  return conf.choices.back().first;
}

std::string evidence_sentence(const KnowledgeTriple& t) {
  return t.subject + " " + text::replace_all(t.predicate, "_", " ") + " " + t.object + ".";
}

}  // namespace

CompletionResult MockProvider::complete(const CompletionRequest& request) {
  calls_.fetch_add(1);
  std::string job_key = request.question_id + "\x1f" + request.model + "\x1f" +
                        to_string(request.frame) + "\x1f" +
                        format_temperature(request.temperature);
  stats::Rng rng(text::fnv1a64(job_key, profile_.seed ^ 0x243f6a8885a308d3ull));

  if (profile_.error_rate > 0.0 && rng.bernoulli(profile_.error_rate)) {
    CompletionResult fail;
    fail.status = ResponseStatus::ProviderError;
    fail.error = "mock backend failure";
    fail.retryable = false;  // deterministic: retrying cannot change the draw
    return fail;
  }

  auto it = questions_.find(request.question_id);
  if (it == questions_.end()) {
    CompletionResult fail;
    fail.status = ResponseStatus::ProviderError;
    fail.error = "mock has no ground truth for question " + request.question_id;
    return fail;
  }
  const QuestionInfo& info = it->second;

  bool correct = rng.bernoulli(profile_.accuracy);
  bool answer_yes = correct ? info.truth : !info.truth;

  CompletionResult result;
  if (request.frame == Frame::Baseline) {
    int p_answer = draw_percent(profile_.confidence, rng);
    int p_facts = draw_percent(profile_.confidence, rng);
    int p_reasoning = draw_percent(profile_.confidence, rng);

    std::ostringstream out;
    out << (answer_yes ? kYesOpening : kNoOpening)
        << " The listed facts support this conclusion.\n\n";
    out << "Reasoning: I recalled the facts below and checked the asked relation "
           "against them step by step.\n\n";
    out << "Key pieces of knowledge:\n";
    std::size_t n = 0;
    for (const auto& t : info.evidence) {
      out << ++n << ". " << evidence_sentence(t) << "\n";
    }
    if (n == 0) out << "1. No supporting facts were recalled.\n";
    out << "\n";
    out << "The probability that my answer is correct is " << p_answer << "%.\n";
    out << "The probability that the facts underlying my answer are correct is " << p_facts
        << "%.\n";
    out << "The probability that the reasoning underlying my answer is correct is "
        << p_reasoning << "%.\n";
    result.text = out.str();
  } else {
    int c = draw_percent(profile_.confidence, rng);
    bool framed_is_yes = request.frame == Frame::YesFrame;
    int q = (framed_is_yes == answer_yes) ? c : 100 - c;
    std::ostringstream out;
    out << "The probability that the correct answer is '" << (framed_is_yes ? "Yes" : "No")
        << "' is " << q << "%.\n";
    result.text = out.str();
  }
  return result;
}

// ---------------------------------------------------------------------------
// HTTP provider

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {}

bool HttpProvider::accepts_model(const std::string& model) const {
  return !text::starts_with_ci(model, "mock");
}

void HttpProvider::ensure_ready() {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ProviderError("missing credentials: environment variable " + config_.api_key_env +
                        " is not set");
  }
  api_key_ = key;
#ifndef CALIBENCH_WITH_TLS
  if (text::starts_with_ci(config_.base_url, "https://")) {
    throw ProviderError("this build lacks TLS support; rebuild with CALIBENCH_WITH_TLS or "
                        "use an http:// base url");
  }
#endif
}

CompletionResult HttpProvider::complete(const CompletionRequest& request) {
  bool no_temperature = false;
  for (const auto& prefix : config_.no_temperature_prefixes) {
    if (text::starts_with_ci(request.model, prefix)) no_temperature = true;
  }

  json payload{{"model", request.model},
               {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})}};
  if (!no_temperature) payload["temperature"] = request.temperature;

  auto started = std::chrono::steady_clock::now();
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
  auto res = client.Post(config_.path, headers, payload.dump(), "application/json");
  auto elapsed = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - started)
                     .count();

  CompletionResult result;
  result.latency_ms = elapsed;
  result.temperature_unsupported = no_temperature;
  if (!res) {
    result.status = ResponseStatus::ProviderError;
    result.error = "transport error: " + httplib::to_string(res.error());
    result.retryable = true;
    return result;
  }
  if (res->status == 429 || res->status >= 500) {
    result.status = ResponseStatus::ProviderError;
    result.error = "http " + std::to_string(res->status);
    result.retryable = true;
    return result;
  }
  if (res->status != 200) {
    result.status = ResponseStatus::ProviderError;
    result.error = "http " + std::to_string(res->status) + ": " + res->body;
    return result;
  }
  try {
    json body = json::parse(res->body);
    const auto& choice = body.at("choices").at(0);
    result.text = choice.at("message").at("content").get<std::string>();
    if (choice.value("finish_reason", "stop") == "length") {
      result.status = ResponseStatus::Truncated;
    }
  } catch (const json::exception& e) {
    result.status = ResponseStatus::ProviderError;
    result.error = std::string("malformed completion payload: ") + e.what();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Registry and batch runner

void ProviderRegistry::add(std::shared_ptr<Provider> provider) {
  providers_.push_back(std::move(provider));
}

Provider& ProviderRegistry::for_model(const std::string& model) const {
  for (const auto& p : providers_) {
    if (p->accepts_model(model)) return *p;
  }
  throw ProviderError("no provider accepts model '" + model + "'");
}

namespace {

struct CacheStore {
  fs::path dir;
  std::mutex mu;

  explicit CacheStore(const std::string& d) : dir(d) {
    if (!dir.empty()) fs::create_directories(dir);
  }

  bool enabled() const { return !dir.empty(); }

  std::optional<RawResponse> load(const RawResponse& probe, const std::string& prompt) {
    if (!enabled()) return std::nullopt;
    fs::path file = dir / (probe.cache_key + ".json");
    std::ifstream in(file);
    if (!in) return std::nullopt;
    json j;
    try {
      in >> j;
    } catch (const json::exception&) {
      return std::nullopt;  // unreadable entry: treat as a miss and rewrite
    }
    const auto& key = j["key"];
    if (key.value("model", "") != probe.model || key.value("frame", "") != to_string(probe.frame) ||
        key.value("temperature", "") != format_temperature(probe.temperature) ||
        key.value("prompt", "") != prompt) {
      return std::nullopt;  // hash collision; verified key material wins
    }
    RawResponse out = probe;
    const auto& r = j["response"];
    out.text = r.value("text", "");
    auto status = parse_response_status(r.value("status", "ok"));
    out.status = status.value_or(ResponseStatus::Ok);
    out.error = r.value("error", "");
    out.latency_ms = r.value("latency_ms", 0.0);
    out.timestamp = r.value("timestamp", "");
    out.effective_temperature = r.value("effective_temperature", "");
    out.from_cache = true;
    return out;
  }

  void store(const RawResponse& response, const std::string& prompt) {
    if (!enabled()) return;
    json j{{"key",
            {{"model", response.model},
             {"frame", to_string(response.frame)},
             {"temperature", format_temperature(response.temperature)},
             {"prompt", prompt}}},
           {"response",
            {{"text", response.text},
             {"status", to_string(response.status)},
             {"error", response.error},
             {"latency_ms", response.latency_ms},
             {"timestamp", response.timestamp},
             {"effective_temperature", response.effective_temperature}}}};
    std::lock_guard<std::mutex> lock(mu);
    std::ofstream out(dir / (response.cache_key + ".json"));
    out << j.dump(2) << "\n";
  }
};

std::string now_rfc3339() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class RateLimiter {
 public:
  explicit RateLimiter(double per_second) : interval_ms_(per_second > 0 ? 1000.0 / per_second : 0) {}

  void acquire() {
    if (interval_ms_ <= 0) return;
    std::unique_lock<std::mutex> lock(mu_);
    auto now = std::chrono::steady_clock::now();
    if (next_ < now) next_ = now;
    auto my_slot = next_;
    next_ += std::chrono::microseconds(static_cast<long>(interval_ms_ * 1000));
    lock.unlock();
    std::this_thread::sleep_until(my_slot);
  }

 private:
  double interval_ms_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

}  // namespace

BatchResult run_batch(const std::vector<BenchmarkQuestion>& questions, const BatchSpec& spec,
                      const ProviderRegistry& registry) {
  if (spec.models.empty()) throw UsageError("run_batch: no models requested");
  if (spec.frames.empty()) throw UsageError("run_batch: no frames requested");
  if (spec.temperatures.empty()) throw UsageError("run_batch: no temperatures requested");
  for (double t : spec.temperatures) {
    if (t < 0.0 || t > 2.0) {
      throw UsageError("run_batch: temperature " + format_temperature(t) +
                       " outside [0, 2]");
    }
  }

  struct Job {
    CompletionRequest request;
    Provider* provider = nullptr;
    std::size_t slot = 0;
  };

  BatchResult result;
  std::vector<Job> jobs;
  for (const auto& q : questions) {
    for (const auto& model : spec.models) {
      for (Frame frame : spec.frames) {
        for (double temperature : spec.temperatures) {
          Job job;
          job.request = CompletionRequest{q.id, model, frame, temperature,
                                          build_prompt(q.text, frame)};
          job.provider = &registry.for_model(model);
          job.slot = jobs.size();
          jobs.push_back(std::move(job));
        }
      }
    }
  }
  result.report.total = jobs.size();
  result.responses.resize(jobs.size());

  CacheStore cache(spec.cache_dir);
  std::vector<Job> pending;
  for (auto& job : jobs) {
    RawResponse probe;
    probe.question_id = job.request.question_id;
    probe.model = job.request.model;
    probe.frame = job.request.frame;
    probe.temperature = job.request.temperature;
    probe.cache_key = completion_cache_key(job.request.model, job.request.frame,
                                           job.request.temperature, job.request.prompt);
    if (auto hit = cache.load(probe, job.request.prompt)) {
      result.responses[job.slot] = std::move(*hit);
      ++result.report.from_cache;
    } else {
      result.responses[job.slot] = probe;  // placeholder carrying key fields
      pending.push_back(job);
    }
  }

  if (!pending.empty()) {
    std::set<Provider*> needed;
    for (const auto& job : pending) needed.insert(job.provider);
    for (Provider* p : needed) p->ensure_ready();

    RateLimiter limiter(spec.rate_limit_per_s);
    std::atomic<std::size_t> cursor{0};
    std::atomic<std::size_t> live_calls{0}, retries{0};
    std::mutex result_mu;

    auto worker = [&]() {
      for (;;) {
        std::size_t i = cursor.fetch_add(1);
        if (i >= pending.size()) return;
        const Job& job = pending[i];

        CompletionResult completion;
        int attempts = 0;
        for (;;) {
          limiter.acquire();
          ++live_calls;
          try {
            completion = job.provider->complete(job.request);
          } catch (const std::exception& e) {
            completion = CompletionResult{};
            completion.status = ResponseStatus::ProviderError;
            completion.error = e.what();
            completion.retryable = true;
          }
          if (completion.status != ResponseStatus::ProviderError || !completion.retryable ||
              attempts >= spec.max_retries) {
            break;
          }
          ++retries;
          int delay = spec.backoff_base_ms * (1 << attempts);
          std::this_thread::sleep_for(std::chrono::milliseconds(delay));
          ++attempts;
        }

        RawResponse& slot = result.responses[job.slot];
        {
          std::lock_guard<std::mutex> lock(result_mu);
          slot.text = completion.text;
          slot.status = completion.status;
          slot.error = completion.error;
          slot.latency_ms = completion.latency_ms;
          slot.effective_temperature = completion.temperature_unsupported
                                           ? "unsupported"
                                           : format_temperature(job.request.temperature);
          slot.timestamp = job.provider->name() == "mock" ? "" : now_rfc3339();
          slot.from_cache = false;
        }
        if (completion.status != ResponseStatus::ProviderError) {
          cache.store(slot, job.request.prompt);
        }
      }
    };

    int threads = std::max(1, spec.parallelism);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    result.report.live_calls = live_calls.load() - retries.load();
    result.report.retries = retries.load();
  }

  for (const auto& r : result.responses) {
    if (r.status == ResponseStatus::ProviderError) ++result.report.errors;
  }
  return result;
}

void save_responses(const std::vector<RawResponse>& responses, const std::string& path,
                    const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write responses file: " + path);
  if (!manifest_hash.empty()) {
    out << json{{"record", "header"}, {"kind", "responses"}, {"manifest", manifest_hash}}.dump()
        << "\n";
  }
  for (const auto& r : responses) {
    json j{{"question_id", r.question_id},
           {"model", r.model},
           {"frame", to_string(r.frame)},
           {"temperature", r.temperature},
           {"effective_temperature", r.effective_temperature},
           {"cache_key", r.cache_key},
           {"text", r.text},
           {"status", to_string(r.status)},
           {"error", r.error},
           {"latency_ms", r.latency_ms},
           {"timestamp", r.timestamp},
           {"from_cache", r.from_cache}};
    out << j.dump() << "\n";
  }
}

std::vector<RawResponse> load_responses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open responses file: " + path);
  std::vector<RawResponse> out;
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
    RawResponse r;
    r.question_id = j.at("question_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    auto frame = parse_frame(j.at("frame").get<std::string>());
    if (!frame) throw DataError(path + ":" + std::to_string(lineno) + ": unknown frame");
    r.frame = *frame;
    r.temperature = j.value("temperature", 0.0);
    r.effective_temperature = j.value("effective_temperature", "");
    r.cache_key = j.value("cache_key", "");
    r.text = j.value("text", "");
    auto status = parse_response_status(j.value("status", "ok"));
    if (!status) throw DataError(path + ":" + std::to_string(lineno) + ": unknown status");
    r.status = *status;
    r.error = j.value("error", "");
    r.latency_ms = j.value("latency_ms", 0.0);
    r.timestamp = j.value("timestamp", "");
    r.from_cache = j.value("from_cache", false);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace calibench
