#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "calibench/prompts.hpp"
#include "calibench/qgen.hpp"

namespace calibench {

enum class ResponseStatus { Ok, Truncated, ProviderError };
std::string to_string(ResponseStatus s);
std::optional<ResponseStatus> parse_response_status(const std::string& name);

struct RawResponse {
  std::string question_id;
  std::string model;
  Frame frame = Frame::Baseline;
  double temperature = 0.0;
  /// "unsupported" when the backend rejects temperature control for the
  /// model; otherwise the formatted temperature actually sent.
  std::string effective_temperature;
  std::string cache_key;
  std::string text;
  ResponseStatus status = ResponseStatus::Ok;
  std::string error;
  double latency_ms = 0.0;
  std::string timestamp;  // RFC3339; empty for fully deterministic backends
  bool from_cache = false;
};

struct CompletionRequest {
  std::string question_id;
  std::string model;
  Frame frame = Frame::Baseline;
  double temperature = 0.0;
  std::string prompt;
};

struct CompletionResult {
  std::string text;
  ResponseStatus status = ResponseStatus::Ok;
  std::string error;
  bool retryable = false;
  bool temperature_unsupported = false;
  double latency_ms = 0.0;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string name() const = 0;
  virtual bool accepts_model(const std::string& model) const = 0;
  /// Fail-fast hook; throws ProviderError when prerequisites (credentials)
  /// are missing. Called once per batch before any work starts.
  virtual void ensure_ready() {}
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

/// Synthetic answer profile for offline runs: answers are correct with
/// probability `accuracy`; reported confidences are drawn from a percent
/// distribution. Responses are rendered in the same shape real models
/// produce under the protocol, so the parser treats both alike.
struct MockConfidence {
  /// Point mass by default; otherwise weighted integer percents.
  std::vector<std::pair<int, double>> choices = {{90, 1.0}};

  static MockConfidence point(int percent) { return MockConfidence{{{percent, 1.0}}}; }
};

struct MockProfile {
  double accuracy = 0.5;
  MockConfidence confidence;
  uint64_t seed = 0;
  double error_rate = 0.0;  // fraction of calls that fail with ProviderError
};

/// Deterministic regardless of call order or thread count: every completion
/// is seeded from (profile seed, question, model, frame, temperature).
class MockProvider : public Provider {
 public:
  MockProvider(MockProfile profile, const std::vector<BenchmarkQuestion>& questions);

  std::string name() const override { return "mock"; }
  bool accepts_model(const std::string& model) const override;
  CompletionResult complete(const CompletionRequest& request) override;

  int call_count() const { return calls_.load(); }

 private:
  struct QuestionInfo {
    bool truth;
    std::vector<KnowledgeTriple> evidence;
  };
  MockProfile profile_;
  std::map<std::string, QuestionInfo> questions_;
  std::atomic<int> calls_{0};
};

/// OpenAI-compatible chat-completions backend. The API key is read from an
/// environment variable at ensure_ready() time; a missing key aborts the
/// batch before any request is sent.
struct HttpProviderConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  /// Model prefixes whose backends reject explicit temperature control.
  std::vector<std::string> no_temperature_prefixes = {"o1"};
  int timeout_seconds = 120;
};

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);

  std::string name() const override { return "http"; }
  bool accepts_model(const std::string& model) const override;
  void ensure_ready() override;
  CompletionResult complete(const CompletionRequest& request) override;

 private:
  HttpProviderConfig config_;
  std::string api_key_;
};

class ProviderRegistry {
 public:
  void add(std::shared_ptr<Provider> provider);
  Provider& for_model(const std::string& model) const;
  bool empty() const { return providers_.empty(); }

 private:
  std::vector<std::shared_ptr<Provider>> providers_;
};

struct BatchSpec {
  std::vector<std::string> models;
  std::vector<Frame> frames = {Frame::Baseline};
  std::vector<double> temperatures = {0.0};
  int parallelism = 1;
  int max_retries = 3;
  int backoff_base_ms = 250;
  double rate_limit_per_s = 0.0;  // 0 = unlimited
  std::string cache_dir;          // empty disables caching
};

struct BatchReport {
  std::size_t total = 0;
  std::size_t from_cache = 0;
  std::size_t live_calls = 0;  // completions actually executed (first tries)
  std::size_t retries = 0;
  std::size_t errors = 0;  // responses that ended in ProviderError status
};

struct BatchResult {
  std::vector<RawResponse> responses;  // one per (question, model, frame, temperature)
  BatchReport report;
};

/// Cache key over everything that determines a completion.
std::string completion_cache_key(const std::string& model, Frame frame, double temperature,
                                 const std::string& prompt);

std::string format_temperature(double t);

/// Runs the full (questions x models x frames x temperatures) product.
/// Responses come back in deterministic job order; failures occupy their
/// slot with ProviderError status rather than being dropped.
BatchResult run_batch(const std::vector<BenchmarkQuestion>& questions, const BatchSpec& spec,
                      const ProviderRegistry& registry);

void save_responses(const std::vector<RawResponse>& responses, const std::string& path,
                    const std::string& manifest_hash = "");
std::vector<RawResponse> load_responses(const std::string& path);

}  // namespace calibench
