#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace clinitext::backends {

enum class Task { qa, summarize, simplify, translate };

std::string_view task_name(Task t);
Task parse_task(std::string_view name);

struct GenerationRequest {
  Task task = Task::qa;
  std::string prompt;
  std::size_t max_new_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop;
  std::optional<std::string> target_language;

  void validate() const;
};

struct GenerationResponse {
  std::string text;
  std::string model_id;

  friend bool operator==(const GenerationResponse&, const GenerationResponse&) = default;
};

struct OptionScoreRequest {
  std::string question;
  std::optional<std::string> context;
  std::vector<std::string> options;

  void validate() const;
};

struct HealthStatus {
  bool ok = true;
  std::string reason;  // empty when ok

  static HealthStatus healthy() { return {}; }
  static HealthStatus unreachable(std::string why) { return {false, std::move(why)}; }
};

// Anything that can generate text for a prompt and score a set of options.
// Implementations must be safe to call from several threads at once.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
  // One score per option, higher = more probable.
  virtual std::vector<double> score_options(const OptionScoreRequest& request) = 0;
  virtual HealthStatus health_check() = 0;
  virtual std::string model_id() const = 0;
};

// Index of the highest score; the lowest index wins ties.
std::size_t argmax(const std::vector<double>& scores);

// Wire format of the /v1 protocol.
nlohmann::json to_wire(const GenerationRequest& r);
nlohmann::json to_wire(const OptionScoreRequest& r);
GenerationRequest generation_request_from_wire(const nlohmann::json& j);
OptionScoreRequest option_request_from_wire(const nlohmann::json& j);
// Throw ProtocolError on shape mismatch.
GenerationResponse generation_response_from_wire(const nlohmann::json& j);
std::vector<double> scores_from_wire(const nlohmann::json& j, std::size_t expected);

// Deterministic offline backends.
enum class StubKind { echo, lead_k, template_answer, overlap_scorer };

class StubBackend final : public GenerationBackend {
 public:
  explicit StubBackend(StubKind kind, std::size_t k = 1);

  GenerationResponse generate(const GenerationRequest& request) override;
  std::vector<double> score_options(const OptionScoreRequest& request) override;
  HealthStatus health_check() override { return HealthStatus::healthy(); }
  std::string model_id() const override;

 private:
  StubKind kind_;
  std::size_t k_;
};

// Parses "echo", "lead-k", "lead-k:3", "template-answer", "overlap-scorer"
// (optionally prefixed with "stub:").
std::unique_ptr<GenerationBackend> make_stub(std::string_view spec);

// Prompt with a leading "<task>: " prefix removed, if present.
std::string strip_task_prefix(std::string_view prompt, Task task);

// Distinct content-token overlap between each option and question+context.
std::vector<double> overlap_scores(const OptionScoreRequest& request);

struct HttpBackendConfig {
  std::string base_url;  // http://host:port[/prefix]
  std::string auth_token;
  std::chrono::milliseconds timeout{30'000};
  std::size_t retry_budget = 2;  // extra attempts on transport errors only
  std::size_t max_in_flight = 4;
};

// Client for any server speaking POST /v1/generate and /v1/score_options.
class HttpBackend final : public GenerationBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  GenerationResponse generate(const GenerationRequest& request) override;
  std::vector<double> score_options(const OptionScoreRequest& request) override;
  // GET /v1/health: transport failure or 5xx means unreachable.
  HealthStatus health_check() override;
  std::string model_id() const override;

  // Attempts made by the most recent call (1 + retries).
  std::size_t last_attempts() const;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::size_t last_attempts_ = 0;
  std::string last_model_id_;
};

}  // namespace clinitext::backends
