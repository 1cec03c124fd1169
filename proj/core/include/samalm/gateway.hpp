#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <nlohmann/json.hpp>

namespace samalm::llm {

enum class PromptKind { Actor, LocalCritic, GlobalCritic, JointActor };

struct PromptTag {
  PromptKind kind = PromptKind::Actor;
  int robot_id = -1;

  /// "actor:2", "local_critic:0", "global_critic", "joint_actor".
  std::string str() const;
  static PromptTag parse(std::string_view s);
  bool is_critic() const { return kind == PromptKind::LocalCritic || kind == PromptKind::GlobalCritic; }
  bool operator==(const PromptTag&) const = default;
};

struct Prompt {
  std::string system;
  std::string user;
  PromptTag tag;
  int nonce = 0;  // re-query attempt index

  bool operator==(const Prompt&) const = default;
};

/// Stable 16-hex-digit hash of the prompt bytes (system and user).
std::string prompt_hash(const Prompt& prompt);

enum class BackendMode { Http, Scripted, Replay };
std::string_view to_string(BackendMode mode);
BackendMode backend_mode_from_string(std::string_view s);

struct Completion {
  std::string text;
  BackendMode backend = BackendMode::Scripted;
  double latency_ms = 0.0;
  int token_estimate = 0;
  std::uint64_t correlation_id = 0;
};

struct BackendConfig {
  BackendMode mode = BackendMode::Scripted;
  std::string endpoint_url;
  std::string api_key;
  std::string model_name;
  double actor_temperature = 0.2;
  double critic_temperature = 0.0;
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_initial_s = 0.5;
  int max_tokens = 512;
  std::string transcript_path;  // Replay: file or directory to read. Others: file to append to, if set.

  /// Fills endpoint, key and model from SAMALM_API_URL / SAMALM_API_KEY / SAMALM_MODEL where unset.
  void apply_environment();
  /// Throws GatewayError(InvalidConfig) when the mode's requirements are not met.
  void validate() const;
};

void to_json(nlohmann::json& j, const BackendConfig& c);
void from_json(const nlohmann::json& j, BackendConfig& c);

enum class ErrorKind { HttpTimeout, HttpStatus, ReplayMiss, RateLimited, Transport, InvalidConfig, Io, BadResponse };
std::string_view to_string(ErrorKind kind);

class GatewayError : public std::runtime_error {
 public:
  GatewayError(ErrorKind kind, const std::string& message, int status = 0)
      : std::runtime_error(message), kind_(kind), status_(status) {}

  ErrorKind kind() const { return kind_; }
  int status() const { return status_; }
  /// Timeouts, rate limits, 5xx and dropped connections are retried.
  bool transient() const;

 private:
  ErrorKind kind_;
  int status_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const Prompt& prompt) = 0;
  virtual BackendMode mode() const = 0;
};

/// Append-only JSONL transcript. Safe to share between threads.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(std::filesystem::path path);
  void append(const Prompt& prompt, const Completion& completion);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
  std::ofstream out_;
};

/// One transcript line for `prompt` and `completion`.
nlohmann::json transcript_entry(const Prompt& prompt, const Completion& completion);

/// Appends one entry to `path`, creating it if needed. Throws GatewayError(Io) on failure.
void record_transcript(const Prompt& prompt, const Completion& completion, const std::filesystem::path& path);

/// Uniform completion entry point: retries transient failures with
/// exponential backoff and records every successful exchange when a
/// transcript is configured.
class Gateway {
 public:
  Gateway(BackendConfig config, std::unique_ptr<Backend> backend);

  Completion complete(const Prompt& prompt);

  const BackendConfig& config() const { return config_; }
  BackendMode mode() const { return backend_->mode(); }

 private:
  BackendConfig config_;
  std::unique_ptr<Backend> backend_;
  std::unique_ptr<TranscriptWriter> transcript_;
  std::atomic<std::uint64_t> next_id_{1};
};

/// Live OpenAI-compatible chat-completion backend.
std::unique_ptr<Backend> make_http_backend(const BackendConfig& config);

/// Serves recorded completions keyed by (tag, nonce, prompt hash). Repeated
/// keys are served in recorded order.
std::unique_ptr<Backend> make_replay_backend(const std::filesystem::path& transcript);

/// Payload sent to the chat-completion endpoint.
nlohmann::json chat_request_body(const Prompt& prompt, const BackendConfig& config);
/// Extracts choices[0].message.content; throws GatewayError(BadResponse).
std::string chat_response_text(const nlohmann::json& body);

int estimate_tokens(std::string_view text);

/// Behaviour switches for the scripted oracle. Faults apply to actor prompts only.
enum class FaultMode {
  None,
  UnsafeUntilFeedback,  // adversarial proposal until critic feedback is present
  Incorrigible,         // adversarial proposal on every attempt
  RandomUnsafe,         // adversarial with fault_probability when no feedback is present
  Garbage,              // never emits parseable output
  Idle,                 // always proposes zero velocity
};
std::string_view to_string(FaultMode mode);
FaultMode fault_mode_from_string(std::string_view s);

struct ScriptedOptions {
  FaultMode fault = FaultMode::None;
  double fault_probability = 0.1;
  std::uint64_t fault_seed = 0;
};

std::unique_ptr<Gateway> make_gateway(const BackendConfig& config, const ScriptedOptions& scripted = {});

}  // namespace samalm::llm
