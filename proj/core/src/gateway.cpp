#include "samalm/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fmt/format.h>
#include <thread>
#include <unordered_map>
#include <vector>

#include "samalm/random.hpp"
#include "samalm/scripted_oracle.hpp"

namespace samalm::llm {

std::string PromptTag::str() const {
  switch (kind) {
    case PromptKind::Actor: return fmt::format("actor:{}", robot_id);
    case PromptKind::LocalCritic: return fmt::format("local_critic:{}", robot_id);
    case PromptKind::GlobalCritic: return "global_critic";
    case PromptKind::JointActor: return "joint_actor";
  }
  return "unknown";
}

PromptTag PromptTag::parse(std::string_view s) {
  if (s == "global_critic") return {PromptKind::GlobalCritic, -1};
  if (s == "joint_actor") return {PromptKind::JointActor, -1};
  const auto colon = s.find(':');
  if (colon != std::string_view::npos) {
    const std::string_view head = s.substr(0, colon);
    const int id = std::stoi(std::string(s.substr(colon + 1)));
    if (head == "actor") return {PromptKind::Actor, id};
    if (head == "local_critic") return {PromptKind::LocalCritic, id};
  }
  throw std::invalid_argument(fmt::format("unknown prompt tag '{}'", s));
}

std::string prompt_hash(const Prompt& prompt) {
  std::uint64_t h = fnv1a(prompt.system);
  h = fnv1a(std::string_view("\0", 1), h);
  h = fnv1a(prompt.user, h);
  return fmt::format("{:016x}", h);
}

std::string_view to_string(BackendMode mode) {
  switch (mode) {
    case BackendMode::Http: return "http";
    case BackendMode::Scripted: return "scripted";
    case BackendMode::Replay: return "replay";
  }
  return "unknown";
}

BackendMode backend_mode_from_string(std::string_view s) {
  if (s == "http") return BackendMode::Http;
  if (s == "scripted") return BackendMode::Scripted;
  if (s == "replay") return BackendMode::Replay;
  throw std::invalid_argument(fmt::format("unknown backend '{}'", s));
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::HttpTimeout: return "HttpTimeout";
    case ErrorKind::HttpStatus: return "HttpStatus";
    case ErrorKind::ReplayMiss: return "ReplayMiss";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::Transport: return "Transport";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
    case ErrorKind::BadResponse: return "BadResponse";
  }
  return "unknown";
}

std::string_view to_string(FaultMode mode) {
  switch (mode) {
    case FaultMode::None: return "none";
    case FaultMode::UnsafeUntilFeedback: return "unsafe_until_feedback";
    case FaultMode::Incorrigible: return "incorrigible";
    case FaultMode::RandomUnsafe: return "random_unsafe";
    case FaultMode::Garbage: return "garbage";
    case FaultMode::Idle: return "idle";
  }
  return "none";
}

FaultMode fault_mode_from_string(std::string_view s) {
  for (FaultMode m : {FaultMode::None, FaultMode::UnsafeUntilFeedback, FaultMode::Incorrigible,
                      FaultMode::RandomUnsafe, FaultMode::Garbage, FaultMode::Idle}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument(fmt::format("unknown fault mode '{}'", s));
}

bool GatewayError::transient() const {
  switch (kind_) {
    case ErrorKind::HttpTimeout:
    case ErrorKind::RateLimited:
    case ErrorKind::Transport: return true;
    case ErrorKind::HttpStatus: return status_ >= 500;
    default: return false;
  }
}

void BackendConfig::apply_environment() {
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v != nullptr ? std::string(v) : std::string();
  };
  if (endpoint_url.empty()) endpoint_url = env("SAMALM_API_URL");
  if (api_key.empty()) api_key = env("SAMALM_API_KEY");
  if (model_name.empty()) model_name = env("SAMALM_MODEL");
}

void BackendConfig::validate() const {
  if (mode == BackendMode::Http) {
    if (endpoint_url.empty()) throw GatewayError(ErrorKind::InvalidConfig, "http backend requires an endpoint url");
    if (model_name.empty()) throw GatewayError(ErrorKind::InvalidConfig, "http backend requires a model name");
    // Local OpenAI-compatible servers commonly run without keys; remote ones need one.
    const bool local = endpoint_url.find("localhost") != std::string::npos ||
                       endpoint_url.find("127.0.0.1") != std::string::npos;
    if (api_key.empty() && !local) {
      throw GatewayError(ErrorKind::InvalidConfig, "http backend requires credentials (SAMALM_API_KEY)");
    }
  }
  if (mode == BackendMode::Replay && transcript_path.empty()) {
    throw GatewayError(ErrorKind::InvalidConfig, "replay backend requires a transcript path");
  }
  if (timeout_s <= 0.0) throw GatewayError(ErrorKind::InvalidConfig, "timeout must be positive");
  if (max_retries < 0) throw GatewayError(ErrorKind::InvalidConfig, "max_retries must be >= 0");
}

void to_json(nlohmann::json& j, const BackendConfig& c) {
  // The API key is deliberately never serialized.
  j = {{"mode", std::string(to_string(c.mode))},
       {"endpoint_url", c.endpoint_url},
       {"model", c.model_name},
       {"actor_temperature", c.actor_temperature},
       {"critic_temperature", c.critic_temperature},
       {"timeout_s", c.timeout_s},
       {"max_retries", c.max_retries},
       {"backoff_initial_s", c.backoff_initial_s},
       {"max_tokens", c.max_tokens},
       {"transcript_path", c.transcript_path}};
}

void from_json(const nlohmann::json& j, BackendConfig& c) {
  if (j.contains("mode")) c.mode = backend_mode_from_string(j.at("mode").get<std::string>());
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.model_name = j.value("model", c.model_name);
  c.actor_temperature = j.value("actor_temperature", c.actor_temperature);
  c.critic_temperature = j.value("critic_temperature", c.critic_temperature);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.backoff_initial_s = j.value("backoff_initial_s", c.backoff_initial_s);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.transcript_path = j.value("transcript_path", c.transcript_path);
}

int estimate_tokens(std::string_view text) { return static_cast<int>((text.size() + 3) / 4); }

nlohmann::json transcript_entry(const Prompt& prompt, const Completion& completion) {
  return {{"tag", prompt.tag.str()},
          {"nonce", prompt.nonce},
          {"prompt_hash", prompt_hash(prompt)},
          {"prompt", {{"system", prompt.system}, {"user", prompt.user}}},
          {"completion", completion.text},
          {"latency_ms", completion.latency_ms}};
}

TranscriptWriter::TranscriptWriter(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw GatewayError(ErrorKind::Io, fmt::format("cannot open transcript '{}'", path_.string()));
}

void TranscriptWriter::append(const Prompt& prompt, const Completion& completion) {
  const std::string line = transcript_entry(prompt, completion).dump();
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw GatewayError(ErrorKind::Io, fmt::format("write to transcript '{}' failed", path_.string()));
}

void record_transcript(const Prompt& prompt, const Completion& completion, const std::filesystem::path& path) {
  TranscriptWriter(path).append(prompt, completion);
}

Gateway::Gateway(BackendConfig config, std::unique_ptr<Backend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
  if (backend_->mode() != BackendMode::Replay && !config_.transcript_path.empty()) {
    transcript_ = std::make_unique<TranscriptWriter>(config_.transcript_path);
  }
}

Completion Gateway::complete(const Prompt& prompt) {
  const std::uint64_t id = next_id_.fetch_add(1);
  for (int attempt = 0;; ++attempt) {
    try {
      const auto start = std::chrono::steady_clock::now();
      Completion c = backend_->complete(prompt);
      c.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      c.correlation_id = id;
      if (c.text.empty()) throw GatewayError(ErrorKind::BadResponse, "backend returned empty completion");
      if (transcript_) transcript_->append(prompt, c);
      return c;
    } catch (const GatewayError& e) {
      if (!e.transient() || attempt >= config_.max_retries) throw;
      const double delay = config_.backoff_initial_s * static_cast<double>(1 << std::min(attempt, 16));
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
  }
}

namespace {

class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& path) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
      for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(path);
    }
    for (const auto& file : files) load(file);
  }

  Completion complete(const Prompt& prompt) override {
    const std::string key = make_key(prompt.tag.str(), prompt.nonce, prompt_hash(prompt));
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) throw GatewayError(ErrorKind::ReplayMiss, fmt::format("replay miss for key {}", key));
    Slot& slot = it->second;
    const std::string& text = slot.texts[std::min(slot.cursor, slot.texts.size() - 1)];
    ++slot.cursor;
    return {text, BackendMode::Replay, 0.0, estimate_tokens(text), 0};
  }

  BackendMode mode() const override { return BackendMode::Replay; }

 private:
  struct Slot {
    std::vector<std::string> texts;
    std::size_t cursor = 0;
  };

  static std::string make_key(const std::string& tag, int nonce, const std::string& hash) {
    return fmt::format("{}/{}/{}", tag, nonce, hash);
  }

  void load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw GatewayError(ErrorKind::Io, fmt::format("cannot read transcript '{}'", file.string()));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      const std::string key =
          make_key(j.at("tag").get<std::string>(), j.at("nonce").get<int>(), j.at("prompt_hash").get<std::string>());
      entries_[key].texts.push_back(j.at("completion").get<std::string>());
    }
  }

  std::mutex mutex_;
  std::unordered_map<std::string, Slot> entries_;
};

}  // namespace

std::unique_ptr<Backend> make_replay_backend(const std::filesystem::path& transcript) {
  return std::make_unique<ReplayBackend>(transcript);
}

std::unique_ptr<Gateway> make_gateway(const BackendConfig& config, const ScriptedOptions& scripted) {
  BackendConfig cfg = config;
  if (cfg.mode == BackendMode::Http) cfg.apply_environment();
  cfg.validate();
  switch (cfg.mode) {
    case BackendMode::Http: return std::make_unique<Gateway>(cfg, make_http_backend(cfg));
    case BackendMode::Scripted: return std::make_unique<Gateway>(cfg, make_scripted_backend(scripted));
    case BackendMode::Replay: return std::make_unique<Gateway>(cfg, make_replay_backend(cfg.transcript_path));
  }
  throw GatewayError(ErrorKind::InvalidConfig, "unknown backend mode");
}

}  // namespace samalm::llm
