#pragma once

// Chat-completion gateway. A BackendConfig describes either a remote
// chat-completions endpoint or a scripted list of canned replies; a
// ChatBackend instance is built from it with make_backend().

#include <chrono>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tutorgen/error.hpp"
#include "tutorgen/text.hpp"

namespace tutorgen::llm {

enum class Role { system, user, assistant };

NLOHMANN_JSON_SERIALIZE_ENUM(Role, {
                                       {Role::system, "system"},
                                       {Role::user, "user"},
                                       {Role::assistant, "assistant"},
                                   })

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

inline ChatMessage make_message(Role role, std::string content) {
  if (content.empty()) throw ValidationError("chat message content must be non-empty");
  return ChatMessage{role, std::move(content)};
}

struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 256;
  std::vector<std::string> stop_sequences;

  static GenerationParams tutor_defaults() { return {0.7, 256, {}}; }
  static GenerationParams student_defaults() { return {0.7, 96, {}}; }

  void validate() const {
    if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
    if (max_tokens <= 0) throw ValidationError("max_tokens must be positive");
  }
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  std::chrono::milliseconds delay_for(int retry) const {
    double d = static_cast<double>(initial_delay.count());
    for (int i = 0; i < retry; ++i) d *= multiplier;
    auto capped = std::min(d, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<long long>(capped));
  }
};

enum class BackendKind { http, scripted };

NLOHMANN_JSON_SERIALIZE_ENUM(BackendKind, {
                                              {BackendKind::http, "http"},
                                              {BackendKind::scripted, "scripted"},
                                          })

inline constexpr const char* kEndpointEnv = "LLM_ENDPOINT_URL";

struct BackendConfig {
  BackendKind kind = BackendKind::scripted;
  std::string endpoint_url;
  std::string model_name;
  std::string auth_token_env;
  std::vector<std::string> script;
  /// Dotted path to the generated text in the reply; numeric segments index arrays.
  std::string reply_path = "choices.0.message.content";
  RetryPolicy retry;
  std::chrono::seconds timeout{60};
  int max_concurrency = 4;
  /// Scripted only: simulated delay before each reply.
  std::chrono::milliseconds latency{0};

  static BackendConfig scripted(std::vector<std::string> replies, std::string model = "scripted") {
    BackendConfig c;
    c.kind = BackendKind::scripted;
    c.script = std::move(replies);
    c.model_name = std::move(model);
    return c;
  }

  static BackendConfig http(std::string url, std::string model) {
    BackendConfig c;
    c.kind = BackendKind::http;
    c.endpoint_url = std::move(url);
    c.model_name = std::move(model);
    return c;
  }

  /// The endpoint after applying the LLM_ENDPOINT_URL default.
  std::string resolved_endpoint() const {
    if (!endpoint_url.empty()) return endpoint_url;
    if (const char* env = std::getenv(kEndpointEnv)) return env;
    return {};
  }

  void validate() const {
    if (kind == BackendKind::http) {
      if (resolved_endpoint().empty()) {
        throw ValidationError("http backend requires endpoint_url (or LLM_ENDPOINT_URL)");
      }
      if (retry.max_retries < 0) throw ValidationError("max_retries must be >= 0");
      if (max_concurrency < 1 || max_concurrency > 1024) {
        throw ValidationError("max_concurrency must be in [1, 1024]");
      }
    } else if (script.empty()) {
      throw ValidationError("scripted backend requires a non-empty script");
    } else if (latency.count() < 0) {
      throw ValidationError("latency_ms must be >= 0");
    }
  }
};

inline void to_json(nlohmann::json& j, const BackendConfig& c) {
  j = nlohmann::json{{"kind", c.kind}, {"model_name", c.model_name}};
  if (c.kind == BackendKind::http) {
    j["endpoint_url"] = c.endpoint_url;
    j["auth_token_env"] = c.auth_token_env;
    j["reply_path"] = c.reply_path;
    j["max_retries"] = c.retry.max_retries;
    j["initial_backoff_ms"] = c.retry.initial_delay.count();
    j["max_backoff_ms"] = c.retry.max_delay.count();
    j["timeout_seconds"] = c.timeout.count();
    j["max_concurrency"] = c.max_concurrency;
  } else {
    j["script"] = c.script;
    if (c.latency.count() > 0) j["latency_ms"] = c.latency.count();
  }
}

inline void from_json(const nlohmann::json& j, BackendConfig& c) {
  if (!j.is_object() || !j.contains("kind")) throw ValidationError("backend config must have a 'kind'");
  auto kind = j.at("kind").get<std::string>();
  if (kind == "http") {
    c.kind = BackendKind::http;
  } else if (kind == "scripted") {
    c.kind = BackendKind::scripted;
  } else {
    throw ValidationError("unknown backend kind '" + kind + "'");
  }
  c.model_name = j.value("model_name", c.kind == BackendKind::scripted ? "scripted" : "");
  c.endpoint_url = j.value("endpoint_url", "");
  c.auth_token_env = j.value("auth_token_env", "");
  c.script = j.value("script", std::vector<std::string>{});
  c.reply_path = j.value("reply_path", c.reply_path);
  c.retry.max_retries = j.value("max_retries", c.retry.max_retries);
  c.retry.initial_delay = std::chrono::milliseconds(j.value("initial_backoff_ms", c.retry.initial_delay.count()));
  c.retry.max_delay = std::chrono::milliseconds(j.value("max_backoff_ms", c.retry.max_delay.count()));
  c.timeout = std::chrono::seconds(j.value("timeout_seconds", c.timeout.count()));
  c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  c.latency = std::chrono::milliseconds(j.value("latency_ms", std::int64_t{0}));
  c.validate();
}

// ---------------------------------------------------------------------------
// Backends

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(std::span<const ChatMessage> messages, const GenerationParams& params) = 0;
  virtual const std::string& model_name() const = 0;
};

/// Returns script entries in order; fails once every entry is consumed.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> script, std::string model = "scripted",
                           std::chrono::milliseconds latency = {})
      : script_(std::move(script)), model_(std::move(model)), latency_(latency) {}

  std::string complete(std::span<const ChatMessage> messages, const GenerationParams& params) override {
    if (messages.empty()) throw ValidationError("complete requires at least one message");
    params.validate();
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    std::lock_guard lock(mu_);
    if (next_ >= script_.size()) throw BackendError("script exhausted");
    return script_[next_++];
  }

  const std::string& model_name() const override { return model_; }

  std::size_t consumed() const {
    std::lock_guard lock(mu_);
    return next_;
  }

 private:
  std::vector<std::string> script_;
  std::string model_;
  std::chrono::milliseconds latency_;
  mutable std::mutex mu_;
  std::size_t next_ = 0;
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint url must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline const nlohmann::json* walk_path(const nlohmann::json& root, std::string_view path) {
  const nlohmann::json* cur = &root;
  while (!path.empty()) {
    auto dot = path.find('.');
    auto seg = std::string(path.substr(0, dot));
    path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
    if (cur->is_array()) {
      char* end = nullptr;
      auto idx = std::strtoul(seg.c_str(), &end, 10);
      if (seg.empty() || *end != '\0' || idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    } else if (cur->is_object()) {
      auto it = cur->find(seg);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else {
      return nullptr;
    }
  }
  return cur;
}

inline bool is_transient_status(int status) {
  return status == 408 || status == 425 || status == 429 || status >= 500;
}

inline std::string excerpt(const std::string& body, std::size_t limit = 200) {
  return body.size() <= limit ? body : body.substr(0, limit) + "...";
}

}  // namespace detail

/// Builds the chat-completions request body.
inline nlohmann::json make_request_body(const std::string& model, std::span<const ChatMessage> messages,
                                        const GenerationParams& params) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return nlohmann::json{{"model", model},
                        {"messages", std::move(msgs)},
                        {"temperature", params.temperature},
                        {"max_tokens", params.max_tokens},
                        {"stop", params.stop_sequences}};
}

/// POSTs chat-completions JSON and extracts the reply text. Connection
/// failures and 408/425/429/5xx are retried with exponential backoff.
class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(BackendConfig config)
      : config_(std::move(config)), slots_(config_.max_concurrency) {
    config_.validate();
    url_ = detail::split_url(config_.resolved_endpoint());
  }

  std::string complete(std::span<const ChatMessage> messages, const GenerationParams& params) override {
    if (messages.empty()) throw ValidationError("complete requires at least one message");
    params.validate();
    const auto body = make_request_body(config_.model_name, messages, params).dump();

    httplib::Headers headers;
    if (!config_.auth_token_env.empty()) {
      if (const char* tok = std::getenv(config_.auth_token_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + tok);
      }
    }

    slots_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};

    std::string last_failure;
    for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(config_.retry.delay_for(attempt - 1));

      httplib::Client client(url_.origin);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      auto res = client.Post(url_.path, headers, body, "application/json");
      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (detail::is_transient_status(res->status)) {
        last_failure = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw BackendError("HTTP " + std::to_string(res->status) + ": " + detail::excerpt(res->body),
                           res->status);
      }
      return extract_reply(res->body);
    }
    throw TimeoutError("chat completion failed after " + std::to_string(config_.retry.max_retries + 1) +
                       " attempts (" + last_failure + ")");
  }

  const std::string& model_name() const override { return config_.model_name; }

 private:
  std::string extract_reply(const std::string& body) const {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
      throw BackendError("reply is not JSON: " + detail::excerpt(body), 200);
    }
    const auto* node = detail::walk_path(doc, config_.reply_path);
    if (node == nullptr || !node->is_string()) {
      throw BackendError("reply has no string at '" + config_.reply_path + "': " + detail::excerpt(body), 200);
    }
    return node->get<std::string>();
  }

  BackendConfig config_;
  detail::SplitUrl url_;
  std::counting_semaphore<1024> slots_;
};

inline std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  config.validate();
  if (config.kind == BackendKind::scripted) {
    return std::make_unique<ScriptedBackend>(config.script, config.model_name, config.latency);
  }
  return std::make_unique<HttpBackend>(config);
}

inline std::string complete(ChatBackend& backend, std::span<const ChatMessage> messages,
                            const GenerationParams& params) {
  return backend.complete(messages, params);
}

// ---------------------------------------------------------------------------
// Sentence caps

inline bool is_sentence_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

/// Prefix of `text` holding at most `n` sentences. A sentence ends at a
/// maximal run of '.', '!' or '?' followed by whitespace or end of text.
inline std::string truncate_sentences(std::string_view text, int n) {
  if (n < 1) throw ValidationError("sentence limit must be >= 1");
  int seen = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_sentence_terminator(text[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < text.size() && is_sentence_terminator(text[run_end])) ++run_end;
    if (run_end == text.size() || is_ascii_space(text[run_end])) {
      if (++seen == n) return std::string(text.substr(0, run_end));
    }
    i = run_end;
  }
  return std::string(text);
}

/// Number of sentences by the same boundary rule (0 for blank text).
inline int count_sentences(std::string_view text) {
  if (split_whitespace(text).empty()) return 0;
  int count = 0;
  bool trailing_content = false;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_sentence_terminator(text[i])) {
      if (!is_ascii_space(text[i])) trailing_content = true;
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < text.size() && is_sentence_terminator(text[run_end])) ++run_end;
    if (run_end == text.size() || is_ascii_space(text[run_end])) {
      ++count;
      trailing_content = false;
    } else {
      trailing_content = true;
    }
    i = run_end;
  }
  return count + (trailing_content ? 1 : 0);
}

}  // namespace tutorgen::llm
