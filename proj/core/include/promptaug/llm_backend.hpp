#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "promptaug/retry.hpp"

#include <json.hpp>

namespace promptaug::promptkit {

/// One chat-completion exchange: system instruction + user query, optional image.
struct ChatRequest {
    std::string kind; // "caption" or "fill"
    std::string system;
    std::string user;
    std::optional<std::filesystem::path> image;
    /// Side information that never goes over the wire (image id, style, seed).
    /// Mock backends key on it and it is part of the replay key.
    std::map<std::string, std::string> hints;

    /// Stable identity of the request, used to key replay logs.
    std::string key() const;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Returns the assistant text. Throws BackendError (status 0 = transport).
    virtual std::string complete(const ChatRequest& request) = 0;
};

struct LlmBackendConfig {
    std::string endpoint;              // http://host:port/v1/chat/completions
    std::string model = "gpt-4o-mini";
    double temperature = 0.0;
    std::size_t max_in_flight = 4;
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{250};
    std::string api_key;               // from LLM_API_KEY, never from the config file
    std::chrono::seconds timeout{60};
};

/// OpenAI-style chat-completions client:
///   POST {model, temperature, messages:[{role:system},{role:user}]}
///   -> {choices:[{message:{content}}]}
/// The image, when present, is sent as a base64 data URL content part.
class HttpLlm final : public LlmBackend {
public:
    explicit HttpLlm(LlmBackendConfig config);
    std::string complete(const ChatRequest& request) override;

    /// The JSON body this client would POST for a request.
    nlohmann::json request_body(const ChatRequest& request) const;

private:
    LlmBackendConfig m_config;
};

/// Deterministic offline backend. Captions are assembled from the per-style
/// mock vocabulary keyed by the image id; each [MASK] is filled with a word
/// drawn by Rng(derive_seed(seed, style, mask ordinal)).
class MockLlm final : public LlmBackend {
public:
    std::string complete(const ChatRequest& request) override;
};

/// Serves responses recorded in an LLM log, keyed by ChatRequest::key().
/// Repeated keys are answered in recorded order. Unknown keys throw BackendError.
class ReplayLlm final : public LlmBackend {
public:
    explicit ReplayLlm(const std::vector<nlohmann::json>& log_entries);
    static ReplayLlm from_file(const std::filesystem::path& log_path);

    std::string complete(const ChatRequest& request) override;

private:
    std::mutex m_mutex;
    std::map<std::string, std::deque<std::string>> m_responses;
    std::map<std::string, std::string> m_last;
};

using promptaug::RetryPolicy;

struct LlmReply {
    std::string text;
    int attempts = 0;
};

/// Backend plus retry policy (transport, 429 and 5xx are retried with exponential backoff).
class LlmClient {
public:
    LlmClient(std::shared_ptr<LlmBackend> backend, RetryPolicy policy = {}, double temperature = 0.0,
              std::size_t max_in_flight = 4);

    LlmReply complete(const ChatRequest& request) const;

    void set_sleeper(Sleeper sleeper) { m_sleep = std::move(sleeper); }
    double temperature() const noexcept { return m_temperature; }
    std::size_t max_in_flight() const noexcept { return m_max_in_flight; }
    const RetryPolicy& policy() const noexcept { return m_policy; }

private:
    std::shared_ptr<LlmBackend> m_backend;
    RetryPolicy m_policy;
    double m_temperature;
    std::size_t m_max_in_flight;
    Sleeper m_sleep;
};

/// One line of the JSON-lines LLM log.
struct LlmExchange {
    ChatRequest request;
    std::string response;
    int attempts = 0;
    std::string verdict; // "accepted" / "rejected"
    std::string reason;

    nlohmann::json to_json() const;
};

} // namespace promptaug::promptkit
