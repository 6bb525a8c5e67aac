#include "promptaug/llm_backend.hpp"

#include "http_util.hpp"
#include "promptaug/error.hpp"
#include "promptaug/hashing.hpp"
#include "promptaug/io.hpp"
#include "promptaug/lingua.hpp"
#include "promptaug/mock_vocab.hpp"
#include "promptaug/png_io.hpp"
#include "promptaug/style.hpp"

#include <httplib.h>


using nlohmann::json;

namespace promptaug::promptkit {

std::string ChatRequest::key() const {
    std::string canonical = kind;
    canonical += '\x1f';
    canonical += system;
    canonical += '\x1f';
    canonical += user;
    for (const auto& [k, v] : hints) {
        canonical += '\x1f';
        canonical += k;
        canonical += '=';
        canonical += v;
    }
    return hex64(fnv1a64(canonical));
}

json LlmExchange::to_json() const {
    return json{{"key", request.key()},
                {"kind", request.kind},
                {"system", request.system},
                {"user", request.user},
                {"hints", request.hints},
                {"response", response},
                {"attempts", attempts},
                {"verdict", verdict},
                {"reason", reason}};
}

// --- HTTP ---------------------------------------------------------------------

HttpLlm::HttpLlm(LlmBackendConfig config) : m_config(std::move(config)) {
    detail::parse_endpoint(m_config.endpoint);
}

json HttpLlm::request_body(const ChatRequest& request) const {
    json user;
    if (request.image) {
        const auto bytes = read_bytes(*request.image);
        const std::string mime = looks_like_png(bytes) ? "image/png" : "image/jpeg";
        user = json::array();
        if (!request.user.empty()) {
            user.push_back(json{{"type", "text"}, {"text", request.user}});
        }
        user.push_back(json{{"type", "image_url"},
                            {"image_url", json{{"url", "data:" + mime + ";base64," + detail::base64_encode(bytes)}}}});
    } else {
        user = request.user;
    }
    return json{{"model", m_config.model},
                {"temperature", m_config.temperature},
                {"messages", json::array({json{{"role", "system"}, {"content", request.system}},
                                          json{{"role", "user"}, {"content", std::move(user)}}})}};
}

std::string HttpLlm::complete(const ChatRequest& request) {
    const auto endpoint = detail::parse_endpoint(m_config.endpoint);
    httplib::Client client(endpoint.base);
    client.set_connection_timeout(m_config.timeout);
    client.set_read_timeout(m_config.timeout);
    httplib::Headers headers;
    if (!m_config.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + m_config.api_key);
    }
    const auto result = client.Post(endpoint.path, headers, request_body(request).dump(), "application/json");
    if (!result) {
        throw BackendError("LLM transport error: " + httplib::to_string(result.error()), 0);
    }
    if (result->status != 200) {
        throw BackendError("LLM endpoint returned HTTP " + std::to_string(result->status), result->status);
    }
    try {
        const auto body = json::parse(result->body);
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed chat-completion response: ") + e.what(), result->status);
    }
}

// --- Mock ---------------------------------------------------------------------

std::string MockLlm::complete(const ChatRequest& request) {
    const auto style_it = request.hints.find("style");
    if (style_it == request.hints.end()) {
        throw BackendError("mock LLM needs a 'style' hint", 400);
    }
    const StyleLabel style(style_it->second);
    if (request.kind == "caption") {
        const auto id_it = request.hints.find("image_id");
        const std::string id = id_it != request.hints.end()
                                   ? id_it->second
                                   : (request.image ? request.image->filename().string() : std::string());
        return mock::caption_for(style, id);
    }
    if (request.kind == "fill") {
        const auto seed_it = request.hints.find("seed");
        const std::uint64_t seed = seed_it == request.hints.end() ? 0 : std::stoull(seed_it->second);
        std::string out;
        std::size_t cursor = 0;
        std::size_t ordinal = 0;
        const std::string& text = request.user;
        for (auto pos = text.find(lingua::kMaskToken); pos != std::string::npos;
             pos = text.find(lingua::kMaskToken, cursor)) {
            out.append(text, cursor, pos - cursor);
            out += mock::fill_word(style, seed, ordinal++);
            cursor = pos + lingua::kMaskToken.size();
        }
        out.append(text, cursor, std::string::npos);
        return out;
    }
    throw BackendError("mock LLM: unknown request kind '" + request.kind + "'", 400);
}

// --- Replay -------------------------------------------------------------------

ReplayLlm::ReplayLlm(const std::vector<json>& log_entries) {
    for (const auto& entry : log_entries) {
        const auto key = entry.at("key").get<std::string>();
        auto response = entry.at("response").get<std::string>();
        m_last[key] = response;
        m_responses[key].push_back(std::move(response));
    }
}

ReplayLlm ReplayLlm::from_file(const std::filesystem::path& log_path) {
    std::vector<json> entries;
    for (const auto& line : read_lines(log_path)) {
        entries.push_back(json::parse(line));
    }
    return ReplayLlm(entries);
}

std::string ReplayLlm::complete(const ChatRequest& request) {
    const auto key = request.key();
    std::lock_guard lock(m_mutex);
    auto it = m_responses.find(key);
    if (it == m_responses.end()) {
        throw BackendError("replay log has no response for request " + key, 404);
    }
    if (it->second.empty()) {
        return m_last.at(key);
    }
    auto response = std::move(it->second.front());
    it->second.pop_front();
    return response;
}

// --- Client -------------------------------------------------------------------

LlmClient::LlmClient(std::shared_ptr<LlmBackend> backend, RetryPolicy policy, double temperature,
                     std::size_t max_in_flight)
    : m_backend(std::move(backend)), m_policy(policy), m_temperature(temperature),
      m_max_in_flight(max_in_flight),
      m_sleep(real_sleep) {
    if (!m_backend) {
        throw ConfigError("LlmClient needs a backend");
    }
    if (m_policy.max_attempts < 1) {
        throw ConfigError("retry policy needs at least one attempt");
    }
}

LlmReply LlmClient::complete(const ChatRequest& request) const {
    auto [text, attempts] = retry_call(m_policy, m_sleep, [&] { return m_backend->complete(request); });
    return LlmReply{std::move(text), attempts};
}

} // namespace promptaug::promptkit
