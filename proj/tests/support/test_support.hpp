#pragma once

#include "promptaug/embed.hpp"
#include "promptaug/llm_backend.hpp"
#include "promptaug/png_io.hpp"
#include "promptaug/style.hpp"

#include <httplib.h>

#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

namespace promptaug::testing {

/// Unique directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return m_path; }
    std::filesystem::path operator/(const std::filesystem::path& sub) const { return m_path / sub; }

private:
    std::filesystem::path m_path;
};

/// PNG bytes of a small pattern tagged with a style tEXt chunk.
std::vector<std::uint8_t> tagged_png(StyleLabel style, std::uint64_t seed, std::uint32_t size = 16);

/// Gaussian matrix with random labels; values drawn with std::mt19937_64.
embed::EmbeddingMatrix random_matrix(std::mt19937_64& gen, std::size_t n, std::size_t d, double scale = 1.0);

/// Rows mean_c + sigma/sqrt(d) * N(0, I) with mean_c the basis vector of class c.
embed::EmbeddingMatrix class_blobs(std::mt19937_64& gen, const std::vector<StyleLabel>& classes, std::size_t per_class,
                                   std::size_t d, double sigma, embed::Origin origin, bool normalize = true);

/// LLM backend answering with canned responses in order; the last one repeats.
class ScriptedLlm final : public promptkit::LlmBackend {
public:
    explicit ScriptedLlm(std::vector<std::string> responses) : m_responses(std::move(responses)) {}
    std::string complete(const promptkit::ChatRequest& request) override;
    std::vector<promptkit::ChatRequest> requests() const;

private:
    mutable std::mutex m_mutex;
    std::vector<std::string> m_responses;
    std::vector<promptkit::ChatRequest> m_requests;
};

/// httplib server on an ephemeral localhost port, running on a background thread.
class LocalServer {
public:
    LocalServer();
    ~LocalServer();

    httplib::Server& server() noexcept { return m_server; }
    /// Binds and starts serving; handlers must be registered first.
    void start();
    std::string url(const std::string& path) const;

private:
    httplib::Server m_server;
    std::thread m_thread;
    int m_port = 0;
};

} // namespace promptaug::testing
