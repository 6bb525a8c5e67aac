#include "test_support.hpp"

#include "promptaug/t2i_backend.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>

namespace promptaug::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    m_path = fs::temp_directory_path() /
             ("promptaug-test-" + std::to_string(stamp) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(m_path);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(m_path, ec);
}

std::vector<std::uint8_t> tagged_png(StyleLabel style, std::uint64_t seed, std::uint32_t size) {
    return encode_png(synth::mock_pattern(seed, size, size), {{"style", style.str()}});
}

embed::EmbeddingMatrix random_matrix(std::mt19937_64& gen, std::size_t n, std::size_t d, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    std::uniform_int_distribution<std::size_t> label(0, StyleLabel::kNames.size() - 1);
    std::bernoulli_distribution coin(0.5);
    embed::EmbeddingMatrix m(d, false);
    std::vector<float> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) {
            v = static_cast<float>(normal(gen));
        }
        m.append(row, {"img-" + std::to_string(i), StyleLabel::from_index(label(gen)),
                       coin(gen) ? embed::Origin::Real : embed::Origin::Synthetic});
    }
    return m;
}

embed::EmbeddingMatrix class_blobs(std::mt19937_64& gen, const std::vector<StyleLabel>& classes, std::size_t per_class,
                                   std::size_t d, double sigma, embed::Origin origin, bool normalize) {
    std::normal_distribution<double> normal(0.0, sigma / std::sqrt(static_cast<double>(d)));
    embed::EmbeddingMatrix m(d, normalize);
    std::vector<double> row(d);
    std::vector<float> out(d);
    for (const auto& c : classes) {
        for (std::size_t i = 0; i < per_class; ++i) {
            double sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                row[k] = (k == c.index() ? 1.0 : 0.0) + normal(gen);
                sq += row[k] * row[k];
            }
            const double inv = normalize ? 1.0 / std::sqrt(sq) : 1.0;
            for (std::size_t k = 0; k < d; ++k) {
                out[k] = static_cast<float>(row[k] * inv);
            }
            m.append(out, {c.str() + "-" + std::to_string(i), c, origin});
        }
    }
    return m;
}

std::string ScriptedLlm::complete(const promptkit::ChatRequest& request) {
    std::lock_guard lock(m_mutex);
    const auto i = std::min(m_requests.size(), m_responses.size() - 1);
    m_requests.push_back(request);
    return m_responses.at(i);
}

std::vector<promptkit::ChatRequest> ScriptedLlm::requests() const {
    std::lock_guard lock(m_mutex);
    return m_requests;
}

LocalServer::LocalServer() = default;

LocalServer::~LocalServer() {
    m_server.stop();
    if (m_thread.joinable()) {
        m_thread.join();
    }
}

void LocalServer::start() {
    m_port = m_server.bind_to_any_port("127.0.0.1");
    m_thread = std::thread([this] { m_server.listen_after_bind(); });
    m_server.wait_until_ready();
}

std::string LocalServer::url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(m_port) + path;
}

} // namespace promptaug::testing
