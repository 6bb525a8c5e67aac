#include "promptaug/embed.hpp"

#include "promptaug/error.hpp"
#include "promptaug/hashing.hpp"
#include "promptaug/png_io.hpp"
#include "promptaug/rng.hpp"

#include "http_util.hpp"

#include <httplib.h>

#include <cmath>

using nlohmann::json;

namespace promptaug::embed {

MockEmbedProvider::MockEmbedProvider(MockEmbedConfig config) : m_config(config) {
    if (m_config.d < StyleLabel::kNames.size()) {
        throw ConfigError("mock embedding dimension must be at least " + std::to_string(StyleLabel::kNames.size()));
    }
    if (!(m_config.sigma >= 0.0) || !std::isfinite(m_config.sigma)) {
        throw ConfigError("mock embedding sigma must be a non-negative number");
    }
}

std::string MockEmbedProvider::name() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "mock:d=%zu:sigma=%.17g:seed=%llu", m_config.d, m_config.sigma,
                  static_cast<unsigned long long>(m_config.seed));
    return buf;
}

std::vector<float> MockEmbedProvider::embed(const ImageInput& input, std::span<const std::uint8_t> bytes) {
    const std::size_t d = m_config.d;
    std::vector<double> v(d, 0.0);
    const auto text = png_text_chunks(bytes);
    const auto style_it = text.find("style");
    std::optional<StyleLabel> style;
    if (style_it != text.end()) {
        style = StyleLabel::parse(style_it->second);
    }
    if (style) {
        v[style->index()] = 1.0;
    } else {
        Rng dir(derive_seed(m_config.seed, "direction/" + input.path.filename().string()));
        double sq = 0.0;
        for (auto& x : v) {
            x = dir.normal();
            sq += x * x;
        }
        for (auto& x : v) {
            x /= std::sqrt(sq);
        }
    }
    Rng noise(mix64(fnv1a64(bytes) ^ mix64(m_config.seed)));
    const double per_coordinate = m_config.sigma / std::sqrt(static_cast<double>(d));
    std::vector<float> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = static_cast<float>(v[i] + per_coordinate * noise.normal());
    }
    return out;
}

HttpEmbedProvider::HttpEmbedProvider(std::string endpoint, std::size_t d, std::chrono::seconds timeout)
    : m_endpoint(std::move(endpoint)), m_d(d), m_timeout(timeout) {
    if (m_d == 0) {
        throw ConfigError("HTTP embedding provider needs a positive dimension");
    }
}

std::vector<float> HttpEmbedProvider::embed(const ImageInput& input, std::span<const std::uint8_t> bytes) {
    const auto endpoint = detail::parse_endpoint(m_endpoint);
    httplib::Client client(endpoint.base);
    client.set_connection_timeout(m_timeout);
    client.set_read_timeout(m_timeout);
    const auto result = client.Post(endpoint.path, reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                                    "application/octet-stream");
    if (!result) {
        throw BackendError("embedding transport error: " + httplib::to_string(result.error()), 0);
    }
    if (result->status != 200) {
        throw BackendError("embedding endpoint returned HTTP " + std::to_string(result->status) + " for " +
                               input.path.string(),
                           result->status);
    }
    try {
        const auto j = json::parse(result->body);
        const auto& arr = j.at("embedding");
        if (!arr.is_array()) {
            throw BackendError("embedding response: 'embedding' is not an array", 200);
        }
        std::vector<float> out;
        out.reserve(arr.size());
        for (const auto& x : arr) {
            out.push_back(x.get<float>());
        }
        return out;
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed embedding response: ") + e.what(), 200);
    }
}

FixtureEmbedProvider::FixtureEmbedProvider(const std::filesystem::path& path)
    : FixtureEmbedProvider(load_embeddings(path)) {}

FixtureEmbedProvider::FixtureEmbedProvider(EmbeddingMatrix matrix) : m_matrix(std::move(matrix)) {
    for (std::size_t i = 0; i < m_matrix.n(); ++i) {
        m_index.emplace(m_matrix.info(i).image_id, i);
    }
}

std::vector<float> FixtureEmbedProvider::embed(const ImageInput& input, std::span<const std::uint8_t>) {
    const auto it = m_index.find(input.image_id);
    if (it == m_index.end()) {
        throw DataError("fixture has no embedding for image '" + input.image_id + "'");
    }
    const auto row = m_matrix.row(it->second);
    return {row.begin(), row.end()};
}

} // namespace promptaug::embed
