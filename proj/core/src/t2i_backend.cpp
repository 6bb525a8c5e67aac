#include "promptaug/t2i_backend.hpp"

#include "http_util.hpp"
#include "promptaug/error.hpp"
#include "promptaug/hashing.hpp"
#include "promptaug/lingua.hpp"
#include "promptaug/mock_vocab.hpp"
#include "promptaug/rng.hpp"
#include "promptaug/style.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

using nlohmann::json;

namespace promptaug::synth {

json T2IRequest::to_json() const {
    return json{{"prompt", prompt}, {"num_inference_steps", steps}, {"width", width},
                {"height", height}, {"scheduler", scheduler},      {"seed", seed}};
}

HttpT2I::HttpT2I(std::string endpoint, std::chrono::seconds timeout)
    : m_endpoint(std::move(endpoint)), m_timeout(timeout) {
    detail::parse_endpoint(m_endpoint);
}

std::vector<std::uint8_t> HttpT2I::generate(const T2IRequest& request) {
    const auto endpoint = detail::parse_endpoint(m_endpoint);
    httplib::Client client(endpoint.base);
    client.set_connection_timeout(m_timeout);
    client.set_read_timeout(m_timeout);
    const auto result = client.Post(endpoint.path, request.to_json().dump(), "application/json");
    if (!result) {
        throw BackendError("T2I transport error: " + httplib::to_string(result.error()), 0);
    }
    if (result->status != 200) {
        throw BackendError("T2I endpoint returned HTTP " + std::to_string(result->status), result->status);
    }
    return {result->body.begin(), result->body.end()};
}

std::optional<std::string> find_style_keyword(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        return std::nullopt;
    }
    for (const auto& token : lingua::tokenize(text).tokens) {
        const auto lower = lingua::to_lower(token.surface);
        if (StyleLabel::parse(lower)) {
            return lower;
        }
    }
    return std::nullopt;
}

std::optional<std::string> infer_prompt_style(std::string_view text) {
    if (auto keyword = find_style_keyword(text)) {
        return keyword;
    }
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        return std::nullopt;
    }
    std::set<std::string> words;
    for (const auto& token : lingua::tokenize(text).tokens) {
        words.insert(lingua::to_lower(token.surface));
    }
    std::array<int, StyleLabel::kNames.size()> votes{};
    for (std::size_t s = 0; s < votes.size(); ++s) {
        const auto& v = mock::vocabulary(StyleLabel::from_index(s));
        for (const auto& list : {v.descriptors, v.colors, v.tops, v.bottoms, v.shoes, v.accessories}) {
            for (const auto w : list) {
                votes[s] += words.count(std::string(w)) ? 1 : 0;
            }
        }
    }
    const auto best = std::max_element(votes.begin(), votes.end());
    if (*best == 0 || std::count(votes.begin(), votes.end(), *best) > 1) {
        return std::nullopt;
    }
    return StyleLabel::from_index(static_cast<std::size_t>(best - votes.begin())).str();
}

RgbImage mock_pattern(std::uint64_t seed, std::uint32_t width, std::uint32_t height) {
    Rng rng(seed);
    struct Wave {
        double fx, fy, phase, amplitude;
    };
    std::array<std::array<Wave, 3>, 3> waves{};
    std::array<double, 3> base{};
    for (int c = 0; c < 3; ++c) {
        base[static_cast<std::size_t>(c)] = 64.0 + 128.0 * rng.unit();
        for (auto& w : waves[static_cast<std::size_t>(c)]) {
            w = Wave{1.0 + 6.0 * rng.unit(), 1.0 + 6.0 * rng.unit(), 2.0 * std::numbers::pi * rng.unit(),
                     10.0 + 30.0 * rng.unit()};
        }
    }
    RgbImage image{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3)};
    for (std::uint32_t y = 0; y < height; ++y) {
        const double v = static_cast<double>(y) / height;
        for (std::uint32_t x = 0; x < width; ++x) {
            const double u = static_cast<double>(x) / width;
            for (std::size_t c = 0; c < 3; ++c) {
                double value = base[c];
                for (const auto& w : waves[c]) {
                    value += w.amplitude * std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
                }
                const double noise = static_cast<double>(rng.uniform(17)) - 8.0;
                image.pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
                    static_cast<std::uint8_t>(std::clamp(std::lround(value + noise), 0L, 255L));
            }
        }
    }
    return image;
}

std::vector<std::uint8_t> MockT2I::generate(const T2IRequest& request) {
    if (request.width == 0 || request.height == 0) {
        throw BackendError("mock T2I: zero image size", 400);
    }
    const auto seed = mix64(fnv1a64(request.prompt) ^ mix64(request.seed));
    const auto image = mock_pattern(seed, request.width, request.height);
    PngText text{{"prompt", request.prompt},
                 {"seed", std::to_string(request.seed)},
                 {"style", infer_prompt_style(request.prompt).value_or("")}};
    return encode_png(image, text);
}

} // namespace promptaug::synth
