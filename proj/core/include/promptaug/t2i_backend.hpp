#pragma once

#include "promptaug/png_io.hpp"
#include "promptaug/retry.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace promptaug::synth {

struct T2IRequest {
    std::string prompt;
    int steps = 4;
    std::uint32_t width = 512;
    std::uint32_t height = 512;
    std::string scheduler = "EulerAncestralDiscreteScheduler";
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

class T2IBackend {
public:
    virtual ~T2IBackend() = default;
    /// Encoded image bytes (PNG). Throws BackendError.
    virtual std::vector<std::uint8_t> generate(const T2IRequest& request) = 0;
};

/// POST {prompt, num_inference_steps, width, height, scheduler, seed} -> image/png body.
class HttpT2I final : public T2IBackend {
public:
    explicit HttpT2I(std::string endpoint, std::chrono::seconds timeout = std::chrono::seconds{300});
    std::vector<std::uint8_t> generate(const T2IRequest& request) override;

private:
    std::string m_endpoint;
    std::chrono::seconds m_timeout;
};

/// Offline stand-in: a smooth sinusoid pattern seeded by hash(prompt, seed),
/// with tEXt chunks "style" (infer_prompt_style, or empty),
/// "prompt" and "seed".
class MockT2I final : public T2IBackend {
public:
    std::vector<std::uint8_t> generate(const T2IRequest& request) override;
};

/// First whole-token style name in the text, lower-cased.
std::optional<std::string> find_style_keyword(std::string_view text);

/// The style a prompt describes: the first style name in it, otherwise the
/// style whose mock vocabulary shares the most words with it (nullopt on a tie).
std::optional<std::string> infer_prompt_style(std::string_view text);

/// Pixel pattern used by MockT2I; exposed for fixtures.
RgbImage mock_pattern(std::uint64_t seed, std::uint32_t width, std::uint32_t height);

} // namespace promptaug::synth
