#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace promptaug {

/// 8-bit interleaved RGB image.
struct RgbImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels; // width * height * 3

    std::uint8_t at(std::uint32_t x, std::uint32_t y, int channel) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + static_cast<std::size_t>(channel)];
    }
};

/// PNG tEXt chunks, keyword -> Latin-1 text.
using PngText = std::map<std::string, std::string>;

struct DecodedPng {
    RgbImage image;
    PngText text;
};

/// Encodes with fixed compression settings and no timestamp chunk, so equal
/// inputs produce byte-identical files.
std::vector<std::uint8_t> encode_png(const RgbImage& image, const PngText& text = {});

/// Decodes any 8-bit PNG to RGB (gray is expanded, alpha dropped).
DecodedPng decode_png(std::span<const std::uint8_t> bytes);

/// Reads only the IHDR dimensions. Throws DataError when the signature or header is invalid.
std::pair<std::uint32_t, std::uint32_t> png_dimensions(std::span<const std::uint8_t> bytes);

bool looks_like_png(std::span<const std::uint8_t> bytes) noexcept;

/// tEXt chunks of a PNG without decoding pixel data. Non-PNG input yields an empty map.
PngText png_text_chunks(std::span<const std::uint8_t> bytes);

} // namespace promptaug
