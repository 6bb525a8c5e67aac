#include "promptaug/png_io.hpp"

#include "promptaug/error.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstring>

namespace promptaug {

namespace {

constexpr std::array<std::uint8_t, 8> kSignature{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

struct WriteSink {
    std::vector<std::uint8_t>* out;
};

void write_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* sink = static_cast<WriteSink*>(png_get_io_ptr(png));
    sink->out->insert(sink->out->end(), data, data + length);
}

void flush_callback(png_structp) {}

struct ReadSource {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
    if (src->offset + length > src->bytes.size()) {
        png_error(png, "truncated PNG");
    }
    std::memcpy(data, src->bytes.data() + src->offset, length);
    src->offset += length;
}

} // namespace

bool looks_like_png(std::span<const std::uint8_t> bytes) noexcept {
    return bytes.size() >= kSignature.size() && std::equal(kSignature.begin(), kSignature.end(), bytes.begin());
}

std::pair<std::uint32_t, std::uint32_t> png_dimensions(std::span<const std::uint8_t> bytes) {
    // signature(8) + length(4) + "IHDR"(4) + width(4) + height(4)
    if (!looks_like_png(bytes) || bytes.size() < 24 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
        throw DataError("not a PNG image");
    }
    return {read_be32(bytes.data() + 16), read_be32(bytes.data() + 20)};
}

PngText png_text_chunks(std::span<const std::uint8_t> bytes) {
    PngText text;
    if (!looks_like_png(bytes)) {
        return text;
    }
    std::size_t pos = kSignature.size();
    while (pos + 12 <= bytes.size()) {
        const std::uint32_t length = read_be32(bytes.data() + pos);
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        if (pos + 12 + length > bytes.size()) {
            break;
        }
        if (std::memcmp(type, "tEXt", 4) == 0) {
            const auto* data = reinterpret_cast<const char*>(bytes.data() + pos + 8);
            const std::string_view chunk(data, length);
            const auto nul = chunk.find('\0');
            if (nul != std::string_view::npos) {
                text.emplace(std::string(chunk.substr(0, nul)), std::string(chunk.substr(nul + 1)));
            }
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + length;
    }
    return text;
}

std::vector<std::uint8_t> encode_png(const RgbImage& image, const PngText& text) {
    if (image.width == 0 || image.height == 0 ||
        image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
        throw DataError("encode_png: pixel buffer does not match dimensions");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        throw DataError("png_create_write_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    WriteSink sink{&out};
    // Kept alive until png_write_info has copied them.
    std::vector<std::string> keys;
    std::vector<std::string> values;
    std::vector<png_text> chunks;

    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("PNG encoding failed");
    }
    png_set_write_fn(png, &sink, write_callback, flush_callback);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

    keys.reserve(text.size());
    values.reserve(text.size());
    for (const auto& [key, value] : text) {
        keys.push_back(key);
        values.push_back(value);
    }
    chunks.resize(text.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        std::memset(&chunks[i], 0, sizeof(png_text));
        chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
        chunks[i].key = keys[i].data();
        chunks[i].text = values[i].data();
        chunks[i].text_length = values[i].size();
    }
    if (!chunks.empty()) {
        png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
    }
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
    for (std::uint32_t y = 0; y < image.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(image.pixels.data() + y * stride));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

DecodedPng decode_png(std::span<const std::uint8_t> bytes) {
    if (!looks_like_png(bytes)) {
        throw DataError("not a PNG image");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        throw DataError("png_create_read_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    ReadSource source{bytes, 0};
    DecodedPng result;

    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("PNG decoding failed");
    }
    png_set_read_fn(png, &source, read_callback);
    png_read_info(png, info);

    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const auto color_type = png_get_color_type(png, info);
    const auto bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) {
        png_set_strip_16(png);
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        if (bit_depth < 8) {
            png_set_expand_gray_1_2_4_to_8(png);
        }
        png_set_gray_to_rgb(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) {
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    result.image.width = width;
    result.image.height = height;
    result.image.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    const std::size_t stride = static_cast<std::size_t>(width) * 3;
    std::vector<png_bytep> rows(height);
    for (std::uint32_t y = 0; y < height; ++y) {
        rows[y] = result.image.pixels.data() + y * stride;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    result.text = png_text_chunks(bytes);
    return result;
}

} // namespace promptaug
