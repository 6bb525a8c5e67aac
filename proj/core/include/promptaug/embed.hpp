#pragma once

#include "promptaug/style.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace promptaug::embed {

enum class Origin { Real, Synthetic };

std::string_view to_string(Origin origin) noexcept;
Origin parse_origin(std::string_view text);

struct RowInfo {
    std::string image_id;
    StyleLabel label = StyleLabel::from_index(0);
    Origin origin = Origin::Real;

    bool operator==(const RowInfo&) const = default;
};

/// n x d row-major float32 matrix with one manifest entry per row.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    explicit EmbeddingMatrix(std::size_t d, bool normalized = false) : m_d(d), m_normalized(normalized) {}
    EmbeddingMatrix(std::size_t d, std::vector<float> data, std::vector<RowInfo> rows, bool normalized);

    std::size_t n() const noexcept { return m_rows.size(); }
    std::size_t d() const noexcept { return m_d; }
    bool normalized() const noexcept { return m_normalized; }
    bool empty() const noexcept { return m_rows.empty(); }

    const std::vector<float>& data() const noexcept { return m_data; }
    const std::vector<RowInfo>& rows() const noexcept { return m_rows; }

    std::span<const float> row(std::size_t i) const { return {m_data.data() + i * m_d, m_d}; }
    const RowInfo& info(std::size_t i) const { return m_rows.at(i); }

    void append(std::span<const float> values, RowInfo info);

    /// Rows whose label matches, in order.
    EmbeddingMatrix select(StyleLabel label) const;

    /// Row-wise concatenation; dimensions must match unless one side is default-constructed.
    static EmbeddingMatrix concat(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

    /// Largest |1 - ||row||| over all rows (0 for an empty matrix).
    double max_norm_error() const;

    bool operator==(const EmbeddingMatrix&) const = default;

private:
    std::size_t m_d = 0;
    std::vector<float> m_data;
    std::vector<RowInfo> m_rows;
    bool m_normalized = false;
};

// --- file format ---------------------------------------------------------------

inline constexpr std::string_view kEmbeddingMagic = "EMBV1";

/// "EMBV1" | u32 n | u32 d | u8 normalized | n*d f32, all little-endian,
/// plus the row manifest in `<path>.manifest.json`.
void persist_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& m);
/// Decodes the binary part; rows get placeholder manifest entries when `rows` is empty.
EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes, std::vector<RowInfo> rows = {});

std::filesystem::path manifest_sidecar(const std::filesystem::path& path);

nlohmann::json manifest_to_json(const std::vector<RowInfo>& rows);
std::vector<RowInfo> manifest_from_json(const nlohmann::json& j);

// --- providers -----------------------------------------------------------------

struct ImageInput {
    std::string image_id;
    std::filesystem::path path;
    StyleLabel label = StyleLabel::from_index(0);
    Origin origin = Origin::Real;
};

class EmbedProvider {
public:
    virtual ~EmbedProvider() = default;
    virtual std::size_t dim() const = 0;
    /// Identifies the provider in cache keys.
    virtual std::string name() const = 0;
    /// Raw (unnormalized) embedding of one image. Throws BackendError or DataError.
    virtual std::vector<float> embed(const ImageInput& input, std::span<const std::uint8_t> bytes) = 0;
};

struct MockEmbedConfig {
    std::size_t d = 32;   // must be >= 14 so every style gets its own basis direction
    double sigma = 0.1;   // expected noise norm; each coordinate gets sigma / sqrt(d)
    std::uint64_t seed = 0;
};

/// mean + (sigma / sqrt(d)) * N(0, I), so sigma is the noise scale relative
/// to the unit-length mean whatever d is. The mean is the basis vector of the image's style,
/// read from the PNG "style" tEXt chunk; images without one get a random unit
/// direction derived from the file name. Noise is seeded by the content hash.
class MockEmbedProvider final : public EmbedProvider {
public:
    explicit MockEmbedProvider(MockEmbedConfig config = {});

    std::size_t dim() const override { return m_config.d; }
    std::string name() const override;
    std::vector<float> embed(const ImageInput& input, std::span<const std::uint8_t> bytes) override;

private:
    MockEmbedConfig m_config;
};

/// POST <endpoint> with the image bytes -> {"embedding": [f32; d]}.
class HttpEmbedProvider final : public EmbedProvider {
public:
    HttpEmbedProvider(std::string endpoint, std::size_t d, std::chrono::seconds timeout = std::chrono::seconds{60});

    std::size_t dim() const override { return m_d; }
    std::string name() const override { return "http:" + m_endpoint; }
    std::vector<float> embed(const ImageInput& input, std::span<const std::uint8_t> bytes) override;

private:
    std::string m_endpoint;
    std::size_t m_d;
    std::chrono::seconds m_timeout;
};

/// Rows of a pre-built EMBV1 file, looked up by image id.
class FixtureEmbedProvider final : public EmbedProvider {
public:
    explicit FixtureEmbedProvider(const std::filesystem::path& path);
    explicit FixtureEmbedProvider(EmbeddingMatrix matrix);

    std::size_t dim() const override { return m_matrix.d(); }
    std::string name() const override { return "fixture"; }
    std::vector<float> embed(const ImageInput& input, std::span<const std::uint8_t> bytes) override;

private:
    EmbeddingMatrix m_matrix;
    std::map<std::string, std::size_t> m_index;
};

/// Content-hash keyed cache. Lookups may run concurrently; inserts are serialized.
class EmbeddingCache {
public:
    bool find(const std::string& key, std::vector<float>& out) const;
    void insert(const std::string& key, std::vector<float> value);

    std::size_t hits() const noexcept;
    std::size_t misses() const noexcept;
    std::size_t size() const;

private:
    mutable std::mutex m_mutex;
    std::map<std::string, std::vector<float>> m_entries;
    mutable std::size_t m_hits = 0;
    mutable std::size_t m_misses = 0;
};

struct EmbedOptions {
    bool normalize = true;
    std::size_t max_in_flight = 4;
    /// Expected dimension; 0 accepts the provider's.
    std::size_t expected_d = 0;
};

/// One row per input, in input order.
EmbeddingMatrix embed_images(EmbedProvider& provider, const std::vector<ImageInput>& images,
                             const EmbedOptions& options = {}, EmbeddingCache* cache = nullptr);

/// In-place L2 normalization of one row. Zero rows throw DataError.
void l2_normalize(std::span<float> row);

} // namespace promptaug::embed
