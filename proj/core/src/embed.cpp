#include "promptaug/embed.hpp"

#include "promptaug/error.hpp"
#include "promptaug/hashing.hpp"
#include "promptaug/io.hpp"
#include "promptaug/parallel.hpp"

#include <bit>
#include <cmath>
#include <cstring>

using nlohmann::json;

namespace promptaug::embed {

namespace fs = std::filesystem;

std::string_view to_string(Origin origin) noexcept {
    return origin == Origin::Real ? "real" : "synthetic";
}

Origin parse_origin(std::string_view text) {
    if (text == "real") {
        return Origin::Real;
    }
    if (text == "synthetic") {
        return Origin::Synthetic;
    }
    throw DataError("unknown origin '" + std::string(text) + "'");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t d, std::vector<float> data, std::vector<RowInfo> rows, bool normalized)
    : m_d(d), m_data(std::move(data)), m_rows(std::move(rows)), m_normalized(normalized) {
    if (m_data.size() != m_rows.size() * m_d) {
        throw DataError("embedding data has " + std::to_string(m_data.size()) + " values, expected " +
                        std::to_string(m_rows.size()) + " x " + std::to_string(m_d));
    }
}

void EmbeddingMatrix::append(std::span<const float> values, RowInfo info) {
    if (values.size() != m_d) {
        throw DataError("embedding row has dimension " + std::to_string(values.size()) + ", expected " +
                        std::to_string(m_d));
    }
    m_data.insert(m_data.end(), values.begin(), values.end());
    m_rows.push_back(std::move(info));
}

EmbeddingMatrix EmbeddingMatrix::select(StyleLabel label) const {
    EmbeddingMatrix out(m_d, m_normalized);
    for (std::size_t i = 0; i < n(); ++i) {
        if (m_rows[i].label == label) {
            out.append(row(i), m_rows[i]);
        }
    }
    return out;
}

EmbeddingMatrix EmbeddingMatrix::concat(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    if (a.empty() && a.d() == 0) {
        return b;
    }
    if (b.empty() && b.d() == 0) {
        return a;
    }
    if (a.d() != b.d()) {
        throw DataError("cannot concatenate embeddings of dimension " + std::to_string(a.d()) + " and " +
                        std::to_string(b.d()));
    }
    EmbeddingMatrix out = a;
    out.m_normalized = a.m_normalized && b.m_normalized;
    out.m_data.insert(out.m_data.end(), b.m_data.begin(), b.m_data.end());
    out.m_rows.insert(out.m_rows.end(), b.m_rows.begin(), b.m_rows.end());
    return out;
}

double EmbeddingMatrix::max_norm_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
        double sq = 0.0;
        for (const float v : row(i)) {
            sq += static_cast<double>(v) * v;
        }
        worst = std::max(worst, std::abs(1.0 - std::sqrt(sq)));
    }
    return worst;
}

// --- file format ---------------------------------------------------------------

namespace {

constexpr std::size_t kHeaderSize = 5 + 4 + 4 + 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes[offset + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

} // namespace

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& m) {
    if (m.n() > UINT32_MAX || m.d() > UINT32_MAX) {
        throw DataError("embedding matrix too large for EMBV1");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + m.data().size() * 4);
    out.insert(out.end(), kEmbeddingMagic.begin(), kEmbeddingMagic.end());
    put_u32(out, static_cast<std::uint32_t>(m.n()));
    put_u32(out, static_cast<std::uint32_t>(m.d()));
    out.push_back(m.normalized() ? 1 : 0);
    for (const float v : m.data()) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes, std::vector<RowInfo> rows) {
    if (bytes.size() < kEmbeddingMagic.size() ||
        std::memcmp(bytes.data(), kEmbeddingMagic.data(), kEmbeddingMagic.size()) != 0) {
        throw DataError("bad magic at offset 0 (expected EMBV1)");
    }
    if (bytes.size() < kHeaderSize) {
        throw DataError("truncated header at offset " + std::to_string(bytes.size()) + " (need " +
                        std::to_string(kHeaderSize) + " bytes)");
    }
    const std::size_t n = get_u32(bytes, 5);
    const std::size_t d = get_u32(bytes, 9);
    const std::uint8_t flag = bytes[13];
    if (flag > 1) {
        throw DataError("invalid normalized flag " + std::to_string(flag) + " at offset 13");
    }
    const std::size_t expected = kHeaderSize + n * d * 4;
    if (bytes.size() < expected) {
        throw DataError("truncated data at offset " + std::to_string(bytes.size()) + " (expected " +
                        std::to_string(expected) + " bytes for " + std::to_string(n) + "x" + std::to_string(d) + ")");
    }
    if (bytes.size() > expected) {
        throw DataError("trailing bytes at offset " + std::to_string(expected));
    }
    std::vector<float> data(n * d);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(get_u32(bytes, kHeaderSize + 4 * i));
    }
    if (rows.empty() && n > 0) {
        rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            rows[i].image_id = "row-" + std::to_string(i);
        }
    }
    if (rows.size() != n) {
        throw DataError("manifest has " + std::to_string(rows.size()) + " rows, matrix has " + std::to_string(n));
    }
    return EmbeddingMatrix(d, std::move(data), std::move(rows), flag == 1);
}

fs::path manifest_sidecar(const fs::path& path) {
    return fs::path(path.string() + ".manifest.json");
}

json manifest_to_json(const std::vector<RowInfo>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"image_id", r.image_id}, {"label", r.label.str()}, {"origin", std::string(to_string(r.origin))}});
    }
    return {{"rows", arr}};
}

std::vector<RowInfo> manifest_from_json(const json& j) {
    try {
        std::vector<RowInfo> rows;
        for (const auto& r : j.at("rows")) {
            rows.push_back({r.at("image_id").get<std::string>(), StyleLabel(r.at("label").get<std::string>()),
                            parse_origin(r.at("origin").get<std::string>())});
        }
        return rows;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed embedding manifest: ") + e.what());
    }
}

void persist_embeddings(const EmbeddingMatrix& m, const fs::path& path) {
    write_bytes(path, encode_embeddings(m));
    write_text(manifest_sidecar(path), manifest_to_json(m.rows()).dump(1) + "\n");
}

EmbeddingMatrix load_embeddings(const fs::path& path) {
    const auto bytes = read_bytes(path);
    const auto sidecar = manifest_sidecar(path);
    if (!fs::exists(sidecar)) {
        throw DataError("missing embedding manifest " + sidecar.string());
    }
    json j;
    try {
        j = json::parse(read_text(sidecar));
    } catch (const json::parse_error& e) {
        throw DataError(sidecar.string() + ": " + e.what());
    }
    auto rows = manifest_from_json(j);
    try {
        return decode_embeddings(bytes, std::move(rows));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

// --- cache and batch embedding -----------------------------------------------------

bool EmbeddingCache::find(const std::string& key, std::vector<float>& out) const {
    std::lock_guard lock(m_mutex);
    const auto it = m_entries.find(key);
    if (it == m_entries.end()) {
        ++m_misses;
        return false;
    }
    ++m_hits;
    out = it->second;
    return true;
}

void EmbeddingCache::insert(const std::string& key, std::vector<float> value) {
    std::lock_guard lock(m_mutex);
    m_entries.emplace(key, std::move(value));
}

std::size_t EmbeddingCache::hits() const noexcept {
    std::lock_guard lock(m_mutex);
    return m_hits;
}

std::size_t EmbeddingCache::misses() const noexcept {
    std::lock_guard lock(m_mutex);
    return m_misses;
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(m_mutex);
    return m_entries.size();
}

void l2_normalize(std::span<float> row) {
    double sq = 0.0;
    for (const float v : row) {
        sq += static_cast<double>(v) * v;
    }
    if (!(sq > 0.0) || !std::isfinite(sq)) {
        throw DataError("cannot normalize a zero or non-finite embedding");
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (float& v : row) {
        v = static_cast<float>(v * inv);
    }
}

EmbeddingMatrix embed_images(EmbedProvider& provider, const std::vector<ImageInput>& images,
                             const EmbedOptions& options, EmbeddingCache* cache) {
    const std::size_t d = provider.dim();
    if (options.expected_d != 0 && options.expected_d != d) {
        throw ConfigError("embedding provider '" + provider.name() + "' has dimension " + std::to_string(d) +
                          ", config expects " + std::to_string(options.expected_d));
    }
    std::vector<std::vector<float>> rows(images.size());
    parallel_for(images.size(), options.max_in_flight, [&](std::size_t i) {
        const auto& input = images[i];
        std::vector<std::uint8_t> bytes;
        try {
            bytes = read_bytes(input.path);
        } catch (const Error& e) {
            throw DataError("cannot read image " + input.path.string() + ": " + e.what());
        }
        const std::string key = provider.name() + "/" + hex64(fnv1a64(bytes)) + "/" + input.path.generic_string() +
                                (options.normalize ? "/unit" : "/raw");
        std::vector<float> v;
        if (cache && cache->find(key, v)) {
            rows[i] = std::move(v);
            return;
        }
        v = provider.embed(input, bytes);
        if (v.size() != d) {
            throw BackendError("provider '" + provider.name() + "' returned dimension " + std::to_string(v.size()) +
                                   " for " + input.path.string() + ", expected " + std::to_string(d),
                               200);
        }
        for (const float x : v) {
            if (!std::isfinite(x)) {
                throw BackendError("provider returned a non-finite embedding for " + input.path.string(), 200);
            }
        }
        if (options.normalize) {
            l2_normalize(v);
        }
        if (cache) {
            cache->insert(key, v);
        }
        rows[i] = std::move(v);
    });
    EmbeddingMatrix out(d, options.normalize);
    for (std::size_t i = 0; i < images.size(); ++i) {
        out.append(rows[i], {images[i].image_id, images[i].label, images[i].origin});
    }
    return out;
}

} // namespace promptaug::embed
