#include "test_support.hpp"

#include "promptaug/embed.hpp"
#include "promptaug/error.hpp"
#include "promptaug/io.hpp"
#include "promptaug/t2i_backend.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstring>

using namespace promptaug;
using namespace promptaug::embed;
using nlohmann::json;
using promptaug::testing::LocalServer;
using promptaug::testing::TempDir;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

double norm(std::span<const float> v) {
    double s = 0.0;
    for (const float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

std::vector<ImageInput> write_images(const TempDir& dir, std::size_t per_style, bool tagged = true) {
    std::vector<ImageInput> inputs;
    for (std::size_t s = 0; s < 14; ++s) {
        const auto style = StyleLabel::from_index(s);
        for (std::size_t i = 0; i < per_style; ++i) {
            const auto name = style.str() + "_" + std::to_string(i) + ".png";
            const auto bytes = tagged ? promptaug::testing::tagged_png(style, s * 1000 + i, 8)
                                      : encode_png(synth::mock_pattern(s * 1000 + i, 8, 8));
            write_bytes(dir / name, bytes);
            inputs.push_back(ImageInput{name, dir / name, style, Origin::Real});
        }
    }
    return inputs;
}

} // namespace

TEST(Embv1, EncodingMatchesByteLayout) {
    EmbeddingMatrix m(2, true);
    const std::vector<float> r0{1.5f, -2.0f};
    const std::vector<float> r1{0.0f, 3.25f};
    m.append(r0, {"a", StyleLabel("gal"), Origin::Real});
    m.append(r1, {"b", StyleLabel("mode"), Origin::Synthetic});

    std::vector<std::uint8_t> expected{'E', 'M', 'B', 'V', '1'};
    put_u32(expected, 2);
    put_u32(expected, 2);
    expected.push_back(1);
    for (const float f : {1.5f, -2.0f, 0.0f, 3.25f}) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, &f, 4);
        put_u32(expected, bits);
    }
    EXPECT_EQ(encode_embeddings(m), expected);
}

TEST(Embv1, DecodeErrorsNameTheOffset) {
    EmbeddingMatrix m(3);
    const std::vector<float> row{1, 2, 3};
    m.append(row, {"a", StyleLabel("gal"), Origin::Real});
    auto bytes = encode_embeddings(m);

    auto message = [](const std::vector<std::uint8_t>& b) {
        try {
            decode_embeddings(b);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_NE(message(bad_magic).find("bad magic at offset 0"), std::string::npos);
    EXPECT_NE(message({bytes.begin(), bytes.begin() + 7}).find("truncated header at offset 7"), std::string::npos);
    EXPECT_NE(message({bytes.begin(), bytes.end() - 1}).find("truncated data at offset 25"), std::string::npos);
    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_NE(message(trailing).find("trailing bytes at offset 26"), std::string::npos);
    auto flag = bytes;
    flag[13] = 7;
    EXPECT_NE(message(flag).find("offset 13"), std::string::npos);
}

TEST(Embv1, PersistRoundTripWithManifest) {
    TempDir dir;
    std::mt19937_64 gen(1);
    const auto m = promptaug::testing::random_matrix(gen, 9, 5);
    persist_embeddings(m, dir / "e.embv");
    EXPECT_TRUE(std::filesystem::exists(manifest_sidecar(dir / "e.embv")));
    EXPECT_EQ(load_embeddings(dir / "e.embv"), m);

    std::filesystem::remove(manifest_sidecar(dir / "e.embv"));
    EXPECT_THROW(load_embeddings(dir / "e.embv"), DataError);

    persist_embeddings(EmbeddingMatrix(4), dir / "empty.embv");
    const auto empty = load_embeddings(dir / "empty.embv");
    EXPECT_EQ(empty.n(), 0u);
    EXPECT_EQ(empty.d(), 4u);
}

TEST(Matrix, SelectConcatAndNorms) {
    std::mt19937_64 gen(2);
    const auto a = promptaug::testing::class_blobs(gen, {StyleLabel("gal"), StyleLabel("rock")}, 3, 16, 0.1, Origin::Real);
    const auto b = promptaug::testing::class_blobs(gen, {StyleLabel("rock")}, 2, 16, 0.1, Origin::Synthetic);
    const auto both = EmbeddingMatrix::concat(a, b);
    EXPECT_EQ(both.n(), 8u);
    EXPECT_EQ(both.select(StyleLabel("rock")).n(), 5u);
    EXPECT_LT(both.max_norm_error(), 1e-6);
    EXPECT_THROW(EmbeddingMatrix::concat(a, EmbeddingMatrix(3)), DataError);
    EmbeddingMatrix m(2);
    const std::vector<float> wrong{1, 2, 3};
    EXPECT_THROW(m.append(wrong, {}), DataError);
    EXPECT_THROW(parse_origin("fake"), DataError);
}

TEST(MockProvider, PlacesTaggedImagesNearTheirStyleAxis) {
    TempDir dir;
    const auto inputs = write_images(dir, 20);
    MockEmbedProvider provider(MockEmbedConfig{32, 0.2, 5});
    double noise_sq = 0.0;
    for (const auto& in : inputs) {
        const auto bytes = read_bytes(in.path);
        const auto v = provider.embed(in, bytes);
        ASSERT_EQ(v.size(), 32u);
        double sq = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double mean = k == in.label.index() ? 1.0 : 0.0;
            sq += (v[k] - mean) * (v[k] - mean);
        }
        noise_sq += sq;
        EXPECT_EQ(provider.embed(in, bytes), v);
    }
    EXPECT_NEAR(std::sqrt(noise_sq / static_cast<double>(inputs.size())), 0.2, 0.02);
}

TEST(MockProvider, UntaggedImagesGetStableRandomDirections) {
    TempDir dir;
    const auto inputs = write_images(dir, 1, false);
    MockEmbedProvider provider(MockEmbedConfig{16, 0.0, 1});
    const auto v = provider.embed(inputs[0], read_bytes(inputs[0].path));
    EXPECT_NEAR(norm(v), 1.0, 1e-6);
    EXPECT_EQ(provider.embed(inputs[0], read_bytes(inputs[0].path)), v);
    EXPECT_NE(provider.embed(inputs[1], read_bytes(inputs[1].path)), v);
    EXPECT_THROW(MockEmbedProvider(MockEmbedConfig{8, 0.1, 0}), ConfigError);
    EXPECT_THROW(MockEmbedProvider(MockEmbedConfig{16, -1.0, 0}), ConfigError);
}

TEST(HttpProvider, PostsRawBytesAndParsesEmbedding) {
    TempDir dir;
    const auto inputs = write_images(dir, 1);
    std::string content_type;
    std::string body;
    std::atomic<int> calls{0};
    LocalServer server;
    server.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        content_type = req.get_header_value("Content-Type");
        body = req.body;
        res.set_content(json{{"embedding", {3.0, 4.0, 0.0}}}.dump(), "application/json");
    });
    server.server().Post("/short", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"embedding", {1.0}}}.dump(), "application/json");
    });
    server.server().Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    server.start();

    HttpEmbedProvider provider(server.url("/embed"), 3);
    EmbeddingCache cache;
    const auto m = embed_images(provider, {inputs[0]}, EmbedOptions{true, 1, 3}, &cache);
    EXPECT_EQ(content_type, "application/octet-stream");
    const auto bytes = read_bytes(inputs[0].path);
    EXPECT_EQ(body, std::string(bytes.begin(), bytes.end()));
    EXPECT_FLOAT_EQ(m.row(0)[0], 0.6f);
    EXPECT_FLOAT_EQ(m.row(0)[1], 0.8f);
    embed_images(provider, {inputs[0]}, EmbedOptions{true, 1, 3}, &cache);
    EXPECT_EQ(calls.load(), 1);
    EXPECT_EQ(cache.hits(), 1u);

    HttpEmbedProvider short_provider(server.url("/short"), 3);
    EXPECT_THROW(embed_images(short_provider, {inputs[0]}), BackendError);
    HttpEmbedProvider down(server.url("/down"), 3);
    try {
        embed_images(down, {inputs[0]});
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_EQ(e.status(), 500);
    }
    EXPECT_THROW(HttpEmbedProvider(server.url("/embed"), 0), ConfigError);
}

TEST(FixtureProvider, LooksUpRowsById) {
    TempDir dir;
    const auto inputs = write_images(dir, 1);
    EmbeddingMatrix table(2);
    const std::vector<float> row{0.0f, 2.0f};
    table.append(row, {inputs[3].image_id, inputs[3].label, Origin::Real});
    persist_embeddings(table, dir / "fixture.embv");
    FixtureEmbedProvider provider(dir / "fixture.embv");
    const auto m = embed_images(provider, {inputs[3]});
    EXPECT_EQ(m.row(0)[1], 1.0f);
    EXPECT_THROW(embed_images(provider, {inputs[0]}), DataError);
}

TEST(EmbedImages, OrderNormalizationAndDimensionChecks) {
    TempDir dir;
    const auto inputs = write_images(dir, 3);
    MockEmbedProvider provider(MockEmbedConfig{32, 0.3, 0});
    const auto serial = embed_images(provider, inputs, EmbedOptions{true, 1, 0});
    const auto parallel = embed_images(provider, inputs, EmbedOptions{true, 4, 0});
    EXPECT_EQ(serial, parallel);
    EXPECT_LT(serial.max_norm_error(), 1e-6);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        EXPECT_EQ(serial.info(i).image_id, inputs[i].image_id);
    }
    const auto raw = embed_images(provider, inputs, EmbedOptions{false, 2, 0});
    EXPECT_GT(raw.max_norm_error(), 1e-3);
    EXPECT_THROW(embed_images(provider, inputs, EmbedOptions{true, 1, 512}), ConfigError);
    auto missing = inputs[0];
    missing.path = dir / "nope.png";
    EXPECT_THROW(embed_images(provider, {missing}), DataError);
}

TEST(EmbedImages, CacheKeysIncludeThePath) {
    TempDir dir;
    const auto png = promptaug::testing::tagged_png(StyleLabel("gal"), 1, 8);
    write_bytes(dir / "a/x.png", png);
    write_bytes(dir / "b/x.png", png);
    MockEmbedProvider provider(MockEmbedConfig{16, 0.1, 0});
    EmbeddingCache cache;
    embed_images(provider, {ImageInput{"a", dir / "a/x.png"}, ImageInput{"b", dir / "b/x.png"}}, {}, &cache);
    EXPECT_EQ(cache.size(), 2u);
    EXPECT_EQ(cache.misses(), 2u);
}

TEST(Normalize, ZeroRowIsADataError) {
    std::vector<float> zero(4, 0.0f);
    EXPECT_THROW(l2_normalize(zero), DataError);
    std::vector<float> v{3.0f, 4.0f};
    l2_normalize(v);
    EXPECT_FLOAT_EQ(v[0], 0.6f);
}
