#include "test_support.hpp"

#include "promptaug/error.hpp"
#include "promptaug/hashing.hpp"
#include "promptaug/io.hpp"
#include "promptaug/json_schema.hpp"
#include "promptaug/parallel.hpp"
#include "promptaug/png_io.hpp"
#include "promptaug/retry.hpp"
#include "promptaug/rng.hpp"
#include "promptaug/style.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace promptaug;
using promptaug::testing::TempDir;

namespace {

std::uint64_t reference_splitmix(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

TEST(Rng, MatchesPublishedSplitMix64Sequence) {
    Rng rng(0);
    EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
    EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
}

TEST(Rng, MatchesReferenceForArbitrarySeeds) {
    for (std::uint64_t seed : {1ULL, 42ULL, 0xDEADBEEFULL, ~0ULL}) {
        Rng rng(seed);
        std::uint64_t state = seed;
        for (int i = 0; i < 100; ++i) {
            ASSERT_EQ(rng.next(), reference_splitmix(state));
        }
    }
}

TEST(Rng, UniformStaysInBoundsAndCoversRange) {
    Rng rng(3);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = rng.uniform(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (const int c : counts) {
        EXPECT_GT(c, 800);
        EXPECT_LT(c, 1200);
    }
}

TEST(Rng, UnitIsHalfOpen) {
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.unit();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, NormalHasUnitMoments) {
    Rng rng(5);
    double sum = 0.0;
    double sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.03);
    EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(Rng, ShuffleIsAPermutationAndSeedDependent) {
    std::vector<int> a(50);
    std::iota(a.begin(), a.end(), 0);
    auto b = a;
    Rng(1).shuffle(a);
    Rng(2).shuffle(b);
    EXPECT_NE(a, b);
    std::sort(a.begin(), a.end());
    std::vector<int> expected(50);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(a, expected);
}

TEST(Rng, DerivedSeedsAreDistinctAndStable) {
    EXPECT_EQ(derive_seed(9, "mask"), derive_seed(9, "mask"));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seen.insert(derive_seed(9, "mask/gal", i));
    }
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_NE(derive_seed(9, "a"), derive_seed(9, "b"));
    EXPECT_NE(derive_seed(9, "a"), derive_seed(10, "a"));
}

TEST(Hashing, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a64(std::string_view{}), 0xCBF29CE484222325ULL);
    EXPECT_EQ(fnv1a64(std::string_view{"a"}), 0xAF63DC4C8601EC8CULL);
    EXPECT_EQ(fnv1a64(std::string_view{"foobar"}), 0x85944171F73967E8ULL);
    EXPECT_EQ(hex64(0xABCULL), "0000000000000abc");
}

TEST(Errors, ExitCodesPerKind) {
    EXPECT_EQ(exit_code_for(ErrorKind::Config), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::Backend), 3);
    EXPECT_EQ(exit_code_for(ErrorKind::Data), 4);
    EXPECT_EQ(BackendError("x", 503).status(), 503);
    EXPECT_EQ(DataError("x").kind(), ErrorKind::Data);
}

TEST(Retry, RetriesRetryableStatusesWithDoublingBackoff) {
    std::vector<std::chrono::milliseconds> sleeps;
    int calls = 0;
    const auto [value, attempts] = retry_call(RetryPolicy{4, std::chrono::milliseconds{100}},
                                              [&](std::chrono::milliseconds d) { sleeps.push_back(d); }, [&] {
                                                  if (++calls < 3) {
                                                      throw BackendError("busy", calls == 1 ? 503 : 429);
                                                  }
                                                  return 7;
                                              });
    EXPECT_EQ(value, 7);
    EXPECT_EQ(attempts, 3);
    ASSERT_EQ(sleeps.size(), 2u);
    EXPECT_EQ(sleeps[0].count(), 100);
    EXPECT_EQ(sleeps[1].count(), 200);
}

TEST(Retry, ClientErrorsAreFinal) {
    int calls = 0;
    auto fn = [&]() -> int {
        ++calls;
        throw BackendError("bad request", 400);
    };
    EXPECT_THROW(retry_call(RetryPolicy{}, [](auto) {}, fn), BackendError);
    EXPECT_EQ(calls, 1);
}

TEST(Retry, GivesUpAfterMaxAttempts) {
    int calls = 0;
    try {
        retry_call(RetryPolicy{3, std::chrono::milliseconds{1}}, [](auto) {}, [&]() -> int {
            ++calls;
            throw BackendError("down", 0);
        });
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_EQ(calls, 3);
        EXPECT_NE(std::string(e.what()).find("after 3 attempts"), std::string::npos);
    }
}

TEST(Parallel, FillsEverySlotAndPropagatesErrors) {
    std::vector<int> out(100, -1);
    parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) {
        ASSERT_EQ(out[i], static_cast<int>(i * i));
    }
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 5) {
                                      throw DataError("five");
                                  }
                              }),
                 DataError);
}

TEST(Io, AtomicWriteReadAndAppend) {
    TempDir dir;
    const auto file = dir / "a/b.txt";
    write_text(file, "hello");
    EXPECT_EQ(read_text(file), "hello");
    append_line(dir / "log.jsonl", "one");
    append_line(dir / "log.jsonl", "two");
    EXPECT_EQ(read_lines(dir / "log.jsonl"), (std::vector<std::string>{"one", "two"}));
    EXPECT_TRUE(read_lines(dir / "missing").empty());
    EXPECT_THROW(read_bytes(dir / "missing"), DataError);
}

TEST(Png, RoundTripsPixelsAndText) {
    RgbImage img{5, 3, {}};
    for (std::size_t i = 0; i < 5 * 3 * 3; ++i) {
        img.pixels.push_back(static_cast<std::uint8_t>(i * 17));
    }
    const auto bytes = encode_png(img, {{"style", "mode"}});
    EXPECT_TRUE(looks_like_png(bytes));
    const auto decoded = decode_png(bytes);
    EXPECT_EQ(decoded.image.pixels, img.pixels);
    EXPECT_EQ(decoded.text.at("style"), "mode");
    EXPECT_EQ(png_dimensions(bytes), std::make_pair(5u, 3u));
    EXPECT_EQ(png_text_chunks(bytes).at("style"), "mode");
    EXPECT_EQ(encode_png(img, {{"style", "mode"}}), bytes);
}

TEST(Png, RejectsNonPng) {
    const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
    EXPECT_FALSE(looks_like_png(junk));
    EXPECT_THROW(png_dimensions(junk), DataError);
    EXPECT_THROW(decode_png(junk), DataError);
    EXPECT_TRUE(png_text_chunks(junk).empty());
}

TEST(Style, ClosedSetOfFourteen) {
    EXPECT_EQ(StyleLabel::kNames.size(), 14u);
    EXPECT_EQ(StyleLabel("kireime-casual").index(), 7u);
    EXPECT_FALSE(StyleLabel::parse("punk").has_value());
    EXPECT_THROW(StyleLabel("punk"), DataError);
    EXPECT_EQ(StyleLabel::from_index(13).name(), "street");
}

TEST(JsonSchema, ReportsEveryViolationWithPointer) {
    const auto schema = nlohmann::json::parse(R"({
        "type": "object",
        "required": ["name", "count"],
        "additionalProperties": false,
        "properties": {
            "name": {"type": "string", "minLength": 2, "pattern": "^[a-z]+$"},
            "count": {"type": "integer", "minimum": 1, "maximum": 5},
            "mode": {"enum": ["a", "b"]},
            "tags": {"type": "array", "items": {"type": "string"}, "uniqueItems": true, "maxItems": 3},
            "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
        }
    })");
    EXPECT_TRUE(validate_schema(nlohmann::json::parse(R"({"name":"ok","count":3})"), schema).empty());

    const auto problems = validate_schema(
        nlohmann::json::parse(R"({"name":"X","count":9,"mode":"c","tags":["a","a"],"ratio":1,"extra":true})"),
        schema);
    auto mentions = [&](const std::string& pointer) {
        return std::any_of(problems.begin(), problems.end(),
                           [&](const std::string& p) { return p.rfind(pointer + ":", 0) == 0; });
    };
    EXPECT_TRUE(mentions("/name"));
    EXPECT_TRUE(mentions("/count"));
    EXPECT_TRUE(mentions("/mode"));
    EXPECT_TRUE(mentions("/tags"));
    EXPECT_TRUE(mentions("/ratio"));
    EXPECT_TRUE(std::find(problems.begin(), problems.end(), "/: unknown property 'extra'") != problems.end());
    EXPECT_GE(problems.size(), 6u);

    const auto missing = validate_schema(nlohmann::json::object(), schema);
    EXPECT_EQ(missing.size(), 2u);
}

TEST(JsonSchema, IntegerTypeRejectsFractions) {
    const auto schema = nlohmann::json::parse(R"({"type":"integer"})");
    EXPECT_TRUE(validate_schema(4, schema).empty());
    EXPECT_FALSE(validate_schema(4.5, schema).empty());
    EXPECT_FALSE(validate_schema("4", schema).empty());
}
