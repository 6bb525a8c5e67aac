#include "oracles.hpp"
#include "test_support.hpp"

#include "promptaug/error.hpp"
#include "promptaug/io.hpp"
#include "promptaug/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace promptaug;
using namespace promptaug::metrics;
using promptaug::testing::TempDir;

namespace {

GrayImage random_gray(std::mt19937_64& gen, std::uint32_t w, std::uint32_t h) {
    std::uniform_real_distribution<double> u(0.0, 255.0);
    GrayImage img{w, h, {}};
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) img.pixels.push_back(u(gen));
    return img;
}

GrayImage constant(std::uint32_t size, double value) {
    return GrayImage{size, size, std::vector<double>(static_cast<std::size_t>(size) * size, value)};
}

embed::EmbeddingMatrix points(std::initializer_list<std::vector<float>> rows) {
    embed::EmbeddingMatrix m(rows.begin()->size());
    for (const auto& r : rows) m.append(r, {});
    return m;
}

} // namespace

TEST(Accuracy, FractionOfMatches) {
    const std::vector<StyleLabel> truth{StyleLabel("gal"), StyleLabel("mode"), StyleLabel("rock"), StyleLabel("gal")};
    const std::vector<StyleLabel> pred{StyleLabel("gal"), StyleLabel("rock"), StyleLabel("rock"), StyleLabel("gal")};
    EXPECT_DOUBLE_EQ(accuracy(pred, truth), 0.75);
    EXPECT_THROW(accuracy(std::span(pred).first(2), truth), DataError);
    EXPECT_THROW(accuracy({}, {}), DataError);
}

TEST(PairwiseSum, MatchesLongDoubleSum) {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(1001);
    long double ref = 0.0L;
    for (auto& x : v) {
        x = u(gen);
        ref += x;
    }
    EXPECT_NEAR(pairwise_sum(v), static_cast<double>(ref), 1e-12);
    EXPECT_EQ(pairwise_sum({}), 0.0);
}

TEST(Ssim, IdentityAndSymmetry) {
    std::mt19937_64 gen(2);
    const auto a = random_gray(gen, 20, 16);
    const auto b = random_gray(gen, 20, 16);
    EXPECT_EQ(ssim(a, a), 1.0);
    EXPECT_EQ(ssim(a, b), ssim(b, a));
    EXPECT_LT(ssim(a, b), 0.5);
}

TEST(Ssim, MatchesBruteForceWindows) {
    std::mt19937_64 gen(3);
    for (int t = 0; t < 5; ++t) {
        const auto a = random_gray(gen, 12, 10);
        auto b = a;
        std::normal_distribution<double> noise(0.0, 20.0);
        for (auto& p : b.pixels) p = std::clamp(p + noise(gen), 0.0, 255.0);
        EXPECT_NEAR(ssim(a, b), promptaug::testing::brute_ssim(a, b, SsimParams{}), 1e-9);
    }
}

TEST(Ssim, ConstantImagesClosedForm) {
    const double c1 = (0.01 * 255) * (0.01 * 255);
    EXPECT_NEAR(ssim(constant(9, 0.0), constant(9, 255.0)), c1 / (255.0 * 255.0 + c1), 1e-12);
    EXPECT_EQ(ssim(constant(9, 80.0), constant(9, 80.0)), 1.0);
}

TEST(Ssim, RejectsMismatchedOrTinyImages) {
    EXPECT_THROW(ssim(constant(8, 0), constant(9, 0)), DataError);
    EXPECT_THROW(ssim(constant(6, 0), constant(6, 0)), DataError);
}

TEST(Ssim, LumaConversion) {
    RgbImage img{1, 1, {255, 0, 0}};
    EXPECT_NEAR(to_luma(img).pixels[0], 0.299 * 255, 1e-9);
    RgbImage gray{1, 1, {10, 10, 10}};
    EXPECT_NEAR(to_luma(gray).pixels[0], 10.0, 1e-9);
}

TEST(FeatureDistance, OneMinusCosine) {
    const std::vector<float> a{1, 0};
    const std::vector<float> b{0, 2};
    const std::vector<float> c{-3, 0};
    EXPECT_NEAR(feature_distance(a, a), 0.0, 1e-12);
    EXPECT_NEAR(feature_distance(a, b), 1.0, 1e-12);
    EXPECT_NEAR(feature_distance(a, c), 2.0, 1e-12);
    const std::vector<float> zero{0, 0};
    EXPECT_THROW(feature_distance(a, zero), DataError);
}

TEST(Diversity, AllPairsPerGroupThenMeanOverGroups) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> value(40);
    for (auto& v : value) v = u(gen);
    const PairMetric metric = [&](std::size_t i, std::size_t j) { return std::abs(value[i] - value[j]); };
    const std::vector<Group> groups{{"a", {0, 1, 2}}, {"b", {3, 4, 5, 6, 7, 8, 9, 10}}, {"c", {11}}, {"d", {12, 13}}};
    const auto report = pairwise_diversity(groups, metric, "abs", 3);
    ASSERT_EQ(report.groups.size(), 3u);
    EXPECT_EQ(report.groups[0].pairs, 3u);
    EXPECT_EQ(report.groups[1].pairs, 28u);
    EXPECT_EQ(report.total_pairs, 32u);
    EXPECT_EQ(report.warnings.size(), 1u);
    const double expected = (promptaug::testing::naive_pair_mean(groups[0].items, metric) +
                             promptaug::testing::naive_pair_mean(groups[1].items, metric) +
                             promptaug::testing::naive_pair_mean(groups[3].items, metric)) /
                            3.0;
    EXPECT_NEAR(report.mean, expected, 1e-12);
    EXPECT_EQ(pairwise_diversity(groups, metric, "abs", 1).mean, report.mean);
    EXPECT_TRUE(std::isnan(pairwise_diversity({}, metric, "abs").mean));
}

TEST(Diversity, Grouping) {
    const auto refs = reference_groups({"r1", "r2", "r1", "r3", "r2"});
    ASSERT_EQ(refs.size(), 3u);
    EXPECT_EQ(refs[0].items, (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(refs[1].items, (std::vector<std::size_t>{1, 4}));

    std::vector<StyleLabel> labels(70, StyleLabel("gal"));
    labels.insert(labels.end(), 31, StyleLabel("mode"));
    labels.insert(labels.end(), 64, StyleLabel("rock"));
    const auto groups = class_groups(labels, 32);
    ASSERT_EQ(groups.size(), 4u);
    for (const auto& g : groups) EXPECT_EQ(g.items.size(), 32u);
    EXPECT_EQ(groups[0].key, "gal/0");
    EXPECT_EQ(groups[2].key, "rock/0");
    EXPECT_THROW(class_groups(labels, 1), ConfigError);
}

TEST(Mmd, ZeroForIdenticalSetsAndSingletonClosedForm) {
    std::mt19937_64 gen(5);
    const auto x = promptaug::testing::random_matrix(gen, 12, 6);
    EXPECT_NEAR(mmd_rbf(x, x), 0.0, 1e-9);
    const auto a = points({{0.0f, 0.0f}});
    const auto b = points({{10.0f, 10.0f}});
    EXPECT_NEAR(mmd_rbf(a, b), 1000.0 * (2.0 - 2.0 * std::exp(-1.0)), 1e-9);
}

TEST(Mmd, MatchesNaiveAndIsNonNegative) {
    std::mt19937_64 gen(6);
    for (int t = 0; t < 50; ++t) {
        const auto x = promptaug::testing::random_matrix(gen, 5 + t % 7, 4, 5.0);
        const auto y = promptaug::testing::random_matrix(gen, 3 + t % 5, 4, 5.0);
        const double v = mmd_rbf(x, y, MmdParams{3.0, 10.0});
        EXPECT_GE(v, 0.0);
        EXPECT_NEAR(v, std::max(0.0, promptaug::testing::naive_mmd(x, y, 3.0, 10.0)), 1e-9);
    }
    EXPECT_THROW(mmd_rbf(embed::EmbeddingMatrix(4), promptaug::testing::random_matrix(gen, 2, 4)), DataError);
    EXPECT_THROW(mmd_rbf(promptaug::testing::random_matrix(gen, 2, 3), promptaug::testing::random_matrix(gen, 2, 4)), DataError);
    EXPECT_THROW(mmd_rbf(promptaug::testing::random_matrix(gen, 2, 4), promptaug::testing::random_matrix(gen, 2, 4), MmdParams{0.0, 1.0}),
                 ConfigError);
}

TEST(Cmmd, PerStyleThenMean) {
    std::mt19937_64 gen(7);
    std::map<StyleLabel, embed::EmbeddingMatrix> syn;
    std::map<StyleLabel, embed::EmbeddingMatrix> real;
    for (const auto* name : {"gal", "rock"}) {
        syn[StyleLabel(name)] = promptaug::testing::random_matrix(gen, 6, 3);
        real[StyleLabel(name)] = promptaug::testing::random_matrix(gen, 4, 3);
    }
    const auto report = cmmd_report(syn, real);
    const double g = mmd_rbf(syn.at(StyleLabel("gal")), real.at(StyleLabel("gal")));
    const double r = mmd_rbf(syn.at(StyleLabel("rock")), real.at(StyleLabel("rock")));
    EXPECT_NEAR(report.mean, (g + r) / 2.0, 1e-12);
    real.erase(StyleLabel("rock"));
    try {
        cmmd_report(syn, real);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("rock"), std::string::npos);
    }
}

TEST(WordFrequency, CountsFilledSpansOnly) {
    promptkit::CompletedCaption a;
    a.filled_spans = {{0, "Red"}, {1, "the lace"}, {2, "red,"}};
    promptkit::CompletedCaption b;
    b.filled_spans = {{0, "blue"}, {1, "lace"}};
    const auto table = word_frequencies({a, b});
    EXPECT_EQ(table, (FrequencyTable{{"lace", 2}, {"red", 2}, {"blue", 1}}));
    TempDir dir;
    write_frequency_csv(dir / "f.csv", table);
    EXPECT_EQ(read_text(dir / "f.csv"), "word,count\nlace,2\nred,2\nblue,1\n");
}
