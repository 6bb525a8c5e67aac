#include "oracles.hpp"
#include "test_support.hpp"

#include "promptaug/error.hpp"
#include "promptaug/io.hpp"
#include "promptaug/probe.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

using namespace promptaug;
using namespace promptaug::probe;
using promptaug::testing::TempDir;

namespace {

probe::Batch random_batch(std::mt19937_64& gen, std::size_t n, std::size_t d, std::size_t classes) {
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> label(0, classes - 1);
    probe::Batch b;
    b.d = d;
    for (std::size_t i = 0; i < n * d; ++i) b.x.push_back(normal(gen));
    for (std::size_t i = 0; i < n; ++i) b.y.push_back(label(gen));
    return b;
}

LinearHead random_head(std::mt19937_64& gen, std::size_t classes, std::size_t d) {
    std::normal_distribution<double> normal(0.0, 0.5);
    LinearHead head(classes, d);
    for (auto& w : head.W) w = normal(gen);
    for (auto& v : head.b) v = normal(gen);
    return head;
}

const std::vector<StyleLabel> kFour{StyleLabel("gal"), StyleLabel("mode"), StyleLabel("rock"), StyleLabel("street")};

} // namespace

TEST(CrossEntropy, MatchesNaiveDefinition) {
    std::mt19937_64 gen(1);
    for (int t = 0; t < 20; ++t) {
        const auto head = random_head(gen, 5, 4);
        const auto batch = random_batch(gen, 6, 4, 5);
        EXPECT_NEAR(ce_loss(head, batch).loss,
                    static_cast<double>(promptaug::testing::naive_cross_entropy(head.W, head.b, 5, batch)), 1e-12);
    }
}

TEST(CrossEntropy, StableForLargeLogitsAndChecksInput) {
    const std::vector<double> logits{1000.0, 0.0, -1000.0};
    const std::vector<std::size_t> labels{0};
    const auto ce = softmax_cross_entropy(logits, 3, labels);
    EXPECT_NEAR(ce.loss, 0.0, 1e-12);
    EXPECT_TRUE(std::isfinite(ce.grad_logits[2]));

    const std::vector<double> nan{std::nan(""), 0.0, 0.0};
    EXPECT_THROW(softmax_cross_entropy(nan, 3, labels), DataError);
    const std::vector<std::size_t> bad{3};
    EXPECT_THROW(softmax_cross_entropy(logits, 3, bad), DataError);
    EXPECT_THROW(softmax_cross_entropy(logits, 2, labels), DataError);
}

TEST(CombinedLoss, SumOfBothTermsAndGradients) {
    std::mt19937_64 gen(2);
    const auto head = random_head(gen, 3, 4);
    const auto real = random_batch(gen, 2, 4, 3);
    const auto syn = random_batch(gen, 7, 4, 3);
    const auto both = combined_loss(head, real, syn);
    const auto r = ce_loss(head, real);
    const auto s = ce_loss(head, syn);
    EXPECT_NEAR(both.loss, static_cast<double>(promptaug::testing::naive_combined_loss(head, real, syn)), 1e-12);
    for (std::size_t i = 0; i < both.gW.size(); ++i) EXPECT_DOUBLE_EQ(both.gW[i], r.gW[i] + s.gW[i]);
    for (std::size_t i = 0; i < both.gb.size(); ++i) EXPECT_DOUBLE_EQ(both.gb[i], r.gb[i] + s.gb[i]);
    EXPECT_THROW(combined_loss(head, real, probe::Batch{4, {}, {}}), DataError);
}

TEST(CombinedLoss, GradientMatchesCentralDifferences) {
    std::mt19937_64 gen(3);
    auto head = random_head(gen, 4, 3);
    const auto real = random_batch(gen, 3, 3, 4);
    const auto syn = random_batch(gen, 5, 3, 4);
    const auto analytic = combined_loss(head, real, syn);
    const double h = 1e-4;
    auto check = [&](std::vector<double>& params, const std::vector<double>& grads) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            params[i] = saved + h;
            const double up = static_cast<double>(promptaug::testing::naive_combined_loss(head, real, syn));
            params[i] = saved - h;
            const double down = static_cast<double>(promptaug::testing::naive_combined_loss(head, real, syn));
            params[i] = saved;
            const double numeric = (up - down) / (2 * h);
            EXPECT_LT(std::abs(numeric - grads[i]) / std::max({std::abs(numeric), std::abs(grads[i]), 1e-8}), 1e-4);
        }
    };
    check(head.W, analytic.gW);
    check(head.b, analytic.gb);
}

TEST(AdamW, FirstStepFromUnitWeightAndGradient) {
    std::vector<double> w{1.0};
    const std::vector<double> g{1.0};
    AdamWState state(1);
    adamw_step(w, g, state, 1e-4, 0.9, 0.999, 1e-8, 1e-2);
    EXPECT_NEAR(w[0], 0.999899, 1e-9);
    EXPECT_EQ(state.t, 1u);
}

TEST(AdamW, FollowsTheRecursionOverSeveralSteps) {
    std::vector<double> w{0.5, -2.0};
    AdamWState state(2);
    double m[2] = {0, 0};
    double v[2] = {0, 0};
    double ref[2] = {0.5, -2.0};
    const double lr = 0.01, b1 = 0.8, b2 = 0.95, eps = 1e-6, wd = 0.1;
    for (int t = 1; t <= 5; ++t) {
        const std::vector<double> g{0.3 * t, -1.0 / t};
        adamw_step(w, g, state, lr, b1, b2, eps, wd);
        for (int i = 0; i < 2; ++i) {
            m[i] = b1 * m[i] + (1 - b1) * g[i];
            v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(b1, t));
            const double vh = v[i] / (1 - std::pow(b2, t));
            ref[i] = ref[i] - lr * mh / (std::sqrt(vh) + eps) - lr * wd * ref[i];
            EXPECT_NEAR(w[i], ref[i], 1e-12);
        }
    }
}

TEST(EarlyStopper, StrictImprovementAndPatience) {
    EarlyStopper s(2);
    EXPECT_TRUE(s.update(1, 1.0));
    EXPECT_FALSE(s.update(2, 1.0));
    EXPECT_FALSE(s.should_stop());
    EXPECT_TRUE(s.update(3, 0.5));
    EXPECT_FALSE(s.update(4, 0.6));
    EXPECT_FALSE(s.update(5, 0.5));
    EXPECT_TRUE(s.should_stop());
    EXPECT_EQ(s.best_epoch(), 3);
    EXPECT_EQ(s.best_loss(), 0.5);
}

TEST(TrainConfig, ValidationAndJson) {
    TrainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.beta1 = 1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.patience = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.lr = 0.05;
    cfg.seed = 4;
    const auto j = to_json(cfg);
    EXPECT_EQ(j.at("betas"), (nlohmann::json{0.9, 0.999}));
    EXPECT_EQ(to_json(train_config_from_json(j)), j);
}

TEST(TrainProbe, EarlyStoppingKeepsBestEpochParameters) {
    std::mt19937_64 gen(4);
    const auto real = promptaug::testing::class_blobs(gen, kFour, 2, 16, 0.3, embed::Origin::Real);
    const auto val = promptaug::testing::class_blobs(gen, kFour, 2, 16, 0.3, embed::Origin::Real);
    TrainConfig cfg;
    cfg.lr = 0.01;
    cfg.patience = 3;
    const std::vector<double> losses{5, 4, 3, 3.5, 3.0, 3.2};
    TrainHooks hooks{[&](int epoch, double) { return losses[static_cast<std::size_t>(epoch - 1)]; }};
    const auto result = train_probe(real, nullptr, val, cfg, hooks);
    EXPECT_TRUE(result.stopped_early);
    EXPECT_EQ(result.best_epoch, 3);
    EXPECT_EQ(result.history.size(), 6u);

    cfg.max_epochs = 3;
    TrainHooks decreasing{[](int epoch, double) { return 10.0 - epoch; }};
    const auto three = train_probe(real, nullptr, val, cfg, decreasing);
    EXPECT_FALSE(three.stopped_early);
    EXPECT_EQ(three.model, result.model);
}

TEST(TrainProbe, SeparableDataIsLearnedDeterministically) {
    std::mt19937_64 gen(5);
    const auto real = promptaug::testing::class_blobs(gen, kFour, 1, 16, 0.05, embed::Origin::Real);
    const auto syn = promptaug::testing::class_blobs(gen, kFour, 32, 16, 0.05, embed::Origin::Synthetic);
    const auto val = promptaug::testing::class_blobs(gen, kFour, 2, 16, 0.05, embed::Origin::Real);
    const auto test = promptaug::testing::class_blobs(gen, kFour, 10, 16, 0.05, embed::Origin::Real);
    TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.synthetic_batch = 16;
    cfg.max_epochs = 30;
    const auto a = train_probe(real, &syn, val, cfg);
    const auto b = train_probe(real, &syn, val, cfg);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.history, b.history);
    EXPECT_EQ(a.model.classes, kFour);
    const auto predicted = predict_labels(a.model, test);
    for (std::size_t i = 0; i < test.n(); ++i) {
        EXPECT_EQ(predicted[i], test.info(i).label);
    }
    cfg.seed = 1;
    EXPECT_NE(train_probe(real, &syn, val, cfg).model, a.model);
}

TEST(TrainProbe, RejectsUnknownClassesAndEmptySets) {
    std::mt19937_64 gen(6);
    const auto real = promptaug::testing::class_blobs(gen, {StyleLabel("gal")}, 2, 16, 0.1, embed::Origin::Real);
    const auto other = promptaug::testing::class_blobs(gen, {StyleLabel("mode")}, 2, 16, 0.1, embed::Origin::Real);
    EXPECT_THROW(train_probe(real, nullptr, other, TrainConfig{}), DataError);
    EXPECT_THROW(train_probe(embed::EmbeddingMatrix(16), nullptr, real, TrainConfig{}), DataError);
    EXPECT_THROW(train_probe(real, nullptr, embed::EmbeddingMatrix(16), TrainConfig{}), DataError);
}

TEST(Predict, TiesGoToLowestIndex) {
    ProbeModel model{kFour, 2, std::vector<float>(8, 0.0f), std::vector<float>(4, 0.0f)};
    model.b[2] = 1.0f;
    model.b[3] = 1.0f;
    embed::EmbeddingMatrix emb(2);
    const std::vector<float> row{0.3f, 0.4f};
    emb.append(row, {});
    EXPECT_EQ(predict(model, emb), std::vector<std::size_t>{2});
    embed::EmbeddingMatrix wide(3);
    const std::vector<float> row3{1, 2, 3};
    wide.append(row3, {});
    EXPECT_THROW(predict(model, wide), DataError);
}

TEST(Checkpoint, RoundTripAndByteLayout) {
    TempDir dir;
    ProbeModel model{{StyleLabel("gal"), StyleLabel("rock")}, 3, {1, 2, 3, 4, 5, 6}, {0.5f, -0.5f}};
    save_probe(model, dir / "p.prb", {{"n_shot", 1}});
    EXPECT_EQ(load_probe(dir / "p.prb"), model);
    const auto bytes = read_bytes(dir / "p.prb");
    ASSERT_EQ(bytes.size(), 5u + 4 + 4 + 4 * 8);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "PRBV1");
    EXPECT_EQ(bytes[5], 2);
    EXPECT_EQ(bytes[9], 3);
    float last = 0;
    std::memcpy(&last, bytes.data() + bytes.size() - 4, 4);
    EXPECT_EQ(last, -0.5f);
    const auto meta = nlohmann::json::parse(read_text(dir / "p.prb.json"));
    EXPECT_EQ(meta.at("classes"), (nlohmann::json{"gal", "rock"}));

    auto truncated = bytes;
    truncated.pop_back();
    write_bytes(dir / "p.prb", truncated);
    EXPECT_THROW(load_probe(dir / "p.prb"), DataError);
}
