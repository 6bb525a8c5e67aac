#include "test_support.hpp"

#include "promptaug/error.hpp"
#include "promptaug/io.hpp"
#include "promptaug/promptkit.hpp"

#include <gtest/gtest.h>

using namespace promptaug;
using namespace promptaug::promptkit;
using promptaug::testing::ScriptedLlm;
using promptaug::testing::TempDir;

namespace {

/// "a pink dress with white lace and black boots" with the given token positions masked.
lingua::MaskedCaption masked_at(std::vector<std::size_t> positions,
                                std::string_view text = "a pink dress with white lace and black boots") {
    lingua::MaskedCaption m;
    m.source = lingua::tag_caption(text, lingua::BuiltinTagger());
    m.mask_positions = std::move(positions);
    m.ratio = 0.5;
    m.masked_text = lingua::render_masked(m.source, m.mask_positions);
    return m;
}

LlmClient client_for(std::shared_ptr<LlmBackend> backend) {
    LlmClient client(std::move(backend), RetryPolicy{3, std::chrono::milliseconds{1}});
    client.set_sleeper([](auto) {});
    return client;
}

corpus::ImageRecord record(const std::filesystem::path& path) {
    return corpus::ImageRecord{"train/gal/x.png", path, StyleLabel("gal"), corpus::Split::Train};
}

} // namespace

TEST(Validation, AcceptsFaithfulCompletionAndRecoversFills) {
    const auto m = masked_at({1, 4});
    EXPECT_EQ(m.masked_text, "a [MASK] dress with [MASK] lace and black boots");
    const auto r = validate_completion(m, "A red dress with golden lace and black boots.");
    EXPECT_TRUE(r.verdict.accepted) << r.verdict.reason;
    EXPECT_EQ(r.fills, (std::vector<FilledSpan>{{0, "red"}, {1, "golden"}}));
}

TEST(Validation, ConsecutiveMasksShareOneGap) {
    const auto m = masked_at({1, 2});
    const auto r = validate_completion(m, "a long flowy skirt with white lace and black boots");
    EXPECT_TRUE(r.verdict.accepted) << r.verdict.reason;
    EXPECT_EQ(r.fills, (std::vector<FilledSpan>{{0, "long flowy"}, {1, "skirt"}}));
}

TEST(Validation, RejectsEachCriterion) {
    const auto m = masked_at({1, 4});
    EXPECT_EQ(validate_completion(m, "a [MASK] dress with gold lace and black boots").verdict.reason, "unfilled mask");
    EXPECT_EQ(validate_completion(m, "a red gown with gold lace and black boots").verdict.reason,
              "non-masked token altered");
    EXPECT_EQ(validate_completion(m, "a red dress with gold lace and boots").verdict.reason,
              "non-masked token altered");
    EXPECT_EQ(validate_completion(m, "black boots and gold lace with a red dress").verdict.reason,
              "non-masked token altered");
    EXPECT_EQ(validate_completion(m, "").verdict.reason, "empty completion");
    const std::string longer = "a red red red red red red red red red red red red dress with gold lace and black boots";
    EXPECT_EQ(validate_completion(m, longer).verdict.reason, "completion too long");
}

TEST(Validation, WordsPerMaskBound) {
    const auto m = masked_at({1});
    EXPECT_TRUE(validate_completion(m, "a very pale pink dress with white lace and black boots").verdict.accepted);
    EXPECT_FALSE(
        validate_completion(m, "a very very pale pink dress with white lace and black boots").verdict.accepted);
    ValidationOptions strict;
    strict.max_words_per_mask = 1;
    EXPECT_FALSE(validate_completion(m, "a pale pink dress with white lace and black boots", strict).verdict.accepted);
    EXPECT_TRUE(validate_completion(m, "a red dress with white lace and black boots", strict).verdict.accepted);
    strict.max_words_per_mask = 0;
    EXPECT_THROW(validate_completion(m, "x", strict), ConfigError);
}

TEST(Validation, CriteriaCanBeDisabled) {
    const auto m = masked_at({1});
    ValidationOptions lenient;
    lenient.check_order = false;
    EXPECT_TRUE(validate_completion(m, "a red gown with white lace and black boots", lenient).verdict.accepted);
}

TEST(Validation, RejectedCompletionsStillReportFills) {
    const auto m = masked_at({1});
    const auto r = validate_completion(m, "a red gown with white lace and black boots");
    EXPECT_FALSE(r.verdict.accepted);
    ASSERT_FALSE(r.fills.empty());
    EXPECT_EQ(r.fills.front().text, "red gown");
}

TEST(Caption, ContractChecks) {
    EXPECT_FALSE(caption_contract_violation("A photo of a woman wearing a pink dress.").has_value());
    EXPECT_FALSE(caption_contract_violation("\"A photo of a woman wearing an ivory gown\"").has_value());
    EXPECT_EQ(caption_contract_violation("A woman in a pink dress."), "missing prefix");
    EXPECT_EQ(caption_contract_violation("A photo of a woman wearing pink dress."), "payload not article-led");
    std::string payload = "A photo of a woman wearing a";
    for (int i = 0; i < 30; ++i) payload += " red";
    EXPECT_EQ(caption_contract_violation(payload), "length>30");
    EXPECT_EQ(strip_caption_prefix("A photo of a woman wearing  a pink dress. "), "a pink dress");
}

TEST(Caption, RetriesOnceThenRejects) {
    TempDir dir;
    write_bytes(dir / "x.png", promptaug::testing::tagged_png(StyleLabel("gal"), 1));

    auto good_second = std::make_shared<ScriptedLlm>(
        std::vector<std::string>{"Sure! Here it is.", "A photo of a woman wearing a gold camisole."});
    const auto ok = caption_image(client_for(good_second), record(dir / "x.png"));
    EXPECT_TRUE(ok.verdict.accepted);
    EXPECT_EQ(ok.caption, "a gold camisole");
    EXPECT_EQ(ok.responses.size(), 2u);
    const auto requests = good_second->requests();
    ASSERT_EQ(requests.size(), 2u);
    EXPECT_EQ(requests[0].system, kCaptioningPrompt);
    EXPECT_EQ(requests[0].image, dir / "x.png");

    auto always_bad = std::make_shared<ScriptedLlm>(std::vector<std::string>{"no", "still no"});
    const auto bad = caption_image(client_for(always_bad), record(dir / "x.png"));
    EXPECT_FALSE(bad.verdict.accepted);
    EXPECT_EQ(bad.responses, (std::vector<std::string>{"no", "still no"}));
    EXPECT_TRUE(bad.caption.empty());
    EXPECT_EQ(caption_from_json(to_json(bad)).verdict.accepted, false);
}

TEST(Fill, SendsTemplateAndValidates) {
    const auto m = masked_at({1, 4});
    auto backend = std::make_shared<ScriptedLlm>(
        std::vector<std::string>{"\"A photo of a woman wearing a red dress with gold lace and black boots.\""});
    const auto result = fill_masks(client_for(backend), m, {{"style", "gal"}});
    EXPECT_TRUE(result.completion.validation.accepted);
    EXPECT_EQ(result.completion.completed_text, "a red dress with gold lace and black boots");
    EXPECT_EQ(result.exchange.verdict, "accepted");
    const auto requests = backend->requests();
    ASSERT_EQ(requests.size(), 1u);
    EXPECT_EQ(requests[0].system, fill_masks_system_prompt());
    EXPECT_EQ(requests[0].user, m.masked_text);
    EXPECT_EQ(requests[0].hints.at("style"), "gal");
}

TEST(Fill, SemanticFailureIsAVerdictNotAnException) {
    auto backend = std::make_shared<ScriptedLlm>(std::vector<std::string>{"I cannot help with that."});
    const auto result = fill_masks(client_for(backend), masked_at({1}));
    EXPECT_FALSE(result.completion.validation.accepted);
    EXPECT_EQ(result.exchange.verdict, "rejected");
    EXPECT_THROW(fill_masks(client_for(backend), masked_at({})), DataError);
}

TEST(Fill, JsonRoundTrip) {
    const auto m = masked_at({1, 4});
    const auto back = masked_from_json(to_json(m));
    EXPECT_EQ(back.masked_text, m.masked_text);
    EXPECT_EQ(back.mask_positions, m.mask_positions);
    EXPECT_EQ(back.source.tokens, m.source.tokens);

    CompletedCaption c{m, "a red dress with gold lace and black boots", {{0, "red"}, {1, "gold"}},
                       Verdict::reject("x")};
    const auto c2 = completion_from_json(to_json(c));
    EXPECT_EQ(c2.filled_spans, c.filled_spans);
    EXPECT_FALSE(c2.validation.accepted);
    EXPECT_EQ(c2.validation.reason, "x");
}

TEST(Fill, CleanCompletion) {
    EXPECT_EQ(clean_completion("  'A photo of a woman wearing a red dress.' "), "a red dress");
    EXPECT_EQ(clean_completion("a red dress"), "a red dress");
}
