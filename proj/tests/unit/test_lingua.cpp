#include "test_support.hpp"

#include "promptaug/error.hpp"
#include "promptaug/lingua.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace promptaug;
using namespace promptaug::lingua;
using promptaug::testing::TempDir;

namespace {

std::vector<std::string> surfaces(const TokenizedText& t) {
    std::vector<std::string> out;
    for (const auto& tok : t.tokens) out.push_back(tok.surface);
    return out;
}

} // namespace

TEST(Tokenize, PeelsPunctuationAndKeepsHyphens) {
    const auto t = tokenize("A photo of (a) high-waisted skirt, [MASK] and \"bold\" boots.");
    EXPECT_EQ(surfaces(t), (std::vector<std::string>{"A", "photo", "of", "(", "a", ")", "high-waisted", "skirt", ",",
                                                      "[MASK]", "and", "\"", "bold", "\"", "boots", "."}));
    for (const auto& tok : t.tokens) {
        EXPECT_EQ(t.text.substr(tok.offset, tok.surface.size()), tok.surface);
    }
}

TEST(Tokenize, EmptyTextIsADataError) {
    EXPECT_THROW(tokenize(""), DataError);
    EXPECT_THROW(tokenize("   \t"), DataError);
}

TEST(Tokenize, ReconstructIsLossless) {
    const std::string text = "  a  red dress,\twith black  boots. ";
    const auto caption = tag_caption(text, BuiltinTagger());
    EXPECT_EQ(reconstruct(caption), text);
}

TEST(Tagger, BuiltinRules) {
    const BuiltinTagger tagger;
    EXPECT_EQ(tagger.tag_word("Dress"), Tag::Noun);
    EXPECT_EQ(tagger.tag_word("dresses"), Tag::Noun);
    EXPECT_EQ(tagger.tag_word("skirts"), Tag::Noun);
    EXPECT_EQ(tagger.tag_word("pink"), Tag::Adj);
    EXPECT_EQ(tagger.tag_word("the"), Tag::Other);
    EXPECT_EQ(tagger.tag_word("with"), Tag::Other);
    EXPECT_EQ(tagger.tag_word(","), Tag::Other);
    EXPECT_EQ(tagger.tag_word("swimwear"), Tag::Noun);
    EXPECT_EQ(tagger.tag_word("happiness"), Tag::Noun);
    EXPECT_EQ(tagger.tag_word("buttoned"), Tag::Adj);
    EXPECT_EQ(tagger.tag_word("glamourous"), Tag::Adj);
    EXPECT_EQ(tagger.tag_word("zzz"), Tag::Other);
}

TEST(Tagger, LexiconParsingAndMerge) {
    auto lex = Lexicon::parse("# extra words\nsarouel\tNOUN\nmatcha\tADJ\n");
    EXPECT_EQ(lex.size(), 2u);
    EXPECT_THROW(Lexicon::parse("broken line\n"), DataError);
    EXPECT_THROW(Lexicon::parse("word\tVERB\n"), DataError);
    auto merged = Lexicon::builtin();
    merged.merge(lex);
    const BuiltinTagger tagger(merged);
    EXPECT_EQ(tagger.tag_word("sarouel"), Tag::Noun);
    EXPECT_EQ(tagger.tag_word("matcha"), Tag::Adj);
    EXPECT_EQ(tagger.tag_word("skirt"), Tag::Noun);

    TempDir dir;
    std::ofstream(dir / "lex.tsv") << "kilt\tNOUN\n";
    EXPECT_NE(Lexicon::load(dir / "lex.tsv").find("kilt"), nullptr);
}

TEST(Tagger, ExternalCommandContract) {
    const ExternalTagger all_nouns("awk '{ print $0 \"\\tNOUN\" }'");
    const std::vector<std::string> words{"a", "red", "dress"};
    EXPECT_EQ(all_nouns.tag(words), (std::vector<Tag>{Tag::Noun, Tag::Noun, Tag::Noun}));
    EXPECT_THROW(ExternalTagger("false").tag(words), DataError);
    EXPECT_THROW(ExternalTagger("cat").tag(words), DataError);
    EXPECT_THROW(ExternalTagger("head -n 1 | awk '{ print $0 \"\\tADJ\" }'").tag(words), DataError);
}

TEST(Tagger, TagCountMismatchIsRejected) {
    struct Short final : Tagger {
        std::vector<Tag> tag(std::span<const std::string>) const override { return {Tag::Noun}; }
    };
    EXPECT_THROW(tag_caption("a red dress", Short()), DataError);
}

TEST(Mask, CountRoundsHalfUpWithFloorOfOne) {
    EXPECT_EQ(mask_count(0.5, 7), 4u);
    EXPECT_EQ(mask_count(0.5, 6), 3u);
    EXPECT_EQ(mask_count(0.15, 10), 2u);
    EXPECT_EQ(mask_count(0.01, 5), 1u);
    EXPECT_EQ(mask_count(1.0, 5), 5u);
    EXPECT_EQ(mask_count(0.0, 5), 0u);
    EXPECT_THROW(mask_count(1.5, 5), ConfigError);
    EXPECT_THROW(mask_count(-0.1, 5), ConfigError);
}

TEST(Mask, OnlyMaskableTokensAndDeterministic) {
    const auto caption = tag_caption("a pink dress with white lace and black boots", BuiltinTagger());
    ASSERT_EQ(caption.maskable_count(), 6u);
    const auto m = mask_caption(caption, 0.5, 42);
    EXPECT_EQ(m.mask_positions.size(), 3u);
    EXPECT_TRUE(std::is_sorted(m.mask_positions.begin(), m.mask_positions.end()));
    for (const auto pos : m.mask_positions) {
        EXPECT_TRUE(caption.tokens[pos].maskable);
    }
    EXPECT_EQ(mask_caption(caption, 0.5, 42).masked_text, m.masked_text);
    std::size_t occurrences = 0;
    for (std::size_t p = m.masked_text.find("[MASK]"); p != std::string::npos; p = m.masked_text.find("[MASK]", p + 1)) {
        ++occurrences;
    }
    EXPECT_EQ(occurrences, 3u);
}

TEST(Mask, CoversAllSubsetsUniformly) {
    const auto caption = tag_caption("pink dress white boots", BuiltinTagger());
    ASSERT_EQ(caption.maskable_count(), 4u);
    std::map<std::vector<std::size_t>, int> counts;
    const int trials = 6000;
    for (int s = 0; s < trials; ++s) {
        ++counts[mask_caption(caption, 0.5, static_cast<std::uint64_t>(s)).mask_positions];
    }
    ASSERT_EQ(counts.size(), 6u);
    for (const auto& [subset, c] : counts) {
        EXPECT_NEAR(c / static_cast<double>(trials), 1.0 / 6.0, 0.02);
    }
}

TEST(Mask, CaptionWithoutMaskableTokensIsRejected) {
    const auto caption = tag_caption("with the and of", BuiltinTagger());
    EXPECT_THROW(mask_caption(caption, 0.5, 1), DataError);
}
