#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptaug::lingua {

inline constexpr std::string_view kMaskToken = "[MASK]";

enum class Tag { Noun, Adj, Other };

std::string_view to_string(Tag tag) noexcept;
Tag parse_tag(std::string_view text);

struct Token {
    std::string surface;
    std::size_t offset = 0; // byte offset of surface in the source text
    Tag tag = Tag::Other;
    bool maskable = false;  // tag is Noun or Adj

    bool operator==(const Token&) const = default;
};

struct TokenizedText {
    std::string text;
    std::vector<Token> tokens;
};

struct TaggedCaption {
    std::string text;
    std::vector<Token> tokens;

    std::size_t maskable_count() const noexcept;
};

/// Whitespace split, then leading ( [ { " ' and trailing . , ; : ! ? ) ] } " '
/// characters are peeled off as single-character tokens. Hyphens and inner
/// apostrophes stay inside the word, and a literal [MASK] is one token.
/// Throws DataError on empty or all-whitespace text.
TokenizedText tokenize(std::string_view text);

/// Rebuilds the source text from token surfaces and the original separators.
std::string reconstruct(const TaggedCaption& caption);

/// word -> tag, keys lower-case.
class Lexicon {
public:
    Lexicon() = default;

    /// Curated fashion vocabulary: garments, colors, materials and style words.
    static Lexicon builtin();

    /// UTF-8 text, one `word<TAB>TAG` per line; '#' starts a comment line.
    static Lexicon load(const std::filesystem::path& path);
    static Lexicon parse(std::string_view content);

    void set(std::string_view word, Tag tag);
    const Tag* find(std::string_view word) const;
    void merge(const Lexicon& other);

    std::vector<std::string> words(Tag tag) const;
    std::size_t size() const noexcept { return m_entries.size(); }

private:
    std::map<std::string, Tag, std::less<>> m_entries;
};

class Tagger {
public:
    virtual ~Tagger() = default;
    virtual std::vector<Tag> tag(std::span<const std::string> surfaces) const = 0;
};

/// Closed-class stoplist -> lexicon (exact, then singular of a plural) ->
/// suffix rules (-ed/-ous/-ful/-ish adjective, -ness/-wear noun) -> Other.
class BuiltinTagger final : public Tagger {
public:
    BuiltinTagger();
    explicit BuiltinTagger(Lexicon lexicon);

    std::vector<Tag> tag(std::span<const std::string> surfaces) const override;
    Tag tag_word(std::string_view surface) const;

    const Lexicon& lexicon() const noexcept { return m_lexicon; }

private:
    Lexicon m_lexicon;
};

/// Runs an external command once per caption: tokens are written one per line
/// to its stdin and `token<TAB>TAG` lines are read back from stdout.
class ExternalTagger final : public Tagger {
public:
    explicit ExternalTagger(std::string command) : m_command(std::move(command)) {}

    std::vector<Tag> tag(std::span<const std::string> surfaces) const override;

private:
    std::string m_command;
};

bool is_stopword(std::string_view lower) noexcept;
bool is_punctuation(std::string_view surface) noexcept;
std::string to_lower(std::string_view text);

TaggedCaption pos_tag(const TokenizedText& tokens, const Tagger& tagger);

/// tokenize + pos_tag with the built-in tagger.
TaggedCaption tag_caption(std::string_view text, const Tagger& tagger);

struct MaskedCaption {
    TaggedCaption source;
    std::vector<std::size_t> mask_positions; // ascending token indices
    double ratio = 0.0;
    std::uint64_t seed = 0;
    std::string masked_text;
};

/// round_half_up(ratio * maskable), at least 1 when ratio > 0 and maskable > 0.
std::size_t mask_count(double ratio, std::size_t maskable);

/// Uniformly random subset of maskable tokens of size mask_count(), drawn by a
/// partial Fisher-Yates over the maskable positions with Rng(seed).
MaskedCaption mask_caption(const TaggedCaption& caption, double ratio, std::uint64_t seed);

/// Source text with the given token positions replaced by [MASK].
std::string render_masked(const TaggedCaption& caption, std::span<const std::size_t> positions);

} // namespace promptaug::lingua
