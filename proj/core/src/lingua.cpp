#include "promptaug/lingua.hpp"

#include "promptaug/error.hpp"
#include "promptaug/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace promptaug::lingua {

namespace {

constexpr std::string_view kLeading = "([{\"'";
constexpr std::string_view kTrailing = ".,;:!?)]}\"'";

bool is_space(char c) noexcept {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

void split_chunk(std::string_view chunk, std::size_t offset, std::vector<Token>& out) {
    std::size_t begin = 0;
    std::size_t end = chunk.size();
    std::vector<Token> trailing;

    while (begin < end && kLeading.find(chunk[begin]) != std::string_view::npos &&
           !chunk.substr(begin, end - begin).starts_with(kMaskToken)) {
        out.push_back(Token{std::string(1, chunk[begin]), offset + begin});
        ++begin;
    }
    while (end > begin && kTrailing.find(chunk[end - 1]) != std::string_view::npos &&
           !chunk.substr(begin, end - begin).ends_with(kMaskToken)) {
        trailing.push_back(Token{std::string(1, chunk[end - 1]), offset + end - 1});
        --end;
    }
    if (end > begin) {
        out.push_back(Token{std::string(chunk.substr(begin, end - begin)), offset + begin});
    }
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

} // namespace

std::string_view to_string(Tag tag) noexcept {
    switch (tag) {
    case Tag::Noun: return "NOUN";
    case Tag::Adj: return "ADJ";
    case Tag::Other: return "OTHER";
    }
    return "OTHER";
}

Tag parse_tag(std::string_view text) {
    if (text == "NOUN") return Tag::Noun;
    if (text == "ADJ") return Tag::Adj;
    if (text == "OTHER") return Tag::Other;
    throw DataError("unknown tag '" + std::string(text) + "'");
}

std::size_t TaggedCaption::maskable_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.maskable; }));
}

TokenizedText tokenize(std::string_view text) {
    TokenizedText result;
    result.text = std::string(text);
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) {
            ++i;
        }
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) {
            ++i;
        }
        if (i > start) {
            split_chunk(text.substr(start, i - start), start, result.tokens);
        }
    }
    if (result.tokens.empty()) {
        throw DataError("cannot tokenize empty text");
    }
    return result;
}

std::string reconstruct(const TaggedCaption& caption) {
    std::string out;
    std::size_t cursor = 0;
    for (const auto& token : caption.tokens) {
        out.append(caption.text, cursor, token.offset - cursor);
        out += token.surface;
        cursor = token.offset + token.surface.size();
    }
    out.append(caption.text, cursor, std::string::npos);
    return out;
}

TaggedCaption pos_tag(const TokenizedText& tokens, const Tagger& tagger) {
    if (tokens.tokens.empty()) {
        throw DataError("pos_tag: no tokens");
    }
    std::vector<std::string> surfaces;
    surfaces.reserve(tokens.tokens.size());
    for (const auto& t : tokens.tokens) {
        surfaces.push_back(t.surface);
    }
    const auto tags = tagger.tag(surfaces);
    if (tags.size() != surfaces.size()) {
        throw DataError("tagger returned " + std::to_string(tags.size()) + " tags for " +
                        std::to_string(surfaces.size()) + " tokens");
    }
    TaggedCaption caption{tokens.text, tokens.tokens};
    for (std::size_t i = 0; i < tags.size(); ++i) {
        auto& token = caption.tokens[i];
        // [MASK] and punctuation never become mask candidates, whatever the tagger says.
        const bool candidate = token.surface != kMaskToken && !is_punctuation(token.surface);
        token.tag = candidate ? tags[i] : Tag::Other;
        token.maskable = token.tag == Tag::Noun || token.tag == Tag::Adj;
    }
    return caption;
}

TaggedCaption tag_caption(std::string_view text, const Tagger& tagger) {
    return pos_tag(tokenize(text), tagger);
}

std::size_t mask_count(double ratio, std::size_t maskable) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw ConfigError("mask ratio must lie in [0, 1]");
    }
    if (ratio == 0.0 || maskable == 0) {
        return 0;
    }
    // The epsilon keeps decimal ratios such as 0.15 (stored as 0.1499...) rounding half up.
    const auto rounded = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(maskable) + 0.5 + 1e-9));
    return std::clamp<std::size_t>(rounded, 1, maskable);
}

std::string render_masked(const TaggedCaption& caption, std::span<const std::size_t> positions) {
    std::string out;
    std::size_t cursor = 0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < caption.tokens.size(); ++i) {
        const auto& token = caption.tokens[i];
        out.append(caption.text, cursor, token.offset - cursor);
        if (next < positions.size() && positions[next] == i) {
            out += kMaskToken;
            ++next;
        } else {
            out += token.surface;
        }
        cursor = token.offset + token.surface.size();
    }
    out.append(caption.text, cursor, std::string::npos);
    return out;
}

MaskedCaption mask_caption(const TaggedCaption& caption, double ratio, std::uint64_t seed) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < caption.tokens.size(); ++i) {
        if (caption.tokens[i].maskable) {
            candidates.push_back(i);
        }
    }
    const std::size_t k = mask_count(ratio, candidates.size());
    if (ratio > 0.0 && candidates.empty()) {
        throw DataError("caption has no maskable tokens");
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(k);
    std::sort(candidates.begin(), candidates.end());

    MaskedCaption masked;
    masked.source = caption;
    masked.mask_positions = std::move(candidates);
    masked.ratio = ratio;
    masked.seed = seed;
    masked.masked_text = render_masked(caption, masked.mask_positions);
    return masked;
}

} // namespace promptaug::lingua
