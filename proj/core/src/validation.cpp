#include "promptaug/promptkit.hpp"

#include "promptaug/error.hpp"

#include <algorithm>

namespace promptaug::promptkit {

namespace {

struct Element {
    bool gap = false;
    std::string word;       // literal, lower-case
    std::size_t masks = 0;  // gap: consecutive masks in the run
    std::size_t first = 0;  // gap: ordinal of its first mask
};

std::vector<Element> build_pattern(const lingua::MaskedCaption& masked) {
    std::vector<Element> pattern;
    std::size_t ordinal = 0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < masked.source.tokens.size(); ++i) {
        const bool is_mask = next < masked.mask_positions.size() && masked.mask_positions[next] == i;
        if (is_mask) {
            ++next;
            if (!pattern.empty() && pattern.back().gap) {
                ++pattern.back().masks;
            } else {
                pattern.push_back(Element{true, {}, 1, ordinal});
            }
            ++ordinal;
            continue;
        }
        const auto& surface = masked.source.tokens[i].surface;
        if (lingua::is_punctuation(surface)) {
            continue;
        }
        pattern.push_back(Element{false, lingua::to_lower(surface), 0, 0});
    }
    return pattern;
}

std::vector<std::string> completion_words(std::string_view text) {
    std::vector<std::string> words;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        return words;
    }
    for (const auto& token : lingua::tokenize(text).tokens) {
        if (!lingua::is_punctuation(token.surface)) {
            words.push_back(lingua::to_lower(token.surface));
        }
    }
    return words;
}

std::string join(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (!out.empty()) out += ' ';
        out += words[i];
    }
    return out;
}

/// Splits the words of a k-mask gap into k spans; earlier masks take the extra words.
void emit_gap(const Element& gap, const std::vector<std::string>& words, std::size_t begin, std::size_t count,
              std::vector<FilledSpan>& fills) {
    const std::size_t base = count / gap.masks;
    const std::size_t extra = count % gap.masks;
    std::size_t cursor = begin;
    for (std::size_t m = 0; m < gap.masks; ++m) {
        const std::size_t n = base + (m < extra ? 1 : 0);
        fills.push_back(FilledSpan{gap.first + m, join(words, cursor, cursor + n)});
        cursor += n;
    }
}

std::optional<std::vector<FilledSpan>> align(const std::vector<Element>& pattern, const std::vector<std::string>& words,
                                             std::size_t max_per_mask) {
    const std::size_t P = pattern.size();
    const std::size_t W = words.size();
    // ok[p][w]: pattern suffix p matches word suffix w. take[p][w]: words consumed by a gap.
    std::vector<std::vector<char>> ok(P + 1, std::vector<char>(W + 1, 0));
    std::vector<std::vector<std::size_t>> take(P + 1, std::vector<std::size_t>(W + 1, 0));
    ok[P][W] = 1;
    for (std::size_t p = P; p-- > 0;) {
        const auto& e = pattern[p];
        for (std::size_t w = W + 1; w-- > 0;) {
            if (!e.gap) {
                ok[p][w] = w < W && words[w] == e.word && ok[p + 1][w + 1];
                continue;
            }
            for (std::size_t n = e.masks; n <= e.masks * max_per_mask && w + n <= W; ++n) {
                if (ok[p + 1][w + n]) {
                    ok[p][w] = 1;
                    take[p][w] = n;
                    break;
                }
            }
        }
    }
    if (!ok[0][0]) {
        return std::nullopt;
    }
    std::vector<FilledSpan> fills;
    std::size_t w = 0;
    for (std::size_t p = 0; p < P; ++p) {
        if (pattern[p].gap) {
            emit_gap(pattern[p], words, w, take[p][w], fills);
            w += take[p][w];
        } else {
            ++w;
        }
    }
    return fills;
}

/// Completion words outside an LCS with the source's literal words, grouped into runs.
std::vector<FilledSpan> diff_fills(const std::vector<Element>& pattern, const std::vector<std::string>& words,
                                   std::size_t mask_total) {
    std::vector<std::string> literals;
    for (const auto& e : pattern) {
        if (!e.gap) literals.push_back(e.word);
    }
    const std::size_t L = literals.size();
    const std::size_t W = words.size();
    std::vector<std::vector<std::size_t>> lcs(L + 1, std::vector<std::size_t>(W + 1, 0));
    for (std::size_t i = L; i-- > 0;) {
        for (std::size_t j = W; j-- > 0;) {
            lcs[i][j] = literals[i] == words[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
        }
    }
    std::vector<char> matched(W, 0);
    for (std::size_t i = 0, j = 0; i < L && j < W;) {
        if (literals[i] == words[j]) {
            matched[j] = 1;
            ++i;
            ++j;
        } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
    std::vector<FilledSpan> fills;
    for (std::size_t j = 0; j < W;) {
        if (matched[j]) {
            ++j;
            continue;
        }
        std::size_t end = j;
        while (end < W && !matched[end]) ++end;
        const std::size_t index = mask_total == 0 ? 0 : std::min(fills.size(), mask_total - 1);
        fills.push_back(FilledSpan{index, join(words, j, end)});
        j = end;
    }
    return fills;
}

} // namespace

ValidationResult validate_completion(const lingua::MaskedCaption& masked, std::string_view text,
                                     const ValidationOptions& options) {
    if (options.max_words_per_mask < 1) {
        throw ConfigError("max_words_per_mask must be at least 1");
    }
    const auto pattern = build_pattern(masked);
    const auto words = completion_words(text);
    std::size_t source_words = 0;
    for (const auto& t : masked.source.tokens) {
        if (!lingua::is_punctuation(t.surface)) ++source_words;
    }

    const auto aligned = align(pattern, words, options.max_words_per_mask);
    ValidationResult result;
    result.fills = aligned ? *aligned : diff_fills(pattern, words, masked.mask_positions.size());

    if (words.empty()) {
        result.verdict = Verdict::reject("empty completion");
    } else if (options.check_unfilled && text.find(lingua::kMaskToken) != std::string_view::npos) {
        result.verdict = Verdict::reject("unfilled mask");
    } else if (options.check_length && words.size() > 2 * source_words) {
        result.verdict = Verdict::reject("completion too long");
    } else if (options.check_order && !aligned) {
        result.verdict = Verdict::reject("non-masked token altered");
    }
    return result;
}

} // namespace promptaug::promptkit
