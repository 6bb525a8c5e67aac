#include "promptaug/prompts.hpp"

#include "promptaug/error.hpp"
#include "promptaug/lingua.hpp"

#include <cctype>

namespace promptaug::promptkit {

std::string fill_masks_system_prompt() {
    std::string text(kFillMasksPrompt);
    const auto query = text.find("Query:\n");
    const auto note = text.find("Note:\n");
    text.erase(query, note - query);
    return text;
}

std::string fill_masks_full_prompt(std::string_view caption_with_mask) {
    std::string text(kFillMasksPrompt);
    const auto slot = text.find(kQuerySlot);
    text.replace(slot, kQuerySlot.size(), caption_with_mask);
    return text;
}

std::string_view to_string(PromptStrategy strategy) noexcept {
    switch (strategy) {
    case PromptStrategy::Class: return "class";
    case PromptStrategy::Caption: return "caption";
    case PromptStrategy::Mlp: return "mlp";
    }
    return "class";
}

PromptStrategy parse_strategy(std::string_view text) {
    const auto lower = lingua::to_lower(text);
    if (lower == "class") return PromptStrategy::Class;
    if (lower == "caption") return PromptStrategy::Caption;
    if (lower == "mlp") return PromptStrategy::Mlp;
    throw ConfigError("unknown strategy '" + std::string(text) + "' (expected class|caption|mlp)");
}

std::string normalize_sentence(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (const char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += c;
    }
    while (!out.empty() && (out.back() == '.' || out.back() == ' ')) {
        out.pop_back();
    }
    return out;
}

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (const char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) {
            ++count;
        }
        in_word = !space;
    }
    return count;
}

bool is_article_led(std::string_view text) {
    const auto lower = lingua::to_lower(text.substr(0, std::min<std::size_t>(text.size(), 3)));
    return lower.starts_with("a ") || lower.starts_with("an ");
}

std::string render_prompt(PromptStrategy strategy, std::optional<std::string_view> class_name,
                          std::optional<std::string_view> caption) {
    const std::string prefix(kCaptionPrefix);
    if (strategy == PromptStrategy::Class) {
        if (!class_name || normalize_sentence(*class_name).empty()) {
            throw DataError("class prompt requires a class name");
        }
        return prefix + " a " + normalize_sentence(*class_name) + " style outfit.";
    }
    if (!caption) {
        throw DataError(std::string(to_string(strategy)) + " prompt requires a caption");
    }
    const auto payload = normalize_sentence(*caption);
    if (!is_article_led(payload)) {
        throw DataError("caption must start with an article ('a ...'): '" + payload + "'");
    }
    return prefix + " " + payload + ".";
}

} // namespace promptaug::promptkit
