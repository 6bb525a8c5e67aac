#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace promptaug::promptkit {

/// Captioning instruction, sent as the system message with the image attached.
inline constexpr std::string_view kCaptioningPrompt =
    "Instruction:\n"
    "Please generate a caption of the provided images within 30 words.\n"
    "\n"
    "Note:\n"
    "- Colors, categories, designs of each piece of fashion item MUST be described.\n"
    "- Overall fashion style of the outfit MUST be described.\n"
    "- Generated captions MUST be started with: A photo of a woman wearing...\n";

/// Fill-in-the-masks template. ${caption_with_mask} is the query slot.
inline constexpr std::string_view kFillMasksPrompt =
    "Instruction:\n"
    "Instruction: Please fill in the [MASK] to complete the outfit.\n"
    "\n"
    "Query:\n"
    "${caption_with_mask}\n"
    "\n"
    "Note:\n"
    "- One [MASK] token corresponds to one word.\n"
    "- You MUST output the entire sentence, not just the corresponding word for [MASK].\n"
    "- Do NOT output any unnecessary text around the word corresponding to the [MASK].\n";

inline constexpr std::string_view kQuerySlot = "${caption_with_mask}";
inline constexpr std::string_view kCaptionPrefix = "A photo of a woman wearing";
inline constexpr std::size_t kMaxCaptionWords = 30;

/// System message for the fill step: the template without its Query block.
std::string fill_masks_system_prompt();

/// Template with the query slot substituted.
std::string fill_masks_full_prompt(std::string_view caption_with_mask);

enum class PromptStrategy { Class, Caption, Mlp };

std::string_view to_string(PromptStrategy strategy) noexcept;
PromptStrategy parse_strategy(std::string_view text);

/// Class   -> "A photo of a woman wearing a {class} style outfit."
/// Caption -> "A photo of a woman wearing {caption}."
/// Mlp     -> "A photo of a woman wearing {completed caption}."
/// Whitespace runs collapse to one space and exactly one trailing period is
/// emitted. Caption/Mlp payloads must start with the article "a" or "an".
std::string render_prompt(PromptStrategy strategy, std::optional<std::string_view> class_name,
                          std::optional<std::string_view> caption);

/// Collapses whitespace runs, trims, and strips trailing periods.
std::string normalize_sentence(std::string_view text);

std::size_t word_count(std::string_view text);

bool is_article_led(std::string_view text);

} // namespace promptaug::promptkit
