#pragma once

#include "promptaug/corpus.hpp"
#include "promptaug/lingua.hpp"
#include "promptaug/llm_backend.hpp"
#include "promptaug/prompts.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace promptaug::promptkit {

struct Verdict {
    bool accepted = true;
    std::string reason; // empty when accepted

    static Verdict accept() { return {}; }
    static Verdict reject(std::string reason) { return {false, std::move(reason)}; }
};

// --- captioning ---------------------------------------------------------------

struct CaptionResult {
    std::string record_id;
    StyleLabel label;
    Verdict verdict;
    std::string caption;                // "a ..." payload, trailing period removed; empty if unusable
    std::vector<std::string> responses; // raw responses, in order
    std::vector<LlmExchange> exchanges;
};

/// Why a captioning response breaks the contract, or nullopt if it conforms.
/// Checks: "A photo of a woman wearing" prefix, article-led payload, payload of at most 30 words.
std::optional<std::string> caption_contract_violation(std::string_view response);

/// Payload after the prefix, whitespace-normalized, trailing period removed.
std::string strip_caption_prefix(std::string_view response);

/// Sends the captioning instruction with the image attached. A non-conforming
/// response is retried once with the instruction re-sent; a second failure
/// yields a Rejected result with both raw responses kept. Transport failures
/// (after the client's retries) propagate as BackendError.
CaptionResult caption_image(const LlmClient& client, const corpus::ImageRecord& image);

nlohmann::json to_json(const CaptionResult& result);
CaptionResult caption_from_json(const nlohmann::json& j);

// --- fill-in-the-masks --------------------------------------------------------

struct ValidationOptions {
    bool check_unfilled = true; // (a) no literal [MASK] left
    bool check_order = true;    // (b) non-masked tokens kept, in order
    bool check_length = true;   // (c) at most 2x the source word count
    /// Words one mask may expand to. 1 enforces "one [MASK] token corresponds to one word".
    std::size_t max_words_per_mask = 3;
};

struct FilledSpan {
    std::size_t mask_index = 0; // ordinal of the mask within the caption
    std::string text;

    bool operator==(const FilledSpan&) const = default;
};

struct ValidationResult {
    Verdict verdict;
    std::vector<FilledSpan> fills;
};

/// Accepted iff every enabled criterion holds. For (b) the completion's words
/// (punctuation dropped, case folded) must split as: the source's non-masked
/// words, in order and verbatim, with each maximal run of k consecutive masks
/// replaced by between k and k*max_words_per_mask words. The matched gap
/// words become `fills`; for rejected completions fills are recovered from a
/// longest-common-subsequence diff instead.
ValidationResult validate_completion(const lingua::MaskedCaption& masked, std::string_view text,
                                     const ValidationOptions& options = {});

struct CompletedCaption {
    lingua::MaskedCaption masked;
    std::string completed_text;
    std::vector<FilledSpan> filled_spans;
    Verdict validation;
};

struct FillResult {
    CompletedCaption completion;
    LlmExchange exchange;
};

/// Sends the fill-in-the-masks prompt (system) with the masked caption (user).
/// Semantic failures are reported through the verdict, never thrown.
/// `hints` are passed to the backend (style and seed for the mock).
FillResult fill_masks(const LlmClient& client, const lingua::MaskedCaption& masked,
                      const std::map<std::string, std::string>& hints = {},
                      const ValidationOptions& options = {});

/// Strips quotes, a leading "A photo of a woman wearing" and the trailing period.
std::string clean_completion(std::string_view response);

nlohmann::json to_json(const lingua::MaskedCaption& masked);
lingua::MaskedCaption masked_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CompletedCaption& completion);
CompletedCaption completion_from_json(const nlohmann::json& j);

} // namespace promptaug::promptkit
