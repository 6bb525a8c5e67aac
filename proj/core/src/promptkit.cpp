#include "promptaug/promptkit.hpp"

#include "promptaug/error.hpp"

using nlohmann::json;

namespace promptaug::promptkit {

namespace {

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

std::string strip_quotes(std::string text) {
    while (text.size() >= 2 && ((text.front() == '"' && text.back() == '"') ||
                                (text.front() == '\'' && text.back() == '\''))) {
        text = trim(std::string_view(text).substr(1, text.size() - 2));
    }
    return text;
}

bool starts_with_prefix(std::string_view text) {
    return text.size() >= kCaptionPrefix.size() &&
           lingua::to_lower(text.substr(0, kCaptionPrefix.size())) == lingua::to_lower(kCaptionPrefix);
}

} // namespace

std::string strip_caption_prefix(std::string_view response) {
    const auto text = strip_quotes(trim(response));
    if (!starts_with_prefix(text)) {
        return normalize_sentence(text);
    }
    return normalize_sentence(std::string_view(text).substr(kCaptionPrefix.size()));
}

std::optional<std::string> caption_contract_violation(std::string_view response) {
    const auto text = strip_quotes(trim(response));
    if (!starts_with_prefix(text)) {
        return "missing prefix";
    }
    const auto payload = strip_caption_prefix(text);
    if (!is_article_led(payload)) {
        return "payload not article-led";
    }
    if (word_count(payload) > kMaxCaptionWords) {
        return "length>30";
    }
    return std::nullopt;
}

CaptionResult caption_image(const LlmClient& client, const corpus::ImageRecord& image) {
    ChatRequest request;
    request.kind = "caption";
    request.system = std::string(kCaptioningPrompt);
    request.image = image.path;
    request.hints = {{"image_id", image.id}, {"style", image.label.str()}};

    CaptionResult result{image.id, image.label, Verdict::accept(), {}, {}, {}};
    for (int round = 0; round < 2; ++round) {
        const auto reply = client.complete(request);
        result.responses.push_back(reply.text);
        const auto violation = caption_contract_violation(reply.text);
        LlmExchange exchange{request, reply.text, reply.attempts, violation ? "rejected" : "accepted",
                             violation.value_or("")};
        result.exchanges.push_back(std::move(exchange));
        if (!violation) {
            result.verdict = Verdict::accept();
            result.caption = strip_caption_prefix(reply.text);
            return result;
        }
        result.verdict = Verdict::reject(*violation);
    }
    // Kept for pass-through runs; the verdict still records the rejection.
    const auto payload = strip_caption_prefix(result.responses.back());
    if (is_article_led(payload)) {
        result.caption = payload;
    }
    return result;
}

json to_json(const CaptionResult& r) {
    return json{{"record_id", r.record_id},
                {"label", r.label.name()},
                {"status", r.verdict.accepted ? "accepted" : "rejected"},
                {"reason", r.verdict.reason},
                {"caption", r.caption},
                {"responses", r.responses}};
}

CaptionResult caption_from_json(const json& j) {
    CaptionResult r{j.at("record_id").get<std::string>(), StyleLabel(j.at("label").get<std::string>()),
                    Verdict::accept(), j.at("caption").get<std::string>(),
                    j.value("responses", std::vector<std::string>{}), {}};
    if (j.at("status").get<std::string>() != "accepted") {
        r.verdict = Verdict::reject(j.value("reason", std::string()));
    }
    return r;
}

std::string clean_completion(std::string_view response) {
    auto text = strip_quotes(trim(response));
    if (starts_with_prefix(text)) {
        text = text.substr(kCaptionPrefix.size());
    }
    return normalize_sentence(text);
}

FillResult fill_masks(const LlmClient& client, const lingua::MaskedCaption& masked,
                      const std::map<std::string, std::string>& hints, const ValidationOptions& options) {
    if (masked.masked_text.find(lingua::kMaskToken) == std::string::npos) {
        throw DataError("fill_masks: caption has no [MASK] token");
    }
    ChatRequest request;
    request.kind = "fill";
    request.system = fill_masks_system_prompt();
    request.user = masked.masked_text;
    request.hints = hints;

    const auto reply = client.complete(request);
    const auto text = clean_completion(reply.text);
    auto validation = validate_completion(masked, text, options);

    FillResult result;
    result.completion = CompletedCaption{masked, text, std::move(validation.fills), validation.verdict};
    result.exchange = LlmExchange{request, reply.text, reply.attempts,
                                  validation.verdict.accepted ? "accepted" : "rejected", validation.verdict.reason};
    return result;
}

json to_json(const lingua::MaskedCaption& m) {
    json tokens = json::array();
    for (const auto& t : m.source.tokens) {
        tokens.push_back(json{{"surface", t.surface}, {"offset", t.offset}, {"tag", lingua::to_string(t.tag)}});
    }
    return json{{"source", m.source.text}, {"tokens", std::move(tokens)}, {"mask_positions", m.mask_positions},
                {"ratio", m.ratio},        {"seed", m.seed},               {"masked_text", m.masked_text}};
}

lingua::MaskedCaption masked_from_json(const json& j) {
    lingua::MaskedCaption m;
    m.source.text = j.at("source").get<std::string>();
    for (const auto& t : j.at("tokens")) {
        lingua::Token token;
        token.surface = t.at("surface").get<std::string>();
        token.offset = t.at("offset").get<std::size_t>();
        token.tag = lingua::parse_tag(t.at("tag").get<std::string>());
        token.maskable = token.tag != lingua::Tag::Other;
        m.source.tokens.push_back(std::move(token));
    }
    m.mask_positions = j.at("mask_positions").get<std::vector<std::size_t>>();
    m.ratio = j.at("ratio").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.masked_text = j.at("masked_text").get<std::string>();
    return m;
}

json to_json(const CompletedCaption& c) {
    json spans = json::array();
    for (const auto& s : c.filled_spans) {
        spans.push_back(json{{"mask_index", s.mask_index}, {"text", s.text}});
    }
    return json{{"masked", to_json(c.masked)},
                {"completed_text", c.completed_text},
                {"filled_spans", std::move(spans)},
                {"status", c.validation.accepted ? "accepted" : "rejected"},
                {"reason", c.validation.reason}};
}

CompletedCaption completion_from_json(const json& j) {
    CompletedCaption c;
    c.masked = masked_from_json(j.at("masked"));
    c.completed_text = j.at("completed_text").get<std::string>();
    for (const auto& s : j.at("filled_spans")) {
        c.filled_spans.push_back(FilledSpan{s.at("mask_index").get<std::size_t>(), s.at("text").get<std::string>()});
    }
    if (j.at("status").get<std::string>() != "accepted") {
        c.validation = Verdict::reject(j.value("reason", std::string()));
    }
    return c;
}

} // namespace promptaug::promptkit
