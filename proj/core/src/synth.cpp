#include "promptaug/synth.hpp"

#include "promptaug/error.hpp"
#include "promptaug/io.hpp"
#include "promptaug/parallel.hpp"
#include "promptaug/png_io.hpp"
#include "promptaug/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

using nlohmann::json;

namespace promptaug::synth {

namespace fs = std::filesystem;
using promptkit::PromptStrategy;

void GenConfig::validate() const {
    if (steps <= 0) {
        throw ConfigError("gen.steps must be positive");
    }
    if (width == 0 || height == 0) {
        throw ConfigError("gen.width and gen.height must be positive");
    }
    if (samples_per_style == 0) {
        throw ConfigError("gen.samples_per_style must be positive");
    }
    if (max_in_flight == 0) {
        throw ConfigError("gen.max_in_flight must be positive");
    }
}

json to_json(const GenConfig& cfg) {
    return {{"steps", cfg.steps},
            {"width", cfg.width},
            {"height", cfg.height},
            {"scheduler", cfg.scheduler},
            {"samples_per_style", cfg.samples_per_style},
            {"seed", cfg.seed},
            {"max_in_flight", cfg.max_in_flight}};
}

GenConfig gen_config_from_json(const json& j) {
    GenConfig cfg;
    cfg.steps = j.value("steps", cfg.steps);
    cfg.width = j.value("width", cfg.width);
    cfg.height = j.value("height", cfg.height);
    cfg.scheduler = j.value("scheduler", cfg.scheduler);
    cfg.samples_per_style = j.value("samples_per_style", cfg.samples_per_style);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
    return cfg;
}

T2IClient::T2IClient(std::shared_ptr<T2IBackend> backend, RetryPolicy policy)
    : m_backend(std::move(backend)), m_policy(policy), m_sleep(real_sleep) {
    if (!m_backend) {
        throw ConfigError("T2I backend is not configured");
    }
}

std::vector<std::uint8_t> T2IClient::generate(const T2IRequest& request) const {
    return retry_call(m_policy, m_sleep, [&] { return m_backend->generate(request); }).first;
}

fs::path generate_image(const T2IClient& client, std::string_view prompt, const GenConfig& cfg,
                        std::uint64_t seed, const fs::path& out) {
    if (prompt.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw DataError("empty prompt");
    }
    T2IRequest request;
    request.prompt = std::string(prompt);
    request.steps = cfg.steps;
    request.width = cfg.width;
    request.height = cfg.height;
    request.scheduler = cfg.scheduler;
    request.seed = seed;
    const auto bytes = client.generate(request);
    if (!looks_like_png(bytes)) {
        throw BackendError("T2I backend returned a non-PNG body", 200);
    }
    const auto [w, h] = png_dimensions(bytes);
    if (w != cfg.width || h != cfg.height) {
        throw BackendError("T2I backend returned " + std::to_string(w) + "x" + std::to_string(h) + ", expected " +
                               std::to_string(cfg.width) + "x" + std::to_string(cfg.height),
                           200);
    }
    write_bytes(out, bytes);
    return out;
}

bool SyntheticSample::provenance_consistent() const noexcept {
    switch (strategy) {
    case PromptStrategy::Class:
        return !reference_id && !completion;
    case PromptStrategy::Caption:
        return reference_id.has_value() && !completion;
    case PromptStrategy::Mlp:
        return reference_id.has_value() && completion.has_value() && mask_seed.has_value();
    }
    return false;
}

json to_json(const SyntheticSample& sample) {
    json j{{"id", sample.id},
           {"image_path", sample.image_path.generic_string()},
           {"label", sample.label.str()},
           {"strategy", std::string(promptkit::to_string(sample.strategy))},
           {"prompt", sample.prompt},
           {"backend_seed", sample.backend_seed},
           {"reference_id", nullptr},
           {"mask_seed", nullptr},
           {"completion", nullptr}};
    if (sample.reference_id) {
        j["reference_id"] = *sample.reference_id;
    }
    if (sample.mask_seed) {
        j["mask_seed"] = *sample.mask_seed;
    }
    if (sample.completion) {
        j["completion"] = promptkit::to_json(*sample.completion);
    }
    return j;
}

SyntheticSample sample_from_json(const json& j) {
    try {
        SyntheticSample s;
        s.id = j.at("id").get<std::string>();
        s.image_path = fs::path(j.at("image_path").get<std::string>());
        s.label = StyleLabel(j.at("label").get<std::string>());
        s.strategy = promptkit::parse_strategy(j.at("strategy").get<std::string>());
        s.prompt = j.at("prompt").get<std::string>();
        s.backend_seed = j.at("backend_seed").get<std::uint64_t>();
        if (j.contains("reference_id") && !j["reference_id"].is_null()) {
            s.reference_id = j["reference_id"].get<std::string>();
        }
        if (j.contains("mask_seed") && !j["mask_seed"].is_null()) {
            s.mask_seed = j["mask_seed"].get<std::uint64_t>();
        }
        if (j.contains("completion") && !j["completion"].is_null()) {
            s.completion = promptkit::completion_from_json(j["completion"]);
        }
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed sample record: ") + e.what());
    }
}

std::vector<SamplePlan> plan_samples(const corpus::FewShotSplit& split, PromptStrategy strategy,
                                     const GenConfig& cfg) {
    cfg.validate();
    std::map<StyleLabel, std::vector<const corpus::ImageRecord*>> by_style;
    for (const auto& record : split.train) {
        by_style[record.label].push_back(&record);
    }
    std::vector<SamplePlan> plan;
    plan.reserve(by_style.size() * cfg.samples_per_style);
    std::uint64_t ordinal = 0;
    for (const auto& [style, refs] : by_style) {
        for (std::size_t i = 0; i < cfg.samples_per_style; ++i, ++ordinal) {
            char suffix[16];
            std::snprintf(suffix, sizeof suffix, "%04zu", i);
            SamplePlan p{std::string(promptkit::to_string(strategy)) + "-" + style.str() + "-" + suffix,
                         style,
                         std::nullopt,
                         i,
                         cfg.seed + ordinal,
                         derive_seed(cfg.seed, "mask/" + style.str(), i)};
            if (strategy != PromptStrategy::Class) {
                p.reference = *refs[i % refs.size()];
            }
            plan.push_back(std::move(p));
        }
    }
    return plan;
}

fs::path manifest_path(const fs::path& root, PromptStrategy strategy) {
    return root / std::string(promptkit::to_string(strategy)) / "manifest.jsonl";
}

std::vector<SyntheticSample> load_manifest(const fs::path& path) {
    const auto lines = read_lines(path);
    std::vector<SyntheticSample> samples;
    samples.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::parse_error&) {
            if (i + 1 == lines.size()) {
                break; // torn write from an interrupted run
            }
            throw DataError(path.string() + ": line " + std::to_string(i + 1) + " is not valid JSON");
        }
        samples.push_back(sample_from_json(j));
    }
    return samples;
}

namespace {

struct Prepared {
    std::string prompt;
    std::optional<promptkit::CompletedCaption> completion;
    std::uint64_t mask_seed = 0;
    std::vector<promptkit::LlmExchange> exchanges;
};

const std::string& caption_for(const std::map<std::string, std::string>& captions, const corpus::ImageRecord& ref) {
    const auto it = captions.find(ref.id);
    if (it == captions.end() || it->second.empty()) {
        throw DataError("no caption for reference image '" + ref.id + "'");
    }
    return it->second;
}

Prepared prepare_mlp(const SamplePlan& p, const std::string& caption, const Backends& backends,
                     const AugmentOptions& options) {
    const auto tagged = lingua::tag_caption(caption, *options.tagger);
    Prepared out;
    const int attempts = std::max(1, options.max_fill_attempts);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        const auto seed = attempt == 0 ? p.mask_seed : derive_seed(p.mask_seed, "redraw", attempt);
        const auto masked = lingua::mask_caption(tagged, options.mask_ratio, seed);
        const std::map<std::string, std::string> hints{
            {"style", p.label.str()}, {"seed", std::to_string(seed)}, {"image_id", p.reference->id}};
        auto fill = promptkit::fill_masks(*backends.llm, masked, hints, options.validation);
        out.exchanges.push_back(fill.exchange);
        const bool usable = promptkit::is_article_led(fill.completion.completed_text);
        if (usable && (fill.completion.validation.accepted || options.pass_through_rejected)) {
            out.prompt = promptkit::render_prompt(PromptStrategy::Mlp, std::nullopt, fill.completion.completed_text);
            out.completion = std::move(fill.completion);
            out.mask_seed = seed;
            return out;
        }
    }
    throw DataError("sample " + p.id + ": no usable completion after " + std::to_string(attempts) + " attempts");
}

} // namespace

SyntheticSet run_augmentation(const corpus::FewShotSplit& split, PromptStrategy strategy, const GenConfig& cfg,
                              const std::map<std::string, std::string>& captions, const Backends& backends,
                              const AugmentOptions& options, const fs::path& root) {
    if (!backends.t2i) {
        throw ConfigError("T2I backend is not configured");
    }
    if (strategy == PromptStrategy::Mlp && (!backends.llm || !options.tagger)) {
        throw ConfigError("mlp strategy needs an LLM backend and a tagger");
    }
    const auto plan = plan_samples(split, strategy, cfg);
    const auto strategy_dir = root / std::string(promptkit::to_string(strategy));
    const auto manifest = manifest_path(root, strategy);
    const auto llm_log = strategy_dir / "llm_log.jsonl";

    SyntheticSet set{root, {}};
    std::set<std::string> done;
    if (fs::exists(manifest)) {
        auto previous = load_manifest(manifest);
        // Rewrite without a torn tail so later appends start on a fresh line.
        std::string clean;
        for (auto& s : previous) {
            if (!fs::exists(root / s.image_path)) {
                continue;
            }
            clean += to_json(s).dump() + "\n";
            done.insert(s.id);
            set.samples.push_back(std::move(s));
        }
        write_text(manifest, clean);
    }

    std::vector<const SamplePlan*> todo;
    fs::create_directories(strategy_dir);
    for (const auto& p : plan) {
        fs::create_directories(strategy_dir / p.label.str());
    }
    for (const auto& p : plan) {
        if (!done.count(p.id)) {
            todo.push_back(&p);
        }
    }

    const std::size_t batch = cfg.max_in_flight;
    for (std::size_t start = 0; start < todo.size(); start += batch) {
        const std::size_t count = std::min(batch, todo.size() - start);
        std::vector<std::optional<SyntheticSample>> results(count);
        std::vector<std::vector<promptkit::LlmExchange>> logs(count);
        parallel_for(count, cfg.max_in_flight, [&](std::size_t k) {
            const auto& p = *todo[start + k];
            SyntheticSample s;
            s.id = p.id;
            s.label = p.label;
            s.strategy = strategy;
            s.backend_seed = p.backend_seed;
            s.image_path = fs::path(std::string(promptkit::to_string(strategy))) / p.label.str() / (p.id + ".png");
            switch (strategy) {
            case PromptStrategy::Class:
                s.prompt = promptkit::render_prompt(strategy, p.label.name(), std::nullopt);
                break;
            case PromptStrategy::Caption:
                s.reference_id = p.reference->id;
                s.prompt = promptkit::render_prompt(strategy, std::nullopt, caption_for(captions, *p.reference));
                break;
            case PromptStrategy::Mlp: {
                s.reference_id = p.reference->id;
                auto prepared = prepare_mlp(p, caption_for(captions, *p.reference), backends, options);
                s.prompt = std::move(prepared.prompt);
                s.completion = std::move(prepared.completion);
                s.mask_seed = prepared.mask_seed;
                logs[k] = std::move(prepared.exchanges);
                break;
            }
            }
            generate_image(*backends.t2i, s.prompt, cfg, s.backend_seed, root / s.image_path);
            results[k] = std::move(s);
        });
        for (std::size_t k = 0; k < count; ++k) {
            for (const auto& exchange : logs[k]) {
                append_line(llm_log, exchange.to_json().dump());
            }
            append_line(manifest, to_json(*results[k]).dump());
            set.samples.push_back(std::move(*results[k]));
        }
    }

    // Present results in plan order regardless of what was resumed.
    std::map<std::string, std::size_t> order;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        order[plan[i].id] = i;
    }
    std::erase_if(set.samples, [&](const SyntheticSample& s) { return !order.count(s.id); });
    std::sort(set.samples.begin(), set.samples.end(),
              [&](const SyntheticSample& a, const SyntheticSample& b) { return order[a.id] < order[b.id]; });
    return set;
}

} // namespace promptaug::synth
