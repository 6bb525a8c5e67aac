#pragma once

#include "promptaug/corpus.hpp"
#include "promptaug/lingua.hpp"
#include "promptaug/promptkit.hpp"
#include "promptaug/t2i_backend.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace promptaug::synth {

struct GenConfig {
    int steps = 4;
    std::uint32_t width = 512;
    std::uint32_t height = 512;
    std::string scheduler = "EulerAncestralDiscreteScheduler";
    std::size_t samples_per_style = 512;
    std::uint64_t seed = 0;
    std::size_t max_in_flight = 4;

    void validate() const;
};

nlohmann::json to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const nlohmann::json& j);

/// Retrying wrapper around a T2I backend.
class T2IClient {
public:
    explicit T2IClient(std::shared_ptr<T2IBackend> backend, RetryPolicy policy = {});

    std::vector<std::uint8_t> generate(const T2IRequest& request) const;
    void set_sleeper(Sleeper sleeper) { m_sleep = std::move(sleeper); }

private:
    std::shared_ptr<T2IBackend> m_backend;
    RetryPolicy m_policy;
    Sleeper m_sleep;
};

/// Generates one image of cfg dimensions and writes it to `out`.
/// Empty prompt -> DataError. Output that is not a PNG of the configured size -> BackendError.
std::filesystem::path generate_image(const T2IClient& client, std::string_view prompt, const GenConfig& cfg,
                                     std::uint64_t seed, const std::filesystem::path& out);

struct SyntheticSample {
    std::string id;
    std::filesystem::path image_path; // relative to the store root
    StyleLabel label = StyleLabel::from_index(0);
    promptkit::PromptStrategy strategy;
    std::string prompt;
    std::optional<std::string> reference_id;
    std::optional<promptkit::CompletedCaption> completion;
    std::uint64_t backend_seed = 0;
    std::optional<std::uint64_t> mask_seed;

    /// Class has no reference; Caption and Mlp have one; Mlp has a completion.
    bool provenance_consistent() const noexcept;
};

nlohmann::json to_json(const SyntheticSample& sample);
SyntheticSample sample_from_json(const nlohmann::json& j);

/// What will be generated, before any backend call.
struct SamplePlan {
    std::string id;            // "<strategy>-<style>-<4-digit index>"
    StyleLabel label = StyleLabel::from_index(0);
    std::optional<corpus::ImageRecord> reference;
    std::size_t index_in_style = 0;
    std::uint64_t backend_seed = 0; // cfg.seed + global ordinal
    std::uint64_t mask_seed = 0;    // derive_seed(cfg.seed, "mask/<style>", index)
};

/// cfg.samples_per_style samples for each style of the split's train set, in
/// canonical style order. References cycle round-robin over the style's train
/// records (ordered as in the split).
std::vector<SamplePlan> plan_samples(const corpus::FewShotSplit& split, promptkit::PromptStrategy strategy,
                                     const GenConfig& cfg);

struct AugmentOptions {
    double mask_ratio = 0.5;
    std::shared_ptr<const lingua::Tagger> tagger;
    promptkit::ValidationOptions validation;
    /// Use rejected completions anyway (the verdict is still logged).
    bool pass_through_rejected = true;
    /// With pass-through off: fresh mask seeds tried before the sample fails.
    int max_fill_attempts = 5;
};

struct Backends {
    std::shared_ptr<const promptkit::LlmClient> llm; // required for Mlp
    std::shared_ptr<const T2IClient> t2i;
};

struct SyntheticSet {
    std::filesystem::path root; // store root, i.e. out/<run id>
    std::vector<SyntheticSample> samples;
};

/// Store layout under `root`:
///   <strategy>/<style>/<sample id>.png
///   <strategy>/manifest.jsonl   one SyntheticSample per line
///   <strategy>/llm_log.jsonl    fill-in-the-masks exchanges (Mlp only)
/// Work is done in batches of cfg.max_in_flight and appended in plan order.
/// Samples already in the manifest (with their image present) are skipped, so
/// an interrupted run can be resumed without duplicating ids.
SyntheticSet run_augmentation(const corpus::FewShotSplit& split, promptkit::PromptStrategy strategy,
                              const GenConfig& cfg, const std::map<std::string, std::string>& captions,
                              const Backends& backends, const AugmentOptions& options,
                              const std::filesystem::path& root);

std::filesystem::path manifest_path(const std::filesystem::path& root, promptkit::PromptStrategy strategy);

/// Reads a manifest, skipping a torn final line.
std::vector<SyntheticSample> load_manifest(const std::filesystem::path& path);

} // namespace promptaug::synth
