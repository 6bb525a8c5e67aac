#pragma once

#include "promptaug/corpus.hpp"
#include "promptaug/embed.hpp"
#include "promptaug/lingua.hpp"
#include "promptaug/llm_backend.hpp"
#include "promptaug/metrics.hpp"
#include "promptaug/probe.hpp"
#include "promptaug/promptkit.hpp"
#include "promptaug/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace promptaug::experiment {

struct LlmSettings {
    std::string endpoint;
    std::string model = "gpt-4o-mini";
    double temperature = 0.0;
    std::size_t max_in_flight = 4;
    int max_attempts = 3;
    int backoff_ms = 250;
    int timeout_s = 60;
    std::string replay_log; // serve recorded responses instead of calling the endpoint
};

struct T2ISettings {
    std::string endpoint;
    int max_attempts = 3;
    int backoff_ms = 250;
    int timeout_s = 300;
};

struct EmbedSettings {
    std::string provider = "mock"; // mock | http | fixture
    std::string endpoint;
    std::size_t dim = 512;
    std::string fixture;
    bool normalize = true;
    std::size_t max_in_flight = 4;
    embed::MockEmbedConfig mock;
};

struct TaggerSettings {
    std::string kind = "builtin"; // builtin | external
    std::string command;
    std::string lexicon; // extra `word<TAB>TAG` entries for the built-in tagger
};

struct MetricSettings {
    bool ssim = true;
    bool feature_distance = true;
    metrics::MmdParams cmmd;
    std::size_t class_group_size = 32;
};

struct ExperimentConfig {
    std::filesystem::path dataset_root;
    promptkit::PromptStrategy strategy = promptkit::PromptStrategy::Mlp;
    std::vector<int> n_shots{1};
    std::vector<std::uint64_t> seeds{0};
    double mask_ratio = 0.5;
    std::filesystem::path output_dir = "out";
    std::string run_id; // empty: derived from the config
    std::vector<StyleLabel> exclude{StyleLabel(kUntestableStyle)};
    synth::GenConfig generation;
    probe::TrainConfig training;
    LlmSettings llm;
    T2ISettings t2i;
    EmbedSettings embedding;
    TaggerSettings tagger;
    promptkit::ValidationOptions validation;
    bool pass_through_rejected = true;
    int max_fill_attempts = 5;
    MetricSettings metrics;
    /// Forces mock LLM, T2I and embedding backends.
    bool mock = false;
    /// Secret, taken from LLM_API_KEY by the caller; never serialized.
    std::string api_key;
};

/// The JSON schema shipped in schemas/experiment.schema.json.
const nlohmann::json& config_schema();

/// Schema validation first (ConfigError listing every violation), then parsing.
/// Relative dataset_root/output_dir paths are resolved against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Hex digest of the configuration (without output location and run id).
std::string derive_run_id(const ExperimentConfig& cfg);

struct CellId {
    int n_shot = 1;
    std::uint64_t seed = 0;

    std::string dir_name() const; // "n<k>-s<seed>"
    auto operator<=>(const CellId&) const = default;
};

struct CellResult {
    CellId cell;
    bool ok = false;
    std::string error;
    std::optional<ErrorKind> error_kind;
    nlohmann::json metrics; // contents of the cell's metrics.json
};

struct ReportBundle {
    std::string run_id;
    std::vector<CellResult> cells;
    nlohmann::json report;
    std::string csv;

    bool all_ok() const;
    /// Error kind of the first failed cell, if any.
    std::optional<ErrorKind> first_failure() const;
};

/// Stage-by-stage pipeline over one run directory (<output_dir>/<run id>).
/// Every stage reads its inputs from and writes its outputs to files, so any
/// stage can be re-run on its own:
///   index.json, captions.jsonl, caption_log.jsonl, embeddings/test.embv   (run level)
///   <cell>/split.json, masks.jsonl, completions.jsonl, <strategy>/...,
///   <cell>/embeddings/*.embv, probe/*.prb, metrics.json, word_freq_<style>.csv
class Pipeline {
public:
    explicit Pipeline(ExperimentConfig cfg);

    const ExperimentConfig& config() const noexcept { return m_cfg; }
    const std::string& run_id() const noexcept { return m_run_id; }
    std::filesystem::path root() const;
    std::filesystem::path cell_dir(const CellId& cell) const;

    /// Creates the run directory. Without `resume` an existing run directory is a ConfigError.
    void prepare(bool resume);

    corpus::DatasetIndex index();
    corpus::FewShotSplit sample(const CellId& cell);
    std::map<std::string, std::string> caption(const CellId& cell);
    std::vector<lingua::MaskedCaption> mask(const CellId& cell);
    std::vector<promptkit::CompletedCaption> complete(const CellId& cell);
    synth::SyntheticSet generate(const CellId& cell);
    void embed(const CellId& cell);
    void train(const CellId& cell);
    nlohmann::json evaluate(const CellId& cell);

    /// All stages for one cell; failures are captured in the result.
    CellResult run_cell(const CellId& cell);
    /// Every (n_shot, seed) cell, then report().
    ReportBundle run();
    /// Aggregates the metrics.json of every configured cell into report.json and report.csv.
    ReportBundle report();

    /// Backends may be replaced before running (tests use this to inject fakes).
    void set_llm(std::shared_ptr<promptkit::LlmBackend> backend);
    void set_t2i(std::shared_ptr<synth::T2IBackend> backend);
    void set_embed_provider(std::shared_ptr<embed::EmbedProvider> provider);
    void set_sleeper(Sleeper sleeper);

private:
    const corpus::DatasetIndex& loaded_index();
    corpus::FewShotSplit loaded_split(const CellId& cell);
    std::map<std::string, std::string> loaded_captions(const CellId& cell);
    std::shared_ptr<const promptkit::LlmClient> llm_client();
    std::shared_ptr<const synth::T2IClient> t2i_client();
    embed::EmbedProvider& provider();
    std::shared_ptr<const lingua::Tagger> tagger();
    embed::EmbeddingMatrix embed_records(const std::vector<corpus::ImageRecord>& records);

    ExperimentConfig m_cfg;
    std::string m_run_id;
    std::optional<corpus::DatasetIndex> m_index;
    std::shared_ptr<promptkit::LlmBackend> m_llm;
    std::shared_ptr<synth::T2IBackend> m_t2i;
    std::shared_ptr<embed::EmbedProvider> m_provider;
    std::shared_ptr<const lingua::Tagger> m_tagger;
    std::optional<Sleeper> m_sleeper;
    embed::EmbeddingCache m_cache;
};

std::string_view method_name(promptkit::PromptStrategy strategy) noexcept; // "Class", "Caption", "MLP"

} // namespace promptaug::experiment
