#include "promptaug/experiment.hpp"

#include "promptaug/error.hpp"
#include "promptaug/hashing.hpp"
#include "promptaug/io.hpp"
#include "promptaug/json_schema.hpp"
#include "promptaug/parallel.hpp"
#include "promptaug/png_io.hpp"
#include "promptaug/rng.hpp"

#include <cmath>
#include <cstdio>
#include <set>

using nlohmann::json;

namespace promptaug::experiment {

namespace fs = std::filesystem;
using promptkit::PromptStrategy;

std::string_view method_name(PromptStrategy strategy) noexcept {
    switch (strategy) {
    case PromptStrategy::Class:
        return "Class";
    case PromptStrategy::Caption:
        return "Caption";
    case PromptStrategy::Mlp:
        return "MLP";
    }
    return "?";
}

// --- configuration ------------------------------------------------------------------

namespace {

constexpr std::string_view kRealOnly = "Real Only";

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) {
        return p;
    }
    return (base / p).lexically_normal();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<json> read_json_lines(const fs::path& path) {
    std::vector<json> out;
    for (const auto& line : read_lines(path)) {
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw DataError(path.string() + ": " + e.what());
        }
    }
    return out;
}

std::string format_double(double v) {
    if (!std::isfinite(v)) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
    const auto errors = validate_schema(j, config_schema());
    if (!errors.empty()) {
        std::string message = "invalid experiment config:";
        for (const auto& e : errors) {
            message += "\n  " + e;
        }
        throw ConfigError(message);
    }
    ExperimentConfig cfg;
    cfg.dataset_root = resolve(j.at("dataset_root").get<std::string>(), base_dir);
    cfg.strategy = promptkit::parse_strategy(j.at("strategy").get<std::string>());
    cfg.n_shots = j.at("n_shots").get<std::vector<int>>();
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.mask_ratio = j.value("mask_ratio", cfg.mask_ratio);
    cfg.output_dir = resolve(j.value("output_dir", cfg.output_dir.string()), base_dir);
    cfg.run_id = j.value("run_id", cfg.run_id);
    if (j.contains("exclude_styles")) {
        cfg.exclude.clear();
        for (const auto& s : j["exclude_styles"]) {
            cfg.exclude.emplace_back(s.get<std::string>());
        }
    }
    if (j.contains("generation")) {
        const auto& g = j["generation"];
        cfg.generation = synth::gen_config_from_json(g);
    }
    if (j.contains("training")) {
        cfg.training = probe::train_config_from_json(j["training"]);
    }
    if (j.contains("llm")) {
        const auto& l = j["llm"];
        cfg.llm.endpoint = l.value("endpoint", cfg.llm.endpoint);
        cfg.llm.model = l.value("model", cfg.llm.model);
        cfg.llm.temperature = l.value("temperature", cfg.llm.temperature);
        cfg.llm.max_in_flight = l.value("max_in_flight", cfg.llm.max_in_flight);
        cfg.llm.max_attempts = l.value("max_attempts", cfg.llm.max_attempts);
        cfg.llm.backoff_ms = l.value("backoff_ms", cfg.llm.backoff_ms);
        cfg.llm.timeout_s = l.value("timeout_s", cfg.llm.timeout_s);
        cfg.llm.replay_log = resolve(l.value("replay_log", cfg.llm.replay_log), base_dir).string();
    }
    if (j.contains("t2i")) {
        const auto& t = j["t2i"];
        cfg.t2i.endpoint = t.value("endpoint", cfg.t2i.endpoint);
        cfg.t2i.max_attempts = t.value("max_attempts", cfg.t2i.max_attempts);
        cfg.t2i.backoff_ms = t.value("backoff_ms", cfg.t2i.backoff_ms);
        cfg.t2i.timeout_s = t.value("timeout_s", cfg.t2i.timeout_s);
    }
    if (j.contains("embedding")) {
        const auto& e = j["embedding"];
        cfg.embedding.provider = e.value("provider", cfg.embedding.provider);
        cfg.embedding.endpoint = e.value("endpoint", cfg.embedding.endpoint);
        cfg.embedding.dim = e.value("dim", cfg.embedding.dim);
        cfg.embedding.fixture = resolve(e.value("fixture", cfg.embedding.fixture), base_dir).string();
        cfg.embedding.normalize = e.value("normalize", cfg.embedding.normalize);
        cfg.embedding.max_in_flight = e.value("max_in_flight", cfg.embedding.max_in_flight);
        if (e.contains("mock")) {
            const auto& m = e["mock"];
            cfg.embedding.mock.d = m.value("d", cfg.embedding.mock.d);
            cfg.embedding.mock.sigma = m.value("sigma", cfg.embedding.mock.sigma);
            cfg.embedding.mock.seed = m.value("seed", cfg.embedding.mock.seed);
        }
    }
    if (j.contains("tagger")) {
        const auto& t = j["tagger"];
        cfg.tagger.kind = t.value("kind", cfg.tagger.kind);
        cfg.tagger.command = t.value("command", cfg.tagger.command);
        cfg.tagger.lexicon = resolve(t.value("lexicon", cfg.tagger.lexicon), base_dir).string();
        if (cfg.tagger.kind == "external" && cfg.tagger.command.empty()) {
            throw ConfigError("tagger.command is required for an external tagger");
        }
    }
    if (j.contains("validation")) {
        const auto& v = j["validation"];
        cfg.validation.check_unfilled = v.value("check_unfilled", cfg.validation.check_unfilled);
        cfg.validation.check_order = v.value("check_order", cfg.validation.check_order);
        cfg.validation.check_length = v.value("check_length", cfg.validation.check_length);
        cfg.validation.max_words_per_mask = v.value("max_words_per_mask", cfg.validation.max_words_per_mask);
        cfg.pass_through_rejected = v.value("pass_through_rejected", cfg.pass_through_rejected);
        cfg.max_fill_attempts = v.value("max_fill_attempts", cfg.max_fill_attempts);
    }
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        cfg.metrics.ssim = m.value("ssim", cfg.metrics.ssim);
        cfg.metrics.feature_distance = m.value("feature_distance", cfg.metrics.feature_distance);
        cfg.metrics.cmmd.sigma = m.value("cmmd_sigma", cfg.metrics.cmmd.sigma);
        cfg.metrics.cmmd.scale = m.value("cmmd_scale", cfg.metrics.cmmd.scale);
        cfg.metrics.class_group_size = m.value("class_group_size", cfg.metrics.class_group_size);
    }
    cfg.generation.validate();
    cfg.training.validate();
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

json to_json(const ExperimentConfig& cfg) {
    json exclude = json::array();
    for (const auto& s : cfg.exclude) {
        exclude.push_back(s.str());
    }
    auto gen = synth::to_json(cfg.generation);
    gen.erase("seed");
    auto train = probe::to_json(cfg.training);
    train.erase("seed");
    json j{{"dataset_root", cfg.dataset_root.generic_string()},
           {"strategy", std::string(promptkit::to_string(cfg.strategy))},
           {"n_shots", cfg.n_shots},
           {"seeds", cfg.seeds},
           {"mask_ratio", cfg.mask_ratio},
           {"output_dir", cfg.output_dir.generic_string()},
           {"exclude_styles", exclude},
           {"generation", gen},
           {"training", train},
           {"llm",
            {{"model", cfg.llm.model},
             {"temperature", cfg.llm.temperature},
             {"max_in_flight", cfg.llm.max_in_flight},
             {"max_attempts", cfg.llm.max_attempts},
             {"backoff_ms", cfg.llm.backoff_ms},
             {"timeout_s", cfg.llm.timeout_s}}},
           {"t2i",
            {{"max_attempts", cfg.t2i.max_attempts},
             {"backoff_ms", cfg.t2i.backoff_ms},
             {"timeout_s", cfg.t2i.timeout_s}}},
           {"embedding",
            {{"provider", cfg.embedding.provider},
             {"dim", cfg.embedding.dim},
             {"normalize", cfg.embedding.normalize},
             {"max_in_flight", cfg.embedding.max_in_flight},
             {"mock", {{"d", cfg.embedding.mock.d}, {"sigma", cfg.embedding.mock.sigma}, {"seed", cfg.embedding.mock.seed}}}}},
           {"tagger", {{"kind", cfg.tagger.kind}}},
           {"validation",
            {{"check_unfilled", cfg.validation.check_unfilled},
             {"check_order", cfg.validation.check_order},
             {"check_length", cfg.validation.check_length},
             {"max_words_per_mask", cfg.validation.max_words_per_mask},
             {"pass_through_rejected", cfg.pass_through_rejected},
             {"max_fill_attempts", cfg.max_fill_attempts}}},
           {"metrics",
            {{"ssim", cfg.metrics.ssim},
             {"feature_distance", cfg.metrics.feature_distance},
             {"cmmd_sigma", cfg.metrics.cmmd.sigma},
             {"cmmd_scale", cfg.metrics.cmmd.scale},
             {"class_group_size", cfg.metrics.class_group_size}}}};
    if (!cfg.run_id.empty()) {
        j["run_id"] = cfg.run_id;
    }
    if (!cfg.llm.endpoint.empty()) {
        j["llm"]["endpoint"] = cfg.llm.endpoint;
    }
    if (!cfg.llm.replay_log.empty()) {
        j["llm"]["replay_log"] = cfg.llm.replay_log;
    }
    if (!cfg.t2i.endpoint.empty()) {
        j["t2i"]["endpoint"] = cfg.t2i.endpoint;
    }
    if (!cfg.embedding.endpoint.empty()) {
        j["embedding"]["endpoint"] = cfg.embedding.endpoint;
    }
    if (!cfg.embedding.fixture.empty()) {
        j["embedding"]["fixture"] = cfg.embedding.fixture;
    }
    if (!cfg.tagger.command.empty()) {
        j["tagger"]["command"] = cfg.tagger.command;
    }
    if (!cfg.tagger.lexicon.empty()) {
        j["tagger"]["lexicon"] = cfg.tagger.lexicon;
    }
    return j;
}

std::string derive_run_id(const ExperimentConfig& cfg) {
    auto j = to_json(cfg);
    j.erase("output_dir");
    j.erase("run_id");
    j["mock"] = cfg.mock;
    return hex64(fnv1a64(j.dump())).substr(0, 12);
}

std::string CellId::dir_name() const {
    return "n" + std::to_string(n_shot) + "-s" + std::to_string(seed);
}

bool ReportBundle::all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

std::optional<ErrorKind> ReportBundle::first_failure() const {
    for (const auto& c : cells) {
        if (!c.ok) {
            return c.error_kind.value_or(ErrorKind::Data);
        }
    }
    return std::nullopt;
}

// --- pipeline -----------------------------------------------------------------------

Pipeline::Pipeline(ExperimentConfig cfg) : m_cfg(std::move(cfg)) {
    m_run_id = m_cfg.run_id.empty() ? derive_run_id(m_cfg) : m_cfg.run_id;
    if (m_cfg.mock) {
        m_cfg.embedding.provider = "mock";
    }
}

fs::path Pipeline::root() const {
    return m_cfg.output_dir / m_run_id;
}

fs::path Pipeline::cell_dir(const CellId& cell) const {
    return root() / cell.dir_name();
}

void Pipeline::prepare(bool resume) {
    if (fs::exists(root()) && !resume) {
        throw ConfigError("run directory " + root().string() + " already exists; pass --resume " + m_run_id +
                          " to continue it");
    }
    fs::create_directories(root());
    write_text(root() / "config.json", to_json(m_cfg).dump(2) + "\n");
}

void Pipeline::set_llm(std::shared_ptr<promptkit::LlmBackend> backend) {
    m_llm = std::move(backend);
}

void Pipeline::set_t2i(std::shared_ptr<synth::T2IBackend> backend) {
    m_t2i = std::move(backend);
}

void Pipeline::set_embed_provider(std::shared_ptr<embed::EmbedProvider> provider) {
    m_provider = std::move(provider);
}

void Pipeline::set_sleeper(Sleeper sleeper) {
    m_sleeper = std::move(sleeper);
}

std::shared_ptr<const promptkit::LlmClient> Pipeline::llm_client() {
    if (!m_llm) {
        if (m_cfg.mock) {
            m_llm = std::make_shared<promptkit::MockLlm>();
        } else if (!m_cfg.llm.replay_log.empty()) {
            m_llm = std::make_shared<promptkit::ReplayLlm>(read_json_lines(m_cfg.llm.replay_log));
        } else {
            if (m_cfg.llm.endpoint.empty()) {
                throw ConfigError("llm.endpoint is required unless --mock or llm.replay_log is given");
            }
            promptkit::LlmBackendConfig bc;
            bc.endpoint = m_cfg.llm.endpoint;
            bc.model = m_cfg.llm.model;
            bc.temperature = m_cfg.llm.temperature;
            bc.max_in_flight = m_cfg.llm.max_in_flight;
            bc.max_attempts = m_cfg.llm.max_attempts;
            bc.backoff_base = std::chrono::milliseconds(m_cfg.llm.backoff_ms);
            bc.api_key = m_cfg.api_key;
            bc.timeout = std::chrono::seconds(m_cfg.llm.timeout_s);
            m_llm = std::make_shared<promptkit::HttpLlm>(bc);
        }
    }
    auto client = std::make_shared<promptkit::LlmClient>(
        m_llm, RetryPolicy{m_cfg.llm.max_attempts, std::chrono::milliseconds(m_cfg.llm.backoff_ms)},
        m_cfg.llm.temperature, m_cfg.llm.max_in_flight);
    if (m_sleeper) {
        client->set_sleeper(*m_sleeper);
    }
    return client;
}

std::shared_ptr<const synth::T2IClient> Pipeline::t2i_client() {
    if (!m_t2i) {
        if (m_cfg.mock) {
            m_t2i = std::make_shared<synth::MockT2I>();
        } else {
            if (m_cfg.t2i.endpoint.empty()) {
                throw ConfigError("t2i.endpoint is required unless --mock is given");
            }
            m_t2i = std::make_shared<synth::HttpT2I>(m_cfg.t2i.endpoint, std::chrono::seconds(m_cfg.t2i.timeout_s));
        }
    }
    auto client = std::make_shared<synth::T2IClient>(
        m_t2i, RetryPolicy{m_cfg.t2i.max_attempts, std::chrono::milliseconds(m_cfg.t2i.backoff_ms)});
    if (m_sleeper) {
        client->set_sleeper(*m_sleeper);
    }
    return client;
}

embed::EmbedProvider& Pipeline::provider() {
    if (!m_provider) {
        const auto& e = m_cfg.embedding;
        if (e.provider == "mock") {
            m_provider = std::make_shared<embed::MockEmbedProvider>(e.mock);
        } else if (e.provider == "http") {
            if (e.endpoint.empty()) {
                throw ConfigError("embedding.endpoint is required for the http provider");
            }
            m_provider = std::make_shared<embed::HttpEmbedProvider>(e.endpoint, e.dim);
        } else if (e.provider == "fixture") {
            if (e.fixture.empty()) {
                throw ConfigError("embedding.fixture is required for the fixture provider");
            }
            m_provider = std::make_shared<embed::FixtureEmbedProvider>(fs::path(e.fixture));
        } else {
            throw ConfigError("unknown embedding provider '" + e.provider + "'");
        }
    }
    return *m_provider;
}

std::shared_ptr<const lingua::Tagger> Pipeline::tagger() {
    if (!m_tagger) {
        if (m_cfg.tagger.kind == "external") {
            m_tagger = std::make_shared<lingua::ExternalTagger>(m_cfg.tagger.command);
        } else {
            auto lexicon = lingua::Lexicon::builtin();
            if (!m_cfg.tagger.lexicon.empty()) {
                lexicon.merge(lingua::Lexicon::load(m_cfg.tagger.lexicon));
            }
            m_tagger = std::make_shared<lingua::BuiltinTagger>(std::move(lexicon));
        }
    }
    return m_tagger;
}

corpus::DatasetIndex Pipeline::index() {
    corpus::LoadOptions options;
    options.exclude = m_cfg.exclude;
    auto index = corpus::load_dataset(m_cfg.dataset_root, options);
    write_text(root() / "index.json", corpus::to_json(index).dump(1) + "\n");
    m_index = index;
    return index;
}

const corpus::DatasetIndex& Pipeline::loaded_index() {
    if (!m_index) {
        const auto path = root() / "index.json";
        if (fs::exists(path)) {
            m_index = corpus::index_from_json(read_json(path));
        } else {
            index();
        }
    }
    return *m_index;
}

corpus::FewShotSplit Pipeline::sample(const CellId& cell) {
    auto split = corpus::sample_few_shot(loaded_index(), cell.n_shot, cell.seed);
    write_text(cell_dir(cell) / "split.json", corpus::to_json(split).dump(1) + "\n");
    return split;
}

corpus::FewShotSplit Pipeline::loaded_split(const CellId& cell) {
    const auto path = cell_dir(cell) / "split.json";
    if (fs::exists(path)) {
        return corpus::split_from_json(read_json(path));
    }
    return sample(cell);
}

std::map<std::string, std::string> Pipeline::caption(const CellId& cell) {
    const auto split = loaded_split(cell);
    std::map<std::string, std::string> out;
    if (m_cfg.strategy == PromptStrategy::Class) {
        return out;
    }
    const auto captions_path = root() / "captions.jsonl";
    std::map<std::string, promptkit::CaptionResult> known;
    for (const auto& j : read_json_lines(captions_path)) {
        auto result = promptkit::caption_from_json(j);
        known.emplace(result.record_id, std::move(result));
    }
    std::vector<const corpus::ImageRecord*> todo;
    for (const auto& record : split.train) {
        if (!known.count(record.id)) {
            todo.push_back(&record);
        }
    }
    if (!todo.empty()) {
        const auto client = llm_client();
        std::vector<std::optional<promptkit::CaptionResult>> results(todo.size());
        parallel_for(todo.size(), client->max_in_flight(),
                     [&](std::size_t i) { results[i] = promptkit::caption_image(*client, *todo[i]); });
        for (auto& r : results) {
            for (const auto& exchange : r->exchanges) {
                append_line(root() / "caption_log.jsonl", exchange.to_json().dump());
            }
            append_line(captions_path, promptkit::to_json(*r).dump());
            known.emplace(r->record_id, std::move(*r));
        }
    }
    for (const auto& record : split.train) {
        const auto& result = known.at(record.id);
        if (!result.caption.empty() && (result.verdict.accepted || m_cfg.pass_through_rejected)) {
            out[record.id] = result.caption;
        }
    }
    return out;
}

std::map<std::string, std::string> Pipeline::loaded_captions(const CellId& cell) {
    return caption(cell);
}

std::vector<lingua::MaskedCaption> Pipeline::mask(const CellId& cell) {
    const auto split = loaded_split(cell);
    const auto captions = loaded_captions(cell);
    std::vector<lingua::MaskedCaption> out;
    std::string lines;
    for (const auto& record : split.train) {
        const auto it = captions.find(record.id);
        if (it == captions.end()) {
            continue;
        }
        const auto tagged = lingua::tag_caption(it->second, *tagger());
        auto masked = lingua::mask_caption(tagged, m_cfg.mask_ratio, derive_seed(cell.seed, "mask/" + record.id));
        auto j = promptkit::to_json(masked);
        j["record_id"] = record.id;
        j["label"] = record.label.str();
        lines += j.dump() + "\n";
        out.push_back(std::move(masked));
    }
    write_text(cell_dir(cell) / "masks.jsonl", lines);
    return out;
}

std::vector<promptkit::CompletedCaption> Pipeline::complete(const CellId& cell) {
    const auto masks_path = cell_dir(cell) / "masks.jsonl";
    if (!fs::exists(masks_path)) {
        mask(cell);
    }
    const auto entries = read_json_lines(masks_path);
    const auto client = llm_client();
    std::vector<std::optional<promptkit::FillResult>> results(entries.size());
    parallel_for(entries.size(), client->max_in_flight(), [&](std::size_t i) {
        const auto masked = promptkit::masked_from_json(entries[i]);
        if (masked.mask_positions.empty()) {
            return;
        }
        const std::map<std::string, std::string> hints{{"style", entries[i].at("label").get<std::string>()},
                                                       {"seed", std::to_string(masked.seed)},
                                                       {"image_id", entries[i].at("record_id").get<std::string>()}};
        results[i] = promptkit::fill_masks(*client, masked, hints, m_cfg.validation);
    });
    std::vector<promptkit::CompletedCaption> out;
    std::string lines;
    std::string log;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i]) {
            continue;
        }
        auto j = promptkit::to_json(results[i]->completion);
        j["record_id"] = entries[i].at("record_id");
        j["label"] = entries[i].at("label");
        lines += j.dump() + "\n";
        log += results[i]->exchange.to_json().dump() + "\n";
        out.push_back(std::move(results[i]->completion));
    }
    write_text(cell_dir(cell) / "completions.jsonl", lines);
    write_text(cell_dir(cell) / "completion_log.jsonl", log);
    return out;
}

synth::SyntheticSet Pipeline::generate(const CellId& cell) {
    const auto split = loaded_split(cell);
    const auto captions = loaded_captions(cell);
    auto gen = m_cfg.generation;
    gen.seed = cell.seed;
    synth::Backends backends;
    backends.t2i = t2i_client();
    synth::AugmentOptions options;
    options.mask_ratio = m_cfg.mask_ratio;
    options.validation = m_cfg.validation;
    options.pass_through_rejected = m_cfg.pass_through_rejected;
    options.max_fill_attempts = m_cfg.max_fill_attempts;
    if (m_cfg.strategy == PromptStrategy::Mlp) {
        backends.llm = llm_client();
        options.tagger = tagger();
    }
    return synth::run_augmentation(split, m_cfg.strategy, gen, captions, backends, options, cell_dir(cell));
}

embed::EmbeddingMatrix Pipeline::embed_records(const std::vector<corpus::ImageRecord>& records) {
    std::vector<embed::ImageInput> inputs;
    inputs.reserve(records.size());
    for (const auto& r : records) {
        inputs.push_back({r.id, r.path, r.label, embed::Origin::Real});
    }
    embed::EmbedOptions options;
    options.normalize = m_cfg.embedding.normalize;
    options.max_in_flight = m_cfg.embedding.max_in_flight;
    options.expected_d = m_cfg.embedding.provider == "http" ? m_cfg.embedding.dim : 0;
    return embed::embed_images(provider(), inputs, options, &m_cache);
}

void Pipeline::embed(const CellId& cell) {
    const auto split = loaded_split(cell);
    const auto dir = cell_dir(cell) / "embeddings";
    embed::persist_embeddings(embed_records(split.train), dir / "train.embv");
    embed::persist_embeddings(embed_records(split.val), dir / "val.embv");

    const auto manifest = synth::manifest_path(cell_dir(cell), m_cfg.strategy);
    if (!fs::exists(manifest)) {
        throw DataError("no synthetic manifest at " + manifest.string() + "; run the generate stage first");
    }
    std::vector<embed::ImageInput> inputs;
    for (const auto& s : synth::load_manifest(manifest)) {
        inputs.push_back({s.id, cell_dir(cell) / s.image_path, s.label, embed::Origin::Synthetic});
    }
    embed::EmbedOptions options;
    options.normalize = m_cfg.embedding.normalize;
    options.max_in_flight = m_cfg.embedding.max_in_flight;
    options.expected_d = m_cfg.embedding.provider == "http" ? m_cfg.embedding.dim : 0;
    embed::persist_embeddings(embed::embed_images(provider(), inputs, options, &m_cache), dir / "synthetic.embv");

    const auto test_path = root() / "embeddings" / "test.embv";
    if (!fs::exists(test_path)) {
        const auto& index = loaded_index();
        std::vector<corpus::ImageRecord> test;
        for (const auto& style : index.evaluation_styles()) {
            const auto records = index.records(corpus::Split::Test, style);
            test.insert(test.end(), records.begin(), records.end());
        }
        if (test.empty()) {
            throw DataError("dataset has no test images for the evaluation styles");
        }
        embed::persist_embeddings(embed_records(test), test_path);
    }
}

namespace {

json history_json(const probe::TrainResult& result) {
    json history = json::array();
    for (const auto& e : result.history) {
        history.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"steps", e.steps}});
    }
    return history;
}

} // namespace

void Pipeline::train(const CellId& cell) {
    const auto dir = cell_dir(cell) / "embeddings";
    const auto real = embed::load_embeddings(dir / "train.embv");
    const auto val = embed::load_embeddings(dir / "val.embv");
    const auto syn = embed::load_embeddings(dir / "synthetic.embv");
    auto cfg = m_cfg.training;
    cfg.seed = cell.seed;

    const auto save = [&](const probe::TrainResult& result, const std::string& name, std::string_view method) {
        json meta{{"method", method},
                  {"config", probe::to_json(cfg)},
                  {"best_epoch", result.best_epoch},
                  {"stopped_early", result.stopped_early},
                  {"history", history_json(result)}};
        probe::save_probe(result.model, cell_dir(cell) / "probe" / (name + ".prb"), meta);
    };
    save(probe::train_probe(real, nullptr, val, cfg), "real_only", kRealOnly);
    save(probe::train_probe(real, &syn, val, cfg), std::string(promptkit::to_string(m_cfg.strategy)),
         method_name(m_cfg.strategy));
}

json Pipeline::evaluate(const CellId& cell) {
    const auto test = embed::load_embeddings(root() / "embeddings" / "test.embv");
    std::vector<StyleLabel> truth;
    for (const auto& row : test.rows()) {
        truth.push_back(row.label);
    }
    const auto strategy = std::string(promptkit::to_string(m_cfg.strategy));
    const auto method = std::string(method_name(m_cfg.strategy));

    json accuracy = json::object();
    json best_epoch = json::object();
    for (const auto& [name, label] : {std::pair{std::string("real_only"), std::string(kRealOnly)},
                                      std::pair{strategy, method}}) {
        const auto path = cell_dir(cell) / "probe" / (name + ".prb");
        const auto model = probe::load_probe(path);
        const auto predicted = probe::predict_labels(model, test);
        accuracy[label] = metrics::accuracy(predicted, truth);
        best_epoch[label] = read_json(fs::path(path.string() + ".json")).at("best_epoch");
    }

    const auto samples = synth::load_manifest(synth::manifest_path(cell_dir(cell), m_cfg.strategy));
    const auto syn = embed::load_embeddings(cell_dir(cell) / "embeddings" / "synthetic.embv");
    if (syn.n() != samples.size()) {
        throw DataError("synthetic embeddings do not match the manifest; re-run the embed stage");
    }

    std::vector<metrics::Group> groups;
    if (m_cfg.strategy == PromptStrategy::Class) {
        std::vector<StyleLabel> labels;
        for (const auto& s : samples) {
            labels.push_back(s.label);
        }
        groups = metrics::class_groups(labels, m_cfg.metrics.class_group_size);
    } else {
        std::vector<std::string> refs;
        for (const auto& s : samples) {
            refs.push_back(s.reference_id.value_or(s.id));
        }
        groups = metrics::reference_groups(refs);
    }

    json diversity = json::object();
    if (m_cfg.metrics.ssim) {
        // Decode one group at a time; full-size images do not all fit in memory.
        metrics::DiversityReport total;
        total.metric = "ssim";
        std::vector<double> means;
        for (const auto& group : groups) {
            std::vector<metrics::GrayImage> images;
            metrics::Group local{group.key, {}};
            for (const auto i : group.items) {
                images.push_back(metrics::to_luma(decode_png(read_bytes(cell_dir(cell) / samples[i].image_path)).image));
                local.items.push_back(local.items.size());
            }
            const auto r = metrics::pairwise_diversity(
                {local}, [&](std::size_t a, std::size_t b) { return metrics::ssim(images[a], images[b]); }, "ssim",
                m_cfg.generation.max_in_flight);
            total.groups.insert(total.groups.end(), r.groups.begin(), r.groups.end());
            total.warnings.insert(total.warnings.end(), r.warnings.begin(), r.warnings.end());
            total.total_pairs += r.total_pairs;
            for (const auto& g : r.groups) {
                means.push_back(g.mean);
            }
        }
        total.mean = means.empty() ? std::nan("") : metrics::pairwise_sum(means) / static_cast<double>(means.size());
        diversity["ssim"] = metrics::to_json(total);
    }
    if (m_cfg.metrics.feature_distance) {
        const auto r = metrics::pairwise_diversity(
            groups, [&](std::size_t a, std::size_t b) { return metrics::feature_distance(syn.row(a), syn.row(b)); },
            "feature_distance");
        diversity["feature_distance"] = metrics::to_json(r);
    }

    std::map<StyleLabel, embed::EmbeddingMatrix> syn_by_style;
    std::map<StyleLabel, embed::EmbeddingMatrix> real_by_style;
    for (const auto& row : syn.rows()) {
        syn_by_style.try_emplace(row.label, syn.select(row.label));
    }
    for (const auto& row : test.rows()) {
        real_by_style.try_emplace(row.label, test.select(row.label));
    }
    const auto cmmd = metrics::cmmd_report(syn_by_style, real_by_style, m_cfg.metrics.cmmd);

    std::size_t rejected = 0;
    json top_words = json::object();
    std::map<StyleLabel, std::vector<promptkit::CompletedCaption>> completions;
    for (const auto& s : samples) {
        if (s.completion) {
            rejected += s.completion->validation.accepted ? 0 : 1;
            completions[s.label].push_back(*s.completion);
        }
    }
    for (const auto& [style, list] : completions) {
        const auto table = metrics::word_frequencies(list);
        metrics::write_frequency_csv(cell_dir(cell) / ("word_freq_" + style.str() + ".csv"), table);
        json top = json::array();
        for (std::size_t i = 0; i < table.size() && i < 10; ++i) {
            top.push_back({table[i].first, table[i].second});
        }
        top_words[style.str()] = top;
    }

    json out{{"n_shot", cell.n_shot},
             {"seed", cell.seed},
             {"accuracy", accuracy},
             {"best_epoch", best_epoch},
             {"test_count", test.n()},
             {"synthetic", {{"count", samples.size()}, {"rejected_completions", rejected}}},
             {"diversity", diversity},
             {"cmmd", metrics::to_json(cmmd)},
             {"top_words", top_words}};
    write_text(cell_dir(cell) / "metrics.json", out.dump(2) + "\n");
    return out;
}

CellResult Pipeline::run_cell(const CellId& cell) {
    CellResult result{cell, false, {}, std::nullopt, json()};
    try {
        loaded_index();
        sample(cell);
        caption(cell);
        if (m_cfg.strategy == PromptStrategy::Mlp) {
            mask(cell);
            complete(cell);
        }
        generate(cell);
        embed(cell);
        train(cell);
        result.metrics = evaluate(cell);
        result.ok = true;
    } catch (const Error& e) {
        result.error = e.what();
        result.error_kind = e.kind();
    } catch (const std::exception& e) {
        result.error = e.what();
        result.error_kind = ErrorKind::Data;
    }
    json status{{"ok", result.ok}};
    if (!result.ok) {
        status["error"] = result.error;
        status["exit_code"] = exit_code_for(*result.error_kind);
    }
    write_text(cell_dir(cell) / "status.json", status.dump(2) + "\n");
    return result;
}

ReportBundle Pipeline::run() {
    for (const int n : m_cfg.n_shots) {
        for (const auto seed : m_cfg.seeds) {
            run_cell({n, seed});
        }
    }
    return report();
}

ReportBundle Pipeline::report() {
    ReportBundle bundle;
    bundle.run_id = m_run_id;
    for (const int n : m_cfg.n_shots) {
        for (const auto seed : m_cfg.seeds) {
            const CellId cell{n, seed};
            CellResult r{cell, false, {}, std::nullopt, json()};
            const auto status_path = cell_dir(cell) / "status.json";
            const auto metrics_path = cell_dir(cell) / "metrics.json";
            if (fs::exists(status_path)) {
                const auto status = read_json(status_path);
                r.ok = status.value("ok", false);
                r.error = status.value("error", "");
                if (!r.ok) {
                    const int code = status.value("exit_code", 4);
                    r.error_kind = code == 2 ? ErrorKind::Config : code == 3 ? ErrorKind::Backend : ErrorKind::Data;
                }
            } else {
                r.ok = fs::exists(metrics_path);
                if (!r.ok) {
                    r.error = "cell has not been run";
                    r.error_kind = ErrorKind::Data;
                }
            }
            if (r.ok) {
                if (!fs::exists(metrics_path)) {
                    r.ok = false;
                    r.error = "metrics.json missing; run the evaluate stage";
                    r.error_kind = ErrorKind::Data;
                } else {
                    r.metrics = read_json(metrics_path);
                }
            }
            bundle.cells.push_back(std::move(r));
        }
    }

    const auto method = std::string(method_name(m_cfg.strategy));
    const auto seed_key = [](std::uint64_t s) { return std::to_string(s); };
    const auto mean_of = [](const std::vector<double>& v) {
        return v.empty() ? json(nullptr) : json(metrics::pairwise_sum(v) / static_cast<double>(v.size()));
    };
    const auto number_at = [](const json& j, const json::json_pointer& p) -> std::optional<double> {
        if (!j.contains(p) || !j.at(p).is_number()) {
            return std::nullopt;
        }
        return j.at(p).get<double>();
    };

    json cells = json::array();
    for (const auto& c : bundle.cells) {
        json row{{"n_shot", c.cell.n_shot}, {"seed", c.cell.seed}, {"status", c.ok ? "ok" : "failed"}};
        if (c.ok) {
            row["accuracy"] = c.metrics.at("accuracy");
        } else {
            row["error"] = c.error;
        }
        cells.push_back(row);
    }

    std::string csv = "table,method,n_shot,seed,value\n";
    json accuracy = json::array();
    for (const auto& name : {std::string(kRealOnly), method}) {
        for (const int n : m_cfg.n_shots) {
            json per_seed = json::object();
            std::vector<double> values;
            for (const auto& c : bundle.cells) {
                if (c.cell.n_shot != n) {
                    continue;
                }
                const auto v = c.ok ? number_at(c.metrics, json::json_pointer("/accuracy/" + name)) : std::nullopt;
                per_seed[seed_key(c.cell.seed)] = v ? json(*v) : json(nullptr);
                csv += "accuracy," + name + "," + std::to_string(n) + "," + seed_key(c.cell.seed) + "," +
                       (v ? format_double(*v) : std::string()) + "\n";
                if (v) {
                    values.push_back(*v);
                }
            }
            const auto mean = mean_of(values);
            accuracy.push_back({{"method", name}, {"n_shot", n}, {"per_seed", per_seed}, {"mean", mean},
                                {"seeds_ok", values.size()}});
            csv += "accuracy," + name + "," + std::to_string(n) + ",mean," +
                   (mean.is_number() ? format_double(mean.get<double>()) : std::string()) + "\n";
        }
    }

    json quality = json::array();
    const std::pair<const char*, const char*> quality_metrics[] = {
        {"ssim", "/diversity/ssim/mean"},
        {"feature_distance", "/diversity/feature_distance/mean"},
        {"cmmd", "/cmmd/mean"},
    };
    for (const int n : m_cfg.n_shots) {
        json row{{"method", method}, {"n_shot", n}};
        for (const auto& [name, pointer] : quality_metrics) {
            std::vector<double> values;
            for (const auto& c : bundle.cells) {
                if (c.cell.n_shot != n || !c.ok) {
                    continue;
                }
                if (const auto v = number_at(c.metrics, json::json_pointer(pointer))) {
                    values.push_back(*v);
                    csv += std::string(name) + "," + method + "," + std::to_string(n) + "," + seed_key(c.cell.seed) +
                           "," + format_double(*v) + "\n";
                }
            }
            row[name] = mean_of(values);
            if (!values.empty()) {
                csv += std::string(name) + "," + method + "," + std::to_string(n) + ",mean," +
                       format_double(row[name].get<double>()) + "\n";
            }
        }
        quality.push_back(row);
    }

    bundle.report = json{{"run_id", m_run_id},
                         {"strategy", std::string(promptkit::to_string(m_cfg.strategy))},
                         {"method", method},
                         {"n_shots", m_cfg.n_shots},
                         {"seeds", m_cfg.seeds},
                         {"cells", cells},
                         {"accuracy", accuracy},
                         {"quality", quality}};
    bundle.csv = csv;
    write_text(root() / "report.json", bundle.report.dump(2) + "\n");
    write_text(root() / "report.csv", csv);
    return bundle;
}

} // namespace promptaug::experiment
