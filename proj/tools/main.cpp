#include "promptaug/error.hpp"
#include "promptaug/experiment.hpp"
#include "promptaug/mock_dataset.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace {

using namespace promptaug;
namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::string strategy;
    std::optional<int> n_shot;
    std::optional<std::uint64_t> seed;
    std::optional<double> mask_ratio;
    bool mock = false;
    std::string resume;
};

experiment::ExperimentConfig load(const Options& opt, bool override_cells) {
    if (opt.config.empty()) {
        throw ConfigError("--config is required");
    }
    auto cfg = experiment::load_config(opt.config);
    if (!opt.strategy.empty()) {
        cfg.strategy = promptkit::parse_strategy(opt.strategy);
    }
    if (opt.mask_ratio) {
        if (*opt.mask_ratio < 0.0 || *opt.mask_ratio > 1.0) {
            throw ConfigError("--mask-ratio must lie in [0, 1]");
        }
        cfg.mask_ratio = *opt.mask_ratio;
    }
    if (override_cells && opt.n_shot) {
        if (!corpus::is_valid_n_shot(*opt.n_shot)) {
            throw ConfigError("--n-shot must be one of 1, 2, 4, 8, 16");
        }
        cfg.n_shots = {*opt.n_shot};
    }
    if (override_cells && opt.seed) {
        cfg.seeds = {*opt.seed};
    }
    cfg.mock = opt.mock;
    if (!opt.resume.empty()) {
        cfg.run_id = opt.resume;
    }
    if (const char* key = std::getenv("LLM_API_KEY")) {
        cfg.api_key = key;
    }
    return cfg;
}

experiment::CellId selected_cell(const Options& opt, const experiment::ExperimentConfig& cfg) {
    experiment::CellId cell{cfg.n_shots.front(), cfg.seeds.front()};
    if (opt.n_shot) {
        cell.n_shot = *opt.n_shot;
    }
    if (opt.seed) {
        cell.seed = *opt.seed;
    }
    if (!corpus::is_valid_n_shot(cell.n_shot)) {
        throw ConfigError("--n-shot must be one of 1, 2, 4, 8, 16");
    }
    return cell;
}

void print_report(const experiment::ReportBundle& bundle) {
    std::printf("%-10s %6s %10s %s\n", "method", "n_shot", "mean_acc", "per-seed");
    for (const auto& row : bundle.report.at("accuracy")) {
        std::string seeds;
        for (const auto& [seed, value] : row.at("per_seed").items()) {
            char buf[48];
            if (value.is_number()) {
                std::snprintf(buf, sizeof buf, " s%s=%.4f", seed.c_str(), value.get<double>());
            } else {
                std::snprintf(buf, sizeof buf, " s%s=failed", seed.c_str());
            }
            seeds += buf;
        }
        const auto& mean = row.at("mean");
        std::printf("%-10s %6d %10s%s\n", row.at("method").get<std::string>().c_str(), row.at("n_shot").get<int>(),
                    mean.is_number() ? std::to_string(mean.get<double>()).substr(0, 6).c_str() : "-", seeds.c_str());
    }
    for (const auto& cell : bundle.cells) {
        if (!cell.ok) {
            std::fprintf(stderr, "cell %s failed: %s\n", cell.cell.dir_name().c_str(), cell.error.c_str());
        }
    }
}

int finish(const experiment::ReportBundle& bundle, const fs::path& root) {
    print_report(bundle);
    std::printf("report: %s\n", (root / "report.json").string().c_str());
    if (const auto failure = bundle.first_failure()) {
        return exit_code_for(*failure);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot style classification with LLM-completed masked prompts"};
    app.require_subcommand(1);
    Options opt;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--strategy", opt.strategy, "Prompt strategy")
            ->check(CLI::IsMember({"class", "caption", "mlp"}));
        sub->add_option("--n-shot", opt.n_shot, "Real images per style (1, 2, 4, 8 or 16)");
        sub->add_option("--seed", opt.seed, "Random seed");
        sub->add_option("--mask-ratio", opt.mask_ratio, "Fraction of maskable tokens to mask");
        sub->add_flag("--mock", opt.mock, "Use offline mock backends for LLM, T2I and embeddings");
        sub->add_option("--resume", opt.resume, "Continue the run with this id");
    };

    const std::pair<const char*, const char*> stages[] = {
        {"index", "Index the dataset"},
        {"sample", "Draw the few-shot split"},
        {"caption", "Caption the reference images"},
        {"mask", "Mask reference captions"},
        {"complete", "Fill masked captions with the LLM"},
        {"generate", "Generate synthetic images"},
        {"embed", "Embed real and synthetic images"},
        {"train", "Train the Real Only and augmented probes"},
        {"evaluate", "Score probes and synthetic data"},
        {"report", "Aggregate cell metrics into report.json and report.csv"},
    };
    std::map<std::string, CLI::App*> stage_cmds;
    for (const auto& [name, help] : stages) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub);
        stage_cmds[name] = sub;
    }
    auto* run = app.add_subcommand("run", "Run every stage for every (n_shot, seed) cell");
    add_common(run);

    std::string fixture_dir;
    mock::DatasetSpec fixture;
    auto* make_fixture = app.add_subcommand("make-fixture", "Write a small synthetic dataset for offline runs");
    make_fixture->add_option("dir", fixture_dir, "Output directory")->required();
    make_fixture->add_option("--train", fixture.train_per_style, "Train images per style");
    make_fixture->add_option("--val", fixture.val_per_style, "Val images per style");
    make_fixture->add_option("--test", fixture.test_per_style, "Test images per style");
    make_fixture->add_option("--size", fixture.width, "Image side in pixels");
    make_fixture->add_option("--seed", fixture.seed, "Pattern seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (make_fixture->parsed()) {
            fixture.height = fixture.width;
            mock::write_mock_dataset(fixture_dir, fixture);
            std::printf("wrote fixture dataset to %s\n", fixture_dir.c_str());
            return 0;
        }
        if (run->parsed()) {
            experiment::Pipeline pipeline(load(opt, true));
            pipeline.prepare(!opt.resume.empty());
            std::fprintf(stderr, "run %s -> %s\n", pipeline.run_id().c_str(), pipeline.root().string().c_str());
            return finish(pipeline.run(), pipeline.root());
        }

        experiment::Pipeline pipeline(load(opt, false));
        pipeline.prepare(true);
        const auto cell = selected_cell(opt, pipeline.config());
        const auto where = pipeline.root().string();
        if (stage_cmds["index"]->parsed()) {
            const auto index = pipeline.index();
            for (const auto& w : index.warnings()) {
                std::fprintf(stderr, "warning: %s\n", w.c_str());
            }
            std::printf("%zu train, %zu val, %zu test images -> %s/index.json\n", index.count(corpus::Split::Train),
                        index.count(corpus::Split::Val), index.count(corpus::Split::Test), where.c_str());
        } else if (stage_cmds["sample"]->parsed()) {
            const auto split = pipeline.sample(cell);
            std::printf("%zu train, %zu val records -> %s/split.json\n", split.train.size(), split.val.size(),
                        pipeline.cell_dir(cell).string().c_str());
        } else if (stage_cmds["caption"]->parsed()) {
            const auto captions = pipeline.caption(cell);
            std::printf("%zu usable captions -> %s/captions.jsonl\n", captions.size(), where.c_str());
        } else if (stage_cmds["mask"]->parsed()) {
            const auto masks = pipeline.mask(cell);
            std::printf("%zu masked captions -> %s/masks.jsonl\n", masks.size(),
                        pipeline.cell_dir(cell).string().c_str());
        } else if (stage_cmds["complete"]->parsed()) {
            const auto completions = pipeline.complete(cell);
            std::size_t rejected = 0;
            for (const auto& c : completions) {
                rejected += c.validation.accepted ? 0 : 1;
            }
            std::printf("%zu completions (%zu rejected) -> %s/completions.jsonl\n", completions.size(), rejected,
                        pipeline.cell_dir(cell).string().c_str());
        } else if (stage_cmds["generate"]->parsed()) {
            const auto set = pipeline.generate(cell);
            std::printf("%zu synthetic samples -> %s\n", set.samples.size(),
                        synth::manifest_path(set.root, pipeline.config().strategy).string().c_str());
        } else if (stage_cmds["embed"]->parsed()) {
            pipeline.embed(cell);
            std::printf("embeddings -> %s/embeddings\n", pipeline.cell_dir(cell).string().c_str());
        } else if (stage_cmds["train"]->parsed()) {
            pipeline.train(cell);
            std::printf("probes -> %s/probe\n", pipeline.cell_dir(cell).string().c_str());
        } else if (stage_cmds["evaluate"]->parsed()) {
            const auto metrics = pipeline.evaluate(cell);
            std::printf("%s\n", metrics.at("accuracy").dump().c_str());
        } else if (stage_cmds["report"]->parsed()) {
            return finish(pipeline.report(), pipeline.root());
        }
        return 0;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
