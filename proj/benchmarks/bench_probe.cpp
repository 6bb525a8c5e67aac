#include "promptaug/embed.hpp"
#include "promptaug/probe.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace promptaug;

namespace {

probe::Batch random_batch(std::mt19937_64& gen, std::size_t n, std::size_t d, std::size_t classes) {
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> label(0, classes - 1);
    probe::Batch batch;
    batch.d = d;
    batch.x.resize(n * d);
    for (auto& v : batch.x) v = normal(gen);
    for (std::size_t i = 0; i < n; ++i) batch.y.push_back(label(gen));
    return batch;
}

embed::EmbeddingMatrix blobs(std::mt19937_64& gen, std::size_t per_class, std::size_t d, embed::Origin origin) {
    std::normal_distribution<float> normal(0.0f, 0.3f / std::sqrt(static_cast<float>(d)));
    embed::EmbeddingMatrix m(d, true);
    std::vector<float> row(d);
    for (std::size_t c = 0; c < StyleLabel::kNames.size(); ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            for (auto& v : row) v = normal(gen);
            row[c] += 1.0f;
            embed::l2_normalize(row);
            m.append(row, embed::RowInfo{std::to_string(c) + "-" + std::to_string(i), StyleLabel::from_index(c), origin});
        }
    }
    return m;
}

void BM_CombinedLoss(benchmark::State& state) {
    std::mt19937_64 gen(4);
    const std::size_t d = 512;
    probe::LinearHead head(13, d);
    const auto real = random_batch(gen, 32, d, 13);
    const auto syn = random_batch(gen, static_cast<std::size_t>(state.range(0)), d, 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(probe::combined_loss(head, real, syn).loss);
    }
}
BENCHMARK(BM_CombinedLoss)->Arg(64)->Arg(512);

void BM_AdamWStep(benchmark::State& state) {
    const std::size_t n = 13 * 513;
    std::vector<double> params(n, 0.5);
    const std::vector<double> grads(n, 0.01);
    probe::AdamWState adam(n);
    for (auto _ : state) {
        probe::adamw_step(params, grads, adam, 1e-4, 0.9, 0.999, 1e-8, 1e-2);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_AdamWStep);

void BM_TrainProbe(benchmark::State& state) {
    std::mt19937_64 gen(5);
    const auto real = blobs(gen, 4, 128, embed::Origin::Real);
    const auto syn = blobs(gen, 64, 128, embed::Origin::Synthetic);
    const auto val = blobs(gen, 2, 128, embed::Origin::Real);
    probe::TrainConfig cfg;
    cfg.max_epochs = 20;
    cfg.patience = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(probe::train_probe(real, &syn, val, cfg).best_epoch);
    }
}
BENCHMARK(BM_TrainProbe)->Unit(benchmark::kMillisecond);

} // namespace
