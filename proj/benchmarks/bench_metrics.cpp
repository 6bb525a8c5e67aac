#include "promptaug/embed.hpp"
#include "promptaug/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace promptaug;

namespace {

metrics::GrayImage random_gray(std::mt19937_64& gen, std::uint32_t size) {
    std::uniform_real_distribution<double> value(0.0, 255.0);
    metrics::GrayImage image{size, size, {}};
    image.pixels.resize(static_cast<std::size_t>(size) * size);
    for (auto& p : image.pixels) p = value(gen);
    return image;
}

embed::EmbeddingMatrix random_embeddings(std::mt19937_64& gen, std::size_t n, std::size_t d) {
    std::normal_distribution<float> normal;
    embed::EmbeddingMatrix m(d, true);
    std::vector<float> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = normal(gen);
        embed::l2_normalize(row);
        m.append(row, embed::RowInfo{"r" + std::to_string(i), StyleLabel("gal"), embed::Origin::Real});
    }
    return m;
}

void BM_Ssim(benchmark::State& state) {
    std::mt19937_64 gen(1);
    const auto size = static_cast<std::uint32_t>(state.range(0));
    const auto a = random_gray(gen, size);
    const auto b = random_gray(gen, size);
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::ssim(a, b));
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256)->Arg(512);

void BM_MmdRbf(benchmark::State& state) {
    std::mt19937_64 gen(2);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_embeddings(gen, n, 512);
    const auto y = random_embeddings(gen, n, 512);
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::mmd_rbf(x, y));
    }
}
BENCHMARK(BM_MmdRbf)->Arg(64)->Arg(256)->Arg(512);

void BM_FeatureDistanceDiversity(benchmark::State& state) {
    std::mt19937_64 gen(3);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = random_embeddings(gen, n, 512);
    std::vector<StyleLabel> labels(n, StyleLabel("gal"));
    const auto groups = metrics::class_groups(labels, 32);
    const metrics::PairMetric metric = [&](std::size_t i, std::size_t j) {
        return metrics::feature_distance(m.row(i), m.row(j));
    };
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::pairwise_diversity(groups, metric, "feature_distance").mean);
    }
}
BENCHMARK(BM_FeatureDistanceDiversity)->Arg(512);

} // namespace
