#include "promptaug/lingua.hpp"
#include "promptaug/promptkit.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>

using namespace promptaug;

namespace {

constexpr std::string_view kCaption =
    "a red floral dress with white lace, a denim jacket and black leather boots with a silver necklace";

void BM_TagCaption(benchmark::State& state) {
    const lingua::BuiltinTagger tagger;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lingua::tag_caption(kCaption, tagger).tokens.size());
    }
}
BENCHMARK(BM_TagCaption);

void BM_MaskCaption(benchmark::State& state) {
    const auto caption = lingua::tag_caption(kCaption, lingua::BuiltinTagger());
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lingua::mask_caption(caption, 0.5, seed++).mask_positions.size());
    }
}
BENCHMARK(BM_MaskCaption);

void BM_ValidateCompletion(benchmark::State& state) {
    const auto caption = lingua::tag_caption(kCaption, lingua::BuiltinTagger());
    const auto masked = lingua::mask_caption(caption, 0.5, 7);
    auto words = caption.tokens;
    std::string completion;
    for (std::size_t i = 0; i < words.size(); ++i) {
        const bool is_mask = std::find(masked.mask_positions.begin(), masked.mask_positions.end(), i) !=
                             masked.mask_positions.end();
        completion += (completion.empty() ? "" : " ") + (is_mask ? std::string("blue") : words[i].surface);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(promptkit::validate_completion(masked, completion).verdict.accepted);
    }
}
BENCHMARK(BM_ValidateCompletion);

} // namespace
