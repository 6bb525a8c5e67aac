#include "promptaug/mock_dataset.hpp"

#include "promptaug/io.hpp"
#include "promptaug/png_io.hpp"
#include "promptaug/rng.hpp"
#include "promptaug/t2i_backend.hpp"

#include <algorithm>
#include <cstdio>

namespace promptaug::mock {

void write_mock_dataset(const std::filesystem::path& root, const DatasetSpec& spec) {
    const std::pair<const char*, std::size_t> splits[] = {
        {"train", spec.train_per_style}, {"val", spec.val_per_style}, {"test", spec.test_per_style}};
    for (std::size_t s = 0; s < StyleLabel::kNames.size(); ++s) {
        const auto style = StyleLabel::from_index(s);
        for (const auto& [split, count] : splits) {
            const bool skip = std::string_view(split) == "test" &&
                              std::find(spec.no_test.begin(), spec.no_test.end(), style) != spec.no_test.end();
            if (skip) {
                continue;
            }
            for (std::size_t i = 0; i < count; ++i) {
                char name[96];
                std::snprintf(name, sizeof name, "%s_%03zu.png", style.str().c_str(), i);
                const auto seed = derive_seed(spec.seed, std::string(split) + "/" + style.str(), i);
                const auto image = synth::mock_pattern(seed, spec.width, spec.height);
                write_bytes(root / split / style.str() / name, encode_png(image, {{"style", style.str()}}));
            }
        }
    }
}

} // namespace promptaug::mock
