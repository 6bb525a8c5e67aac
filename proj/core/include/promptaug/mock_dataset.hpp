#pragma once

#include "promptaug/style.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace promptaug::mock {

struct DatasetSpec {
    std::size_t train_per_style = 4;
    std::size_t val_per_style = 4;
    std::size_t test_per_style = 6;
    std::uint32_t width = 32;
    std::uint32_t height = 32;
    std::uint64_t seed = 7;
    /// Styles without test images (the real dataset has none for girlish).
    std::vector<StyleLabel> no_test{StyleLabel(kUntestableStyle)};
};

/// Writes root/<split>/<style>/<style>_<nnn>.png for all 14 styles. Every
/// image carries a "style" tEXt chunk so the mock embedding provider can
/// place it near its class mean.
void write_mock_dataset(const std::filesystem::path& root, const DatasetSpec& spec = {});

} // namespace promptaug::mock
