#pragma once

#include "promptaug/style.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace promptaug::corpus {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view text);

struct ImageRecord {
    std::string id; // "<split>/<style>/<filename>"
    std::filesystem::path path;
    StyleLabel label;
    Split split;

    bool operator==(const ImageRecord&) const = default;
};

struct LoadOptions {
    std::vector<StyleLabel> exclude{StyleLabel(kUntestableStyle)};
    /// When set, excluded styles are dropped from the test partition and from sampling.
    bool for_evaluation = true;
};

/// Immutable view of a dataset laid out as root/<split>/<style>/<image files>.
class DatasetIndex {
public:
    DatasetIndex() = default;
    DatasetIndex(std::filesystem::path root, std::vector<ImageRecord> records,
                 std::vector<std::string> warnings, std::vector<StyleLabel> excluded);

    const std::filesystem::path& root() const noexcept { return m_root; }
    const std::vector<ImageRecord>& records() const noexcept { return m_records; }
    const std::vector<std::string>& warnings() const noexcept { return m_warnings; }
    const std::vector<StyleLabel>& excluded() const noexcept { return m_excluded; }

    std::vector<ImageRecord> records(Split split) const;
    std::vector<ImageRecord> records(Split split, StyleLabel style) const;

    /// Train and val records of one style, ordered by id.
    std::vector<ImageRecord> pool(StyleLabel style) const;

    /// Styles with at least one train/val record that are not excluded, canonical order.
    std::vector<StyleLabel> evaluation_styles() const;

    std::size_t count(Split split) const;

private:
    std::filesystem::path m_root;
    std::vector<ImageRecord> m_records; // sorted by id
    std::vector<std::string> m_warnings;
    std::vector<StyleLabel> m_excluded;
};

/// Walks the dataset layout. Missing root or a root without style directories
/// throws DataError; empty style directories and unreadable files are recorded
/// as warnings.
DatasetIndex load_dataset(const std::filesystem::path& root, const LoadOptions& options = {});

struct FewShotSplit {
    int n_shot = 0;
    std::uint64_t seed = 0;
    std::vector<ImageRecord> train;
    std::vector<ImageRecord> val;
};

/// Draws n_shot train and n_shot val records per evaluation style from the
/// train/val pool. Per style the pool is sorted by id, shuffled with
/// Rng(derive_seed(seed, style name)) and split as [0, n) train, [n, 2n) val.
FewShotSplit sample_few_shot(const DatasetIndex& index, int n_shot, std::uint64_t seed);

bool is_valid_n_shot(int n_shot) noexcept;

nlohmann::json to_json(const ImageRecord& record);
ImageRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DatasetIndex& index);
DatasetIndex index_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FewShotSplit& split);
FewShotSplit split_from_json(const nlohmann::json& j);

} // namespace promptaug::corpus
