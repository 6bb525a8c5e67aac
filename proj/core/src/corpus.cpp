#include "promptaug/corpus.hpp"

#include "promptaug/error.hpp"
#include "promptaug/rng.hpp"

#include <algorithm>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace promptaug::corpus {

std::string_view to_string(Split split) noexcept {
    switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "val") return Split::Val;
    if (text == "test") return Split::Test;
    throw DataError("unknown split '" + std::string(text) + "'");
}

DatasetIndex::DatasetIndex(fs::path root, std::vector<ImageRecord> records, std::vector<std::string> warnings,
                           std::vector<StyleLabel> excluded)
    : m_root(std::move(root)), m_records(std::move(records)), m_warnings(std::move(warnings)),
      m_excluded(std::move(excluded)) {
    std::sort(m_records.begin(), m_records.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
    const auto dup = std::adjacent_find(m_records.begin(), m_records.end(),
                                        [](const ImageRecord& a, const ImageRecord& b) { return a.id == b.id; });
    if (dup != m_records.end()) {
        throw DataError("duplicate image id '" + dup->id + "'");
    }
}

std::vector<ImageRecord> DatasetIndex::records(Split split) const {
    std::vector<ImageRecord> out;
    std::copy_if(m_records.begin(), m_records.end(), std::back_inserter(out),
                 [&](const ImageRecord& r) { return r.split == split; });
    return out;
}

std::vector<ImageRecord> DatasetIndex::records(Split split, StyleLabel style) const {
    std::vector<ImageRecord> out;
    std::copy_if(m_records.begin(), m_records.end(), std::back_inserter(out),
                 [&](const ImageRecord& r) { return r.split == split && r.label == style; });
    return out;
}

std::vector<ImageRecord> DatasetIndex::pool(StyleLabel style) const {
    std::vector<ImageRecord> out;
    std::copy_if(m_records.begin(), m_records.end(), std::back_inserter(out),
                 [&](const ImageRecord& r) { return r.split != Split::Test && r.label == style; });
    return out;
}

std::vector<StyleLabel> DatasetIndex::evaluation_styles() const {
    std::vector<StyleLabel> styles;
    for (const auto& r : m_records) {
        if (r.split == Split::Test) {
            continue;
        }
        if (std::find(m_excluded.begin(), m_excluded.end(), r.label) != m_excluded.end()) {
            continue;
        }
        if (std::find(styles.begin(), styles.end(), r.label) == styles.end()) {
            styles.push_back(r.label);
        }
    }
    std::sort(styles.begin(), styles.end());
    return styles;
}

std::size_t DatasetIndex::count(Split split) const {
    return static_cast<std::size_t>(
        std::count_if(m_records.begin(), m_records.end(), [&](const ImageRecord& r) { return r.split == split; }));
}

namespace {

bool readable(const fs::path& path) {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec || size == 0) {
        return false;
    }
    std::ifstream in(path, std::ios::binary);
    return static_cast<bool>(in);
}

std::vector<fs::path> sorted_children(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (!name.empty() && name.front() == '.') {
            continue;
        }
        out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

DatasetIndex load_dataset(const fs::path& root, const LoadOptions& options) {
    if (!fs::is_directory(root)) {
        throw DataError("dataset root not found: " + root.string());
    }
    std::vector<ImageRecord> records;
    std::vector<std::string> warnings;
    std::size_t style_dirs = 0;

    for (const auto& split_dir : sorted_children(root)) {
        if (!fs::is_directory(split_dir)) {
            continue;
        }
        const auto split_name = split_dir.filename().string();
        if (split_name != "train" && split_name != "val" && split_name != "test") {
            warnings.push_back("ignoring unknown split directory '" + split_name + "'");
            continue;
        }
        const Split split = parse_split(split_name);
        for (const auto& style_dir : sorted_children(split_dir)) {
            if (!fs::is_directory(style_dir)) {
                continue;
            }
            const auto style_name = style_dir.filename().string();
            const auto style = StyleLabel::parse(style_name);
            if (!style) {
                warnings.push_back("ignoring unknown style directory '" + split_name + "/" + style_name + "'");
                continue;
            }
            ++style_dirs;
            if (split == Split::Test && options.for_evaluation &&
                std::find(options.exclude.begin(), options.exclude.end(), *style) != options.exclude.end()) {
                continue;
            }
            std::size_t kept = 0;
            for (const auto& file : sorted_children(style_dir)) {
                if (!fs::is_regular_file(file)) {
                    continue;
                }
                const auto id = split_name + "/" + style_name + "/" + file.filename().string();
                if (!readable(file)) {
                    warnings.push_back("skipping unreadable image '" + id + "'");
                    continue;
                }
                records.push_back(ImageRecord{id, file, *style, split});
                ++kept;
            }
            if (kept == 0) {
                warnings.push_back("empty style directory '" + split_name + "/" + style_name + "'");
            }
        }
    }
    if (style_dirs == 0) {
        throw DataError("no styles found under " + root.string());
    }
    std::vector<StyleLabel> excluded = options.for_evaluation ? options.exclude : std::vector<StyleLabel>{};
    return DatasetIndex(root, std::move(records), std::move(warnings), std::move(excluded));
}

bool is_valid_n_shot(int n_shot) noexcept {
    return n_shot == 1 || n_shot == 2 || n_shot == 4 || n_shot == 8 || n_shot == 16;
}

FewShotSplit sample_few_shot(const DatasetIndex& index, int n_shot, std::uint64_t seed) {
    if (!is_valid_n_shot(n_shot)) {
        throw ConfigError("n_shot must be one of 1, 2, 4, 8, 16 (got " + std::to_string(n_shot) + ")");
    }
    FewShotSplit split;
    split.n_shot = n_shot;
    split.seed = seed;
    const auto need = static_cast<std::size_t>(2 * n_shot);
    for (const auto style : index.evaluation_styles()) {
        auto pool = index.pool(style);
        if (pool.size() < need) {
            throw DataError("style '" + style.str() + "': need " + std::to_string(need) + ", have " +
                            std::to_string(pool.size()));
        }
        Rng rng(derive_seed(seed, style.name()));
        rng.shuffle(pool);
        const auto n = static_cast<std::ptrdiff_t>(n_shot);
        split.train.insert(split.train.end(), pool.begin(), pool.begin() + n);
        split.val.insert(split.val.end(), pool.begin() + n, pool.begin() + 2 * n);
    }
    return split;
}

json to_json(const ImageRecord& r) {
    return json{{"id", r.id}, {"path", r.path.string()}, {"label", r.label.name()}, {"split", to_string(r.split)}};
}

ImageRecord record_from_json(const json& j) {
    return ImageRecord{j.at("id").get<std::string>(), fs::path(j.at("path").get<std::string>()),
                       StyleLabel(j.at("label").get<std::string>()), parse_split(j.at("split").get<std::string>())};
}

json to_json(const DatasetIndex& index) {
    json records = json::array();
    for (const auto& r : index.records()) {
        records.push_back(to_json(r));
    }
    json excluded = json::array();
    for (const auto& s : index.excluded()) {
        excluded.push_back(s.name());
    }
    return json{{"root", index.root().string()},
                {"records", std::move(records)},
                {"warnings", index.warnings()},
                {"excluded", std::move(excluded)}};
}

DatasetIndex index_from_json(const json& j) {
    std::vector<ImageRecord> records;
    for (const auto& r : j.at("records")) {
        records.push_back(record_from_json(r));
    }
    std::vector<StyleLabel> excluded;
    for (const auto& s : j.value("excluded", json::array())) {
        excluded.emplace_back(s.get<std::string>());
    }
    return DatasetIndex(fs::path(j.at("root").get<std::string>()), std::move(records),
                        j.value("warnings", std::vector<std::string>{}), std::move(excluded));
}

json to_json(const FewShotSplit& split) {
    json train = json::array();
    json val = json::array();
    for (const auto& r : split.train) train.push_back(to_json(r));
    for (const auto& r : split.val) val.push_back(to_json(r));
    return json{{"n_shot", split.n_shot}, {"seed", split.seed}, {"train", std::move(train)}, {"val", std::move(val)}};
}

FewShotSplit split_from_json(const json& j) {
    FewShotSplit split;
    split.n_shot = j.at("n_shot").get<int>();
    split.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& r : j.at("train")) split.train.push_back(record_from_json(r));
    for (const auto& r : j.at("val")) split.val.push_back(record_from_json(r));
    return split;
}

} // namespace promptaug::corpus
