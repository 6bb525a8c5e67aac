#include "promptaug/metrics.hpp"

#include "promptaug/error.hpp"
#include "promptaug/io.hpp"
#include "promptaug/lingua.hpp"
#include "promptaug/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

using nlohmann::json;

namespace promptaug::metrics {

double accuracy(std::span<const StyleLabel> predicted, std::span<const StyleLabel> truth) {
    if (predicted.size() != truth.size()) {
        throw DataError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                        std::to_string(truth.size()) + " labels");
    }
    if (truth.empty()) {
        throw DataError("accuracy: no labels");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        correct += predicted[i] == truth[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (const double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double feature_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw DataError("feature_distance: dimension mismatch");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw DataError("feature_distance: zero vector");
    }
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

DiversityReport pairwise_diversity(const std::vector<Group>& groups, const PairMetric& metric,
                                   std::string metric_name, std::size_t max_in_flight) {
    DiversityReport report;
    report.metric = std::move(metric_name);
    std::vector<double> group_means;
    for (const auto& group : groups) {
        const std::size_t m = group.items.size();
        if (m < 2) {
            report.warnings.push_back("group '" + group.key + "' has " + std::to_string(m) +
                                      " item(s); skipped");
            continue;
        }
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        pairs.reserve(m * (m - 1) / 2);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                pairs.emplace_back(group.items[i], group.items[j]);
            }
        }
        std::vector<double> values(pairs.size());
        parallel_for(pairs.size(), max_in_flight,
                     [&](std::size_t p) { values[p] = metric(pairs[p].first, pairs[p].second); });
        const double mean = pairwise_sum(values) / static_cast<double>(values.size());
        report.groups.push_back({group.key, m, pairs.size(), mean});
        report.total_pairs += pairs.size();
        group_means.push_back(mean);
    }
    if (!group_means.empty()) {
        report.mean = pairwise_sum(group_means) / static_cast<double>(group_means.size());
    } else {
        report.mean = std::nan("");
        report.warnings.push_back("no group with at least two items");
    }
    return report;
}

std::vector<Group> reference_groups(const std::vector<std::string>& reference_ids) {
    std::vector<Group> groups;
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < reference_ids.size(); ++i) {
        const auto [it, inserted] = slot.emplace(reference_ids[i], groups.size());
        if (inserted) {
            groups.push_back({reference_ids[i], {}});
        }
        groups[it->second].items.push_back(i);
    }
    return groups;
}

std::vector<Group> class_groups(const std::vector<StyleLabel>& labels, std::size_t group_size) {
    if (group_size < 2) {
        throw ConfigError("class group size must be at least 2");
    }
    std::map<StyleLabel, std::vector<std::size_t>> by_style;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_style[labels[i]].push_back(i);
    }
    std::vector<Group> groups;
    for (const auto& [style, items] : by_style) {
        const std::size_t count = items.size() / group_size;
        for (std::size_t g = 0; g < count; ++g) {
            Group group{style.str() + "/" + std::to_string(g), {}};
            group.items.assign(items.begin() + static_cast<std::ptrdiff_t>(g * group_size),
                               items.begin() + static_cast<std::ptrdiff_t>((g + 1) * group_size));
            groups.push_back(std::move(group));
        }
    }
    return groups;
}

namespace {

double mean_kernel(const embed::EmbeddingMatrix& a, const embed::EmbeddingMatrix& b, double gamma) {
    std::vector<double> values;
    values.reserve(a.n() * b.n());
    for (std::size_t i = 0; i < a.n(); ++i) {
        const auto x = a.row(i);
        for (std::size_t j = 0; j < b.n(); ++j) {
            const auto y = b.row(j);
            double sq = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double diff = static_cast<double>(x[k]) - y[k];
                sq += diff * diff;
            }
            values.push_back(std::exp(-gamma * sq));
        }
    }
    return pairwise_sum(values) / static_cast<double>(values.size());
}

} // namespace

double mmd_rbf(const embed::EmbeddingMatrix& x, const embed::EmbeddingMatrix& y, const MmdParams& params) {
    if (x.empty() || y.empty()) {
        throw DataError("mmd_rbf: both sets must be non-empty");
    }
    if (x.d() != y.d()) {
        throw DataError("mmd_rbf: dimension mismatch (" + std::to_string(x.d()) + " vs " + std::to_string(y.d()) + ")");
    }
    if (!(params.sigma > 0.0)) {
        throw ConfigError("mmd_rbf: sigma must be positive");
    }
    const double gamma = 1.0 / (2.0 * params.sigma * params.sigma);
    const double value = mean_kernel(x, x, gamma) + mean_kernel(y, y, gamma) - 2.0 * mean_kernel(x, y, gamma);
    return params.scale * std::max(0.0, value);
}

CmmdReport cmmd_report(const std::map<StyleLabel, embed::EmbeddingMatrix>& synthetic,
                       const std::map<StyleLabel, embed::EmbeddingMatrix>& real, const MmdParams& params) {
    std::set<StyleLabel> styles;
    for (const auto& [style, m] : synthetic) {
        styles.insert(style);
    }
    for (const auto& [style, m] : real) {
        styles.insert(style);
    }
    if (styles.empty()) {
        throw DataError("cmmd: no styles");
    }
    CmmdReport report;
    report.params = params;
    std::vector<double> values;
    for (const auto& style : styles) {
        const auto s = synthetic.find(style);
        const auto r = real.find(style);
        if (s == synthetic.end() || s->second.empty()) {
            throw DataError("cmmd: style '" + style.str() + "' has no synthetic embeddings");
        }
        if (r == real.end() || r->second.empty()) {
            throw DataError("cmmd: style '" + style.str() + "' has no real embeddings");
        }
        const double v = mmd_rbf(s->second, r->second, params);
        report.per_style[style] = v;
        values.push_back(v);
    }
    report.mean = pairwise_sum(values) / static_cast<double>(values.size());
    return report;
}

FrequencyTable word_frequencies(const std::vector<promptkit::CompletedCaption>& completions) {
    std::map<std::string, std::size_t> counts;
    for (const auto& completion : completions) {
        for (const auto& span : completion.filled_spans) {
            std::string word;
            const auto flush = [&] {
                if (!word.empty() && !lingua::is_stopword(word)) {
                    ++counts[word];
                }
                word.clear();
            };
            for (const char ch : span.text) {
                const auto c = static_cast<unsigned char>(ch);
                if (std::isalnum(c) || c == '-' || c == '\'' || c >= 0x80) {
                    word += static_cast<char>(std::tolower(c));
                } else {
                    flush();
                }
            }
            flush();
        }
    }
    FrequencyTable table(counts.begin(), counts.end());
    std::stable_sort(table.begin(), table.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return table;
}

void write_frequency_csv(const std::filesystem::path& path, const FrequencyTable& table) {
    std::string out = "word,count\n";
    for (const auto& [word, count] : table) {
        out += word + "," + std::to_string(count) + "\n";
    }
    write_text(path, out);
}

json to_json(const DiversityReport& report) {
    json groups = json::array();
    for (const auto& g : report.groups) {
        groups.push_back({{"key", g.key}, {"size", g.size}, {"pairs", g.pairs}, {"mean", g.mean}});
    }
    json j{{"metric", report.metric},
           {"groups", groups},
           {"total_pairs", report.total_pairs},
           {"warnings", report.warnings}};
    j["mean"] = std::isfinite(report.mean) ? json(report.mean) : json(nullptr);
    return j;
}

json to_json(const CmmdReport& report) {
    json per_style = json::object();
    for (const auto& [style, v] : report.per_style) {
        per_style[style.str()] = v;
    }
    return {{"per_style", per_style},
            {"mean", report.mean},
            {"sigma", report.params.sigma},
            {"scale", report.params.scale}};
}

} // namespace promptaug::metrics
