#pragma once

#include "promptaug/embed.hpp"
#include "promptaug/png_io.hpp"
#include "promptaug/promptkit.hpp"
#include "promptaug/style.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace promptaug::metrics {

/// Fraction of equal entries. Empty or mismatched inputs throw DataError.
double accuracy(std::span<const StyleLabel> predicted, std::span<const StyleLabel> truth);

/// Sum by recursive halving; the result does not depend on thread count.
double pairwise_sum(std::span<const double> values);

// --- SSIM ---------------------------------------------------------------------------

struct GrayImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<double> pixels;

    double at(std::uint32_t x, std::uint32_t y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// ITU-R BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_luma(const RgbImage& image);

struct SsimParams {
    std::uint32_t window = 7;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 255.0;
};

/// Mean SSIM over every fully contained window x window patch, uniform
/// weights and sample (n-1) covariance. Size mismatch or images smaller than
/// the window throw DataError.
double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params = {});
double ssim(const RgbImage& a, const RgbImage& b, const SsimParams& params = {});

// --- diversity ------------------------------------------------------------------------

/// 1 - cosine similarity.
double feature_distance(std::span<const float> a, std::span<const float> b);

struct Group {
    std::string key;
    std::vector<std::size_t> items; // indices into the caller's sample list
};

struct GroupScore {
    std::string key;
    std::size_t size = 0;
    std::size_t pairs = 0;
    double mean = 0.0;
};

struct DiversityReport {
    std::string metric;
    std::vector<GroupScore> groups; // groups with at least two items
    double mean = 0.0;              // unweighted mean over groups
    std::size_t total_pairs = 0;
    std::vector<std::string> warnings;
};

using PairMetric = std::function<double(std::size_t, std::size_t)>;

/// Mean metric over all m(m-1)/2 unordered pairs of each group, then the mean
/// over groups. Groups with fewer than two items are skipped with a warning.
DiversityReport pairwise_diversity(const std::vector<Group>& groups, const PairMetric& metric,
                                   std::string metric_name, std::size_t max_in_flight = 1);

/// Samples sharing a reference image form one group, in first-seen order.
std::vector<Group> reference_groups(const std::vector<std::string>& reference_ids);

/// Per style, consecutive blocks of `group_size` samples; a remainder smaller
/// than a block is dropped, so each style yields floor(N / group_size) groups.
std::vector<Group> class_groups(const std::vector<StyleLabel>& labels, std::size_t group_size = 32);

// --- CMMD ---------------------------------------------------------------------------

struct MmdParams {
    double sigma = 10.0;
    double scale = 1000.0;
};

/// scale * (mean k(X,X) + mean k(Y,Y) - 2 mean k(X,Y)), k(x,y) = exp(-|x-y|^2 / (2 sigma^2)),
/// all pairs including the diagonal. Rounding below zero is clamped to 0.
double mmd_rbf(const embed::EmbeddingMatrix& x, const embed::EmbeddingMatrix& y, const MmdParams& params = {});

struct CmmdReport {
    std::map<StyleLabel, double> per_style;
    double mean = 0.0;
    MmdParams params;
};

/// Per-style mmd_rbf between synthetic and real embeddings, then the
/// unweighted mean. A style present on only one side throws DataError.
CmmdReport cmmd_report(const std::map<StyleLabel, embed::EmbeddingMatrix>& synthetic,
                       const std::map<StyleLabel, embed::EmbeddingMatrix>& real, const MmdParams& params = {});

// --- completions ----------------------------------------------------------------------

using FrequencyTable = std::vector<std::pair<std::string, std::size_t>>;

/// Words of the filled spans only: lower-cased, punctuation stripped,
/// stopwords dropped; sorted by count descending, then alphabetically.
FrequencyTable word_frequencies(const std::vector<promptkit::CompletedCaption>& completions);

void write_frequency_csv(const std::filesystem::path& path, const FrequencyTable& table);

nlohmann::json to_json(const DiversityReport& report);
nlohmann::json to_json(const CmmdReport& report);

} // namespace promptaug::metrics
