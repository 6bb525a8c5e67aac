#pragma once

// Straightforward reference implementations used as test oracles. They share
// no code with the library and favor directness over speed.

#include "promptaug/embed.hpp"
#include "promptaug/metrics.hpp"
#include "promptaug/probe.hpp"

#include <cstddef>
#include <vector>

namespace promptaug::testing {

/// Mean softmax cross-entropy, evaluated in long double without max subtraction.
long double naive_cross_entropy(const std::vector<double>& W, const std::vector<double>& b, std::size_t classes,
                                const probe::Batch& batch);

/// CE(real) + CE(synthetic) from the definition.
long double naive_combined_loss(const probe::LinearHead& head, const probe::Batch& real,
                                const probe::Batch& synthetic);

/// SSIM by recomputing every window's statistics from scratch.
double brute_ssim(const metrics::GrayImage& a, const metrics::GrayImage& b, const metrics::SsimParams& params);

/// Biased RBF MMD with explicit double loops over all pairs.
double naive_mmd(const embed::EmbeddingMatrix& x, const embed::EmbeddingMatrix& y, double sigma, double scale);

/// Mean of metric over all unordered pairs of items.
double naive_pair_mean(const std::vector<std::size_t>& items, const metrics::PairMetric& metric);

} // namespace promptaug::testing
