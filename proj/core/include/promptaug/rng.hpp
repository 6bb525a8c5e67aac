#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace promptaug {

/// SplitMix64 generator.
///
/// Every random decision in the pipeline (few-shot splits, mask selection,
/// batch order, mock backends) goes through this type so that results are
/// reproducible from the documented algorithm alone:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : m_state(seed) {}

    std::uint64_t next() noexcept;

    /// Uniform integer in [0, bound) by rejection: draws below (2^64 - bound) % bound
    /// are discarded, the rest are reduced modulo bound. bound must be > 0.
    std::uint64_t uniform(std::uint64_t bound) noexcept;

    /// Uniform double in [0, 1) from the top 53 bits.
    double unit() noexcept;

    /// Standard normal via Box-Muller (one value per two draws, no caching).
    double normal() noexcept;

    /// Fisher-Yates: for i = n-1 down to 1, swap(v[i], v[uniform(i+1)]).
    template <typename T>
    void shuffle(std::vector<T>& values) noexcept {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t m_state;
};

/// SplitMix64 finalizer applied to a single value.
std::uint64_t mix64(std::uint64_t value) noexcept;

/// Derives a child seed from a parent seed and a label, e.g. ("mask", style, index).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index) noexcept;

} // namespace promptaug
