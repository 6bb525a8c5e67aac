#include "promptaug/rng.hpp"

#include "promptaug/hashing.hpp"

#include <cmath>
#include <numbers>

namespace promptaug {

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t Rng::next() noexcept {
    m_state += 0x9E3779B97F4A7C15ULL;
    return mix64(m_state);
}

std::uint64_t Rng::uniform(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

double Rng::unit() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
    // 1 - unit() lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept {
    return mix64(parent ^ mix64(fnv1a64(label)));
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index) noexcept {
    return mix64(derive_seed(parent, label) + 0x9E3779B97F4A7C15ULL * (index + 1));
}

} // namespace promptaug
