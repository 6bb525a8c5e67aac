#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace promptaug {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis = 0xCBF29CE484222325ULL) noexcept;
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xCBF29CE484222325ULL) noexcept;

/// Lower-case 16-digit hex rendering.
std::string hex64(std::uint64_t value);

} // namespace promptaug
