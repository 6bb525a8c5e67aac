#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace promptaug {

/// One of the 14 FashionStyle14 styles. Ordering follows the canonical list below,
/// which is also the default class order of the probe.
class StyleLabel {
public:
    static constexpr std::array<std::string_view, 14> kNames{
        "conservative", "dressy", "ethnic", "fairy",   "feminine", "gal",  "girlish",
        "kireime-casual", "lolita", "mode", "natural", "retro",    "rock", "street",
    };

    /// Throws DataError for names outside the closed set.
    explicit StyleLabel(std::string_view name);

    static std::optional<StyleLabel> parse(std::string_view name) noexcept;
    static StyleLabel from_index(std::size_t index);

    std::string_view name() const noexcept { return kNames[m_index]; }
    std::string str() const { return std::string(name()); }
    std::size_t index() const noexcept { return m_index; }

    auto operator<=>(const StyleLabel&) const = default;

private:
    explicit StyleLabel(std::size_t index) noexcept : m_index(index) {}
    std::size_t m_index;
};

/// The style with no test images, excluded from evaluation by default.
inline constexpr std::string_view kUntestableStyle = "girlish";

} // namespace promptaug
