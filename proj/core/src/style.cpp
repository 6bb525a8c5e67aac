#include "promptaug/style.hpp"

#include "promptaug/error.hpp"

#include <algorithm>

namespace promptaug {

std::optional<StyleLabel> StyleLabel::parse(std::string_view name) noexcept {
    const auto it = std::find(kNames.begin(), kNames.end(), name);
    if (it == kNames.end()) {
        return std::nullopt;
    }
    return StyleLabel(static_cast<std::size_t>(it - kNames.begin()));
}

StyleLabel::StyleLabel(std::string_view name) : m_index(0) {
    const auto parsed = parse(name);
    if (!parsed) {
        throw DataError("unknown style '" + std::string(name) + "'");
    }
    m_index = parsed->m_index;
}

StyleLabel StyleLabel::from_index(std::size_t index) {
    if (index >= kNames.size()) {
        throw DataError("style index out of range");
    }
    return StyleLabel(index);
}

} // namespace promptaug
