#pragma once

#include "promptaug/style.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace promptaug::mock {

/// Themed vocabulary used by the offline LLM mock. Every word is tagged
/// NOUN or ADJ by the built-in tagger and none is another style's name.
struct StyleVocabulary {
    std::string_view favorite; // drawn most often when filling masks
    std::vector<std::string_view> descriptors;
    std::vector<std::string_view> colors;
    std::vector<std::string_view> tops;
    std::vector<std::string_view> bottoms;
    std::vector<std::string_view> shoes;
    std::vector<std::string_view> accessories;
};

const StyleVocabulary& vocabulary(StyleLabel style);

/// Caption text (with the "A photo of a woman wearing" prefix) for an image id.
std::string caption_for(StyleLabel style, std::string_view image_id);

/// Word used to fill the mask with the given ordinal. Weights: favorite 4,
/// style name 2, every other vocabulary word 1.
std::string fill_word(StyleLabel style, std::uint64_t seed, std::size_t mask_ordinal);

} // namespace promptaug::mock
