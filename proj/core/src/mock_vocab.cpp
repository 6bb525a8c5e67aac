#include "promptaug/mock_vocab.hpp"

#include "promptaug/hashing.hpp"
#include "promptaug/rng.hpp"

#include <array>

namespace promptaug::mock {

namespace {

const std::array<StyleVocabulary, 14>& table() {
    static const std::array<StyleVocabulary, 14> vocab{{
        // conservative
        {"classic", {"classic", "tailored", "polished", "refined"}, {"navy", "beige", "gray"},
         {"blouse", "cardigan", "blazer"}, {"trousers", "skirt", "pants"}, {"loafers", "pumps"}, {"handbag", "scarf"}},
        // dressy
        {"elegant", {"elegant", "glamorous", "sophisticated", "sleek"}, {"black", "gold", "burgundy"},
         {"gown", "camisole", "blouse"}, {"skirt", "trousers", "slip"}, {"heels", "pumps"}, {"necklace", "earrings"}},
        // ethnic
        {"bohemian", {"bohemian", "floral", "embroidered", "brimmed"}, {"earthy", "olive", "coral"},
         {"tunic", "poncho", "kimono"}, {"skirt", "pants", "wrap"}, {"sandals", "boots"}, {"hat", "bracelet"}},
        // fairy
        {"pastel", {"pastel", "cute", "fluffy", "dreamy"}, {"lavender", "pink", "mint"},
         {"cardigan", "blouse", "sweater"}, {"tutu", "skirt", "petticoat"}, {"platforms", "flats"}, {"bow", "ribbon"}},
        // feminine
        {"romantic", {"romantic", "delicate", "soft", "flowy"}, {"rose", "cream", "peach"},
         {"blouse", "camisole", "cardigan"}, {"skirt", "dress", "slip"}, {"heels", "flats"}, {"handbag", "headband"}},
        // gal
        {"glamorous", {"glamorous", "sexy", "flirty", "bright"}, {"gold", "pink", "tan"},
         {"camisole", "top", "jacket"}, {"shorts", "skirt", "jeans"}, {"heels", "platforms"}, {"sunglasses", "earrings"}},
        // girlish
        {"sweet", {"sweet", "girly", "playful", "youthful"}, {"pink", "white", "coral"},
         {"blouse", "top", "cardigan"}, {"skirt", "shorts", "overalls"}, {"sneakers", "flats"}, {"bow", "backpack"}},
        // kireime-casual
        {"sleek", {"sleek", "effortless", "minimalist", "relaxed"}, {"white", "beige", "navy"},
         {"shirt", "blouse", "knitwear"}, {"trousers", "jeans", "skirt"}, {"loafers", "mules"}, {"tote", "belt"}},
        // lolita
        {"frilly", {"frilly", "ornate", "whimsical", "voluminous"}, {"pink", "white", "lilac"},
         {"blouse", "bodice", "corset"}, {"petticoat", "skirt", "dress"}, {"platforms", "pumps"}, {"bow", "headband"}},
        // mode
        {"monochrome", {"monochrome", "structured", "geometric", "bold"}, {"black", "charcoal", "white"},
         {"coat", "jacket", "shirt"}, {"trousers", "skirt", "pants"}, {"boots", "heels"}, {"bag", "sunglasses"}},
        // natural
        {"earthy", {"earthy", "relaxed", "comfortable", "lightweight"}, {"beige", "olive", "cream"},
         {"tunic", "cardigan", "shirt"}, {"pants", "skirt", "overalls"}, {"sandals", "flats"}, {"tote", "hat"}},
        // retro
        {"vintage", {"vintage", "timeless", "striped", "checkered"}, {"mustard-toned", "burgundy", "teal"},
         {"blouse", "cardigan", "sweater"}, {"skirt", "trousers", "jeans"}, {"loafers", "pumps"}, {"scarf", "beret"}},
        // rock
        {"edgy", {"edgy", "rebellious", "studded", "distressed"}, {"black", "charcoal", "crimson"},
         {"jacket", "tee", "vest"}, {"jeans", "leggings", "skirt"}, {"boots", "sneakers"}, {"chains", "belt"}},
        // street
        {"oversized", {"oversized", "urban", "sporty", "graphic"}, {"black", "khaki", "orange"},
         {"hoodie", "tee", "jacket"}, {"pants", "shorts", "jeans"}, {"sneakers", "boots"}, {"cap", "backpack"}},
    }};
    return vocab;
}

template <typename List>
std::string_view pick(const List& list, std::uint64_t h, int salt) {
    return list[mix64(h + static_cast<std::uint64_t>(salt)) % list.size()];
}

} // namespace

const StyleVocabulary& vocabulary(StyleLabel style) {
    return table()[style.index()];
}

std::string caption_for(StyleLabel style, std::string_view image_id) {
    const auto& v = vocabulary(style);
    const auto h = fnv1a64(image_id);
    std::string text = "A photo of a woman wearing a ";
    text += pick(v.descriptors, h, 1);
    text += ' ';
    text += pick(v.colors, h, 2);
    text += ' ';
    text += pick(v.tops, h, 3);
    text += " with a ";
    text += pick(v.colors, h, 4);
    text += ' ';
    text += pick(v.bottoms, h, 5);
    text += ", ";
    text += pick(v.shoes, h, 6);
    text += ", and a ";
    text += pick(v.accessories, h, 7);
    text += ", embodying a ";
    text += pick(v.descriptors, h, 8);
    text += ' ';
    text += style.name();
    text += " fashion style.";
    return text;
}

std::string fill_word(StyleLabel style, std::uint64_t seed, std::size_t mask_ordinal) {
    const auto& v = vocabulary(style);
    std::vector<std::string_view> pool;
    for (int i = 0; i < 4; ++i) pool.push_back(v.favorite);
    for (int i = 0; i < 2; ++i) pool.push_back(style.name());
    for (const auto* list : {&v.descriptors, &v.colors, &v.tops, &v.bottoms, &v.shoes, &v.accessories}) {
        for (const auto w : *list) {
            if (w != v.favorite) pool.push_back(w);
        }
    }
    Rng rng(derive_seed(seed, style.name(), mask_ordinal));
    return std::string(pool[rng.uniform(pool.size())]);
}

} // namespace promptaug::mock
