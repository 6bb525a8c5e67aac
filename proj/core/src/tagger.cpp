#include "promptaug/lingua.hpp"

#include "promptaug/error.hpp"
#include "promptaug/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace promptaug::lingua {

namespace {

// Determiners, pronouns, prepositions, conjunctions, auxiliaries.
constexpr std::string_view kStopwords[] = {
    "a",     "an",    "the",    "this",   "that",    "these",  "those",   "some",    "any",
    "each",  "every", "no",     "its",    "her",     "his",    "their",   "my",      "our",
    "your",  "she",   "he",     "it",     "they",    "we",     "you",     "i",       "with",
    "and",   "or",    "but",    "nor",    "of",      "in",     "on",      "at",      "to",
    "for",   "from",  "by",     "over",   "under",   "into",   "onto",    "through", "featuring",
    "above", "below", "around", "across", "along",   "paired", "while",   "as",      "is",
    "are",   "was",   "be",    "being",  "has",     "have",   "which",   "who",     "whose",
    "both",  "also",  "very",  "plus",   "than",    "then",   "so",      "if",      "up",
};

constexpr std::string_view kBuiltinNouns[] = {
    // garments and accessories
    "outfit", "ensemble", "look", "dress", "gown", "skirt", "tutu", "top", "tee", "t-shirt", "shirt", "blouse",
    "sweater", "cardigan", "hoodie", "sweatshirt", "jacket", "coat", "trench", "blazer", "vest", "pants",
    "trousers", "jeans", "shorts", "leggings", "socks", "stockings", "tights", "shoes", "boots", "sneakers",
    "heels", "sandals", "loafers", "platform", "platforms", "flats", "hat", "cap", "beret", "bag", "handbag",
    "purse", "backpack", "tote", "scarf", "belt", "bow", "ribbon", "headband", "kimono", "yukata", "obi",
    "tunic", "poncho", "overalls", "romper", "jumpsuit", "petticoat", "apron", "collar", "sleeves", "cuffs",
    "necklace", "earrings", "bracelet", "jewelry", "glasses", "sunglasses", "gloves", "camisole", "corset",
    "bodice", "frills", "ruffles", "pleats", "lace", "print", "pattern", "hair", "accessories", "layers",
    "chain", "chains", "studs", "patches", "suit", "tie", "pumps", "mules", "slip", "shawl", "wrap", "knitwear",
    // materials
    "denim", "leather", "cotton", "silk", "wool", "linen", "knit", "velvet", "chiffon", "tulle", "satin", "fur",
    "corduroy", "tweed", "mesh", "vinyl", "suede", "fabric", "material",
    // style vocabulary
    "style", "fashion", "aesthetic", "vibe", "silhouette", "harajuku", "streetwear", "gal", "lolita", "mode",
    "rock", "street", "fairy", "elegance", "charm", "details", "design", "motif", "motifs", "embroidery",
    "stripes", "florals", "color", "colors", "tones", "palette", "accents", "hem", "neckline", "waist",
};

constexpr std::string_view kBuiltinAdjectives[] = {
    // colors
    "white", "black", "red", "blue", "navy", "green", "pink", "purple", "lavender", "beige", "brown", "gray",
    "grey", "cream", "ivory", "yellow", "orange", "gold", "golden", "silver", "khaki", "olive", "pastel", "mint",
    "burgundy", "maroon", "camel", "neutral", "earthy", "muted", "dark", "light", "bright", "vibrant", "nude",
    "tan", "charcoal", "teal", "coral", "peach", "lilac", "rose", "crimson", "monochrome",
    // shape and design
    "graphic", "long", "short", "loose", "flowy", "floral", "bohemian", "chunky", "bold", "edgy", "playful",
    "urban", "delicate", "soft", "fluffy", "sleek", "minimalist", "high-waisted", "wide-leg", "knee-high",
    "ankle-length", "mini", "midi", "maxi", "sheer", "classic", "modern", "traditional", "simple", "sporty",
    "preppy", "gothic", "punk", "sweet", "romantic", "girly", "tribal", "striped", "plaid", "checkered",
    "polka-dot", "slim", "wide", "oversize", "puffy", "lacy", "frilly", "ruffled", "knitted", "denim-look",
    "cute", "elegant", "chic", "casual", "formal", "vintage", "kawaii", "feminine", "dressy", "ethnic",
    "conservative", "girlish", "kireime-casual", "natural", "retro", "stylish", "trendy", "refined", "polished",
    "cozy", "comfortable", "dainty", "whimsical", "dreamy", "glamorous", "sexy", "flirty", "youthful",
    "sophisticated", "tailored", "fitted", "cropped", "layered", "patterned", "printed", "pleated", "quilted",
    "textured", "ornate", "geometric", "metallic", "sparkly", "shiny", "matte", "sheer", "strappy", "sleeveless",
    "rebellious", "relaxed", "effortless", "timeless", "subtle", "earth-toned", "lightweight", "voluminous",
};

} // namespace

bool is_stopword(std::string_view lower) noexcept {
    return std::find(std::begin(kStopwords), std::end(kStopwords), lower) != std::end(kStopwords);
}

bool is_punctuation(std::string_view surface) noexcept {
    return !surface.empty() && std::all_of(surface.begin(), surface.end(), [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) != 0;
    });
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

Lexicon Lexicon::builtin() {
    Lexicon lex;
    for (const auto w : kBuiltinNouns) lex.set(w, Tag::Noun);
    for (const auto w : kBuiltinAdjectives) lex.set(w, Tag::Adj);
    return lex;
}

Lexicon Lexicon::parse(std::string_view content) {
    Lexicon lex;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw DataError("lexicon line " + std::to_string(line_no) + ": expected word<TAB>TAG");
        }
        lex.set(line.substr(0, tab), parse_tag(line.substr(tab + 1)));
    }
    return lex;
}

Lexicon Lexicon::load(const fs::path& path) {
    return parse(read_text(path));
}

void Lexicon::set(std::string_view word, Tag tag) {
    m_entries.insert_or_assign(to_lower(word), tag);
}

const Tag* Lexicon::find(std::string_view word) const {
    const auto it = m_entries.find(word);
    return it == m_entries.end() ? nullptr : &it->second;
}

void Lexicon::merge(const Lexicon& other) {
    for (const auto& [word, tag] : other.m_entries) {
        m_entries.insert_or_assign(word, tag);
    }
}

std::vector<std::string> Lexicon::words(Tag tag) const {
    std::vector<std::string> out;
    for (const auto& [word, t] : m_entries) {
        if (t == tag) out.push_back(word);
    }
    return out;
}

BuiltinTagger::BuiltinTagger() : m_lexicon(Lexicon::builtin()) {}

BuiltinTagger::BuiltinTagger(Lexicon lexicon) : m_lexicon(std::move(lexicon)) {}

Tag BuiltinTagger::tag_word(std::string_view surface) const {
    const auto word = to_lower(surface);
    if (word.empty() || is_punctuation(word) || is_stopword(word)) {
        return Tag::Other;
    }
    if (const auto* tag = m_lexicon.find(word)) {
        return *tag;
    }
    if (word.size() > 3 && word.ends_with("es")) {
        if (const auto* tag = m_lexicon.find(std::string_view(word).substr(0, word.size() - 2))) return *tag;
    }
    if (word.size() > 2 && word.ends_with('s')) {
        if (const auto* tag = m_lexicon.find(std::string_view(word).substr(0, word.size() - 1))) return *tag;
    }
    if (word.ends_with("ness") || word.ends_with("wear")) {
        return Tag::Noun;
    }
    if (word.size() > 3 && (word.ends_with("ed") || word.ends_with("ous") || word.ends_with("ful") ||
                            word.ends_with("ish"))) {
        return Tag::Adj;
    }
    return Tag::Other;
}

std::vector<Tag> BuiltinTagger::tag(std::span<const std::string> surfaces) const {
    std::vector<Tag> tags;
    tags.reserve(surfaces.size());
    for (const auto& s : surfaces) {
        tags.push_back(tag_word(s));
    }
    return tags;
}

std::vector<Tag> ExternalTagger::tag(std::span<const std::string> surfaces) const {
    const auto dir = fs::temp_directory_path();
    const auto stem = "promptaug-tagger-" + std::to_string(::getpid()) + "-" +
                      std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "-" +
                      std::to_string(reinterpret_cast<std::uintptr_t>(surfaces.data()));
    const auto input = dir / (stem + ".in");
    const auto errors = dir / (stem + ".err");
    {
        std::ofstream out(input, std::ios::binary);
        for (const auto& s : surfaces) out << s << '\n';
    }
    const auto command = "( " + m_command + " ) < '" + input.string() + "' 2> '" + errors.string() + "'";
    std::string output;
    int status = -1;
    if (FILE* pipe = ::popen(command.c_str(), "r")) {
        std::array<char, 4096> buffer{};
        std::size_t n = 0;
        while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
            output.append(buffer.data(), n);
        }
        status = ::pclose(pipe);
    }
    std::string diagnostics;
    {
        std::ifstream err(errors, std::ios::binary);
        diagnostics.assign(std::istreambuf_iterator<char>(err), std::istreambuf_iterator<char>());
    }
    std::error_code ec;
    fs::remove(input, ec);
    fs::remove(errors, ec);

    const auto fail = [&](const std::string& what) {
        throw DataError("external tagger '" + m_command + "' " + what +
                        (diagnostics.empty() ? std::string() : ": " + diagnostics));
    };
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        fail("failed with status " + std::to_string(status == -1 ? -1 : WEXITSTATUS(status)));
    }
    std::vector<Tag> tags;
    std::istringstream lines(output);
    std::string line;
    std::size_t i = 0;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) fail("printed malformed line '" + line + "'");
        if (i >= surfaces.size() || line.substr(0, tab) != surfaces[i]) {
            fail("returned tokens out of order at line " + std::to_string(i + 1));
        }
        try {
            tags.push_back(parse_tag(line.substr(tab + 1)));
        } catch (const DataError& e) {
            fail(e.what());
        }
        ++i;
    }
    if (tags.size() != surfaces.size()) {
        fail("returned " + std::to_string(tags.size()) + " tags for " + std::to_string(surfaces.size()) + " tokens");
    }
    return tags;
}

} // namespace promptaug::lingua
