#include "eqalign/augment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "eqalign/error.hpp"
#include "eqalign/io.hpp"
#include "eqalign/rng.hpp"
#include "json.hpp"

namespace eqalign {

namespace {

struct Piece {
    std::string text;    // original whitespace-free chunk
    std::size_t core_begin = 0, core_len = 0;
    std::string key;     // lower-cased core
};

// Split on ASCII whitespace, remembering the separators so untouched text round-trips.
struct Layout {
    std::vector<std::string> separators;  // separators[i] precedes pieces[i]; one extra trailing
    std::vector<Piece> pieces;
};

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c == '-' || c >= 0x80; }

Layout layout(std::string_view s) {
    Layout out;
    std::size_t i = 0;
    while (true) {
        std::size_t j = i;
        while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        out.separators.emplace_back(s.substr(i, j - i));
        if (j == s.size()) break;
        std::size_t k = j;
        while (k < s.size() && !std::isspace(static_cast<unsigned char>(s[k]))) ++k;
        Piece p;
        p.text = std::string(s.substr(j, k - j));
        std::size_t b = 0, e = p.text.size();
        while (b < e && !is_word_char(static_cast<unsigned char>(p.text[b]))) ++b;
        while (e > b && !is_word_char(static_cast<unsigned char>(p.text[e - 1]))) --e;
        // trailing apostrophes/hyphens are punctuation too
        while (e > b && (p.text[e - 1] == '\'' || p.text[e - 1] == '-')) --e;
        p.core_begin = b;
        p.core_len = e - b;
        for (std::size_t c = b; c < e; ++c) p.key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(p.text[c]))));
        out.pieces.push_back(std::move(p));
        i = k;
    }
    return out;
}

std::string substitute(const Piece& p, const std::string& word) {
    std::string w = word;
    if (p.core_len > 0 && std::isupper(static_cast<unsigned char>(p.text[p.core_begin])) && !w.empty()) {
        w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    }
    return p.text.substr(0, p.core_begin) + w + p.text.substr(p.core_begin + p.core_len);
}

struct Hit {
    std::size_t piece;
    const std::vector<std::string>* options;
};

struct Combo {
    std::vector<std::size_t> positions;  // indices into hits
    std::vector<std::size_t> choices;    // synonym index per position
};

std::string render(const Layout& L, const std::vector<Hit>& hits, const Combo& c) {
    std::vector<const std::string*> repl(L.pieces.size(), nullptr);
    for (std::size_t t = 0; t < c.positions.size(); ++t) {
        const Hit& h = hits[c.positions[t]];
        repl[h.piece] = &(*h.options)[c.choices[t]];
    }
    std::string out;
    for (std::size_t i = 0; i < L.pieces.size(); ++i) {
        out += L.separators[i];
        out += repl[i] ? substitute(L.pieces[i], *repl[i]) : L.pieces[i].text;
    }
    out += L.separators.back();
    return out;
}

// Subsets of size k in lexicographic order, each with its number of synonym choices.
void subsets(std::size_t m, std::size_t k, std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> cur(k);
    for (std::size_t i = 0; i < k; ++i) cur[i] = i;
    while (true) {
        out.push_back(cur);
        std::size_t i = k;
        while (i > 0 && cur[i - 1] == m - k + i - 1) --i;
        if (i == 0) return;
        ++cur[i - 1];
        for (std::size_t j = i; j < k; ++j) cur[j] = cur[j - 1] + 1;
    }
}

constexpr std::uint64_t kCountCap = std::uint64_t{1} << 62;

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > kCountCap / a) return kCountCap;
    return a * b;
}

Combo decode(const std::vector<Hit>& hits, const std::vector<std::size_t>& subset, std::uint64_t idx) {
    Combo c;
    c.positions = subset;
    c.choices.resize(subset.size());
    for (std::size_t t = subset.size(); t-- > 0;) {
        const std::uint64_t radix = hits[subset[t]].options->size();
        c.choices[t] = static_cast<std::size_t>(idx % radix);
        idx /= radix;
    }
    return c;
}

// Breadth-first by substitution count; the level that overflows `quota` is
// sampled without replacement (Floyd) and emitted in enumeration order.
std::vector<std::string> variants(const Layout& L, const std::vector<Hit>& hits, std::size_t quota, Rng* rng) {
    std::vector<std::string> out;
    const std::size_t m = hits.size();
    for (std::size_t k = 1; k <= m && out.size() < quota; ++k) {
        std::vector<std::vector<std::size_t>> subs;
        subsets(m, k, subs);
        std::vector<std::uint64_t> start(subs.size() + 1, 0);
        for (std::size_t s = 0; s < subs.size(); ++s) {
            std::uint64_t count = 1;
            for (std::size_t pos : subs[s]) count = sat_mul(count, hits[pos].options->size());
            start[s + 1] = std::min(kCountCap, start[s] + count);
        }
        const std::uint64_t level = start.back();
        const std::uint64_t want = quota - out.size();
        std::vector<std::uint64_t> picks;
        if (level <= want || rng == nullptr) {
            const std::uint64_t n = std::min<std::uint64_t>(level, want);
            for (std::uint64_t i = 0; i < n; ++i) picks.push_back(i);
        } else {
            std::set<std::uint64_t> chosen;
            for (std::uint64_t j = level - want; j < level; ++j) {
                const std::uint64_t t = rng->below(j + 1);
                chosen.insert(chosen.contains(t) ? j : t);
            }
            picks.assign(chosen.begin(), chosen.end());
        }
        for (std::uint64_t idx : picks) {
            const auto s = static_cast<std::size_t>(std::upper_bound(start.begin(), start.end(), idx) - start.begin() - 1);
            out.push_back(render(L, hits, decode(hits, subs[s], idx - start[s])));
        }
    }
    return out;
}

std::vector<Hit> find_hits(const Layout& L, const SynonymDict& dict) {
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < L.pieces.size(); ++i) {
        if (L.pieces[i].core_len == 0) continue;
        const auto it = dict.find(L.pieces[i].key);
        if (it != dict.end()) hits.push_back({i, &it->second});
    }
    return hits;
}

}  // namespace

void validate_synonyms(const SynonymDict& dict) {
    for (const auto& [word, syns] : dict) {
        if (word.empty()) throw validation_error("synonym dictionary has an empty key");
        for (char c : word) {
            if (c >= 'A' && c <= 'Z') throw validation_error(fmt::format("synonym key '{}' is not lower-case", word));
        }
        if (syns.empty()) throw validation_error(fmt::format("synonym list for '{}' is empty", word));
        for (const auto& s : syns) {
            if (s.empty()) throw validation_error(fmt::format("empty synonym for '{}'", word));
            if (s == word) throw validation_error(fmt::format("'{}' lists itself as a synonym", word));
        }
    }
}

SynonymDict parse_synonyms(std::string_view json_text) {
    const auto j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw validation_error("synonym dictionary must be a JSON object");
    SynonymDict dict;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_array()) throw validation_error(fmt::format("synonyms for '{}' must be an array", k));
        std::vector<std::string> syns;
        for (const auto& s : v) {
            if (!s.is_string()) throw validation_error(fmt::format("synonyms for '{}' must be strings", k));
            auto str = s.get<std::string>();
            if (std::find(syns.begin(), syns.end(), str) == syns.end()) syns.push_back(std::move(str));
        }
        dict.emplace(k, std::move(syns));
    }
    validate_synonyms(dict);
    return dict;
}

SynonymDict load_synonyms(const std::filesystem::path& path) { return parse_synonyms(io::read_file(path)); }

void AugmentConfig::validate() const {
    if (!(target_factor >= 1.0) || !std::isfinite(target_factor)) {
        throw validation_error(fmt::format("target_factor must be >= 1, got {}", target_factor));
    }
    if (!(max_blur_db >= 0.0) || !(max_blur_db < kBound)) {
        throw validation_error(fmt::format("max_blur_db must be in [0, 6), got {}", max_blur_db));
    }
}

ResponseSet blur_labels(std::span<const BeoCoord> labels, double max_blur_db, std::uint64_t seed) {
    if (!(max_blur_db >= 0.0) || !std::isfinite(max_blur_db)) throw validation_error("max_blur_db must be >= 0");
    Rng rng(seed);
    ResponseSet out;
    out.reserve(labels.size());
    for (const auto& p : labels) {
        const double dx = rng.uniform(-max_blur_db, max_blur_db);
        const double dy = rng.uniform(-max_blur_db, max_blur_db);
        out.push_back(clamp(p.x + dx, p.y + dy));
    }
    return out;
}

std::vector<std::string> enumerate_variants(std::string_view prompt, const SynonymDict& dict, std::size_t limit) {
    const Layout L = layout(prompt);
    return variants(L, find_hits(L, dict), limit, nullptr);
}

Dataset augment_prompts(const Dataset& train, const SynonymDict& dict, const AugmentConfig& cfg) {
    cfg.validate();
    validate_synonyms(dict);
    if (train.entries.empty()) throw validation_error("cannot augment an empty dataset");
    const auto quota = static_cast<std::size_t>(std::ceil(cfg.target_factor));
    Dataset out;
    out.metadata = train.metadata;
    out.metadata["augment_factor"] = io::format_double(cfg.target_factor);
    out.metadata["augment_max_blur_db"] = io::format_double(cfg.max_blur_db);
    out.metadata["augment_seed"] = std::to_string(cfg.seed);
    std::set<std::string> ids;
    for (const auto& e : train.entries) ids.insert(e.id);
    for (const auto& e : train.entries) {
        out.entries.push_back(e);
        const std::uint64_t entry_seed = derive_seed(cfg.seed, fnv1a(e.id));
        Rng rng(entry_seed);
        const Layout L = layout(e.prompt);
        const auto texts = variants(L, find_hits(L, dict), quota, &rng);
        for (std::size_t v = 0; v < texts.size(); ++v) {
            PromptEntry var;
            var.id = fmt::format("{}~aug{:03}", e.id, v + 1);
            if (!ids.insert(var.id).second) throw validation_error(fmt::format("augmented id '{}' collides", var.id));
            var.prompt = texts[v];
            var.audio_type = e.audio_type;
            var.responses = blur_labels(e.responses, cfg.max_blur_db, derive_seed(entry_seed, v + 1));
            out.entries.push_back(std::move(var));
        }
    }
    return out;
}

}  // namespace eqalign
