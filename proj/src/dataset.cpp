#include "eqalign/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include "json.hpp"
#include <numeric>
#include <set>
#include <unordered_set>

#include "eqalign/error.hpp"
#include "eqalign/io.hpp"
#include "eqalign/rng.hpp"

namespace eqalign {

using nlohmann::json;

namespace {

struct AudioName {
    AudioType::Kind kind;
    std::string_view name;
};

constexpr std::array<AudioName, 6> kAudioNames{{
    {AudioType::Kind::Music1, "music1"},
    {AudioType::Kind::Music2, "music2"},
    {AudioType::Kind::Movies1, "movies1"},
    {AudioType::Kind::Movies2, "movies2"},
    {AudioType::Kind::NatureNoise, "nature_noise"},
    {AudioType::Kind::Audiobooks, "audiobooks"},
}};

std::size_t line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

AudioType AudioType::parse(std::string_view s) {
    for (const auto& a : kAudioNames) {
        if (s == a.name) return {a.kind, {}};
    }
    constexpr std::string_view prefix = "other:";
    if (s.starts_with(prefix) && s.size() > prefix.size()) {
        return {Kind::Other, std::string(s.substr(prefix.size()))};
    }
    throw validation_error(fmt::format("unknown audio_type \"{}\"", s));
}

std::string AudioType::to_string() const {
    for (const auto& a : kAudioNames) {
        if (a.kind == kind) return std::string(a.name);
    }
    return "other:" + other_name;
}

void Dataset::validate() const {
    if (entries.empty()) throw validation_error("empty dataset");
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        const auto where = fmt::format("entry {} (id \"{}\")", i, e.id);
        if (e.id.empty()) throw validation_error(fmt::format("entry {}: empty id", i));
        if (!ids.insert(e.id).second) throw validation_error(fmt::format("duplicate id \"{}\"", e.id));
        if (e.prompt.empty()) throw validation_error(where + ": empty prompt");
        if (e.responses.size() < 2) throw validation_error(where + ": fewer than 2 responses");
        for (const auto& p : e.responses) {
            if (!in_square(p.x, p.y)) {
                throw validation_error(fmt::format("{}: coordinate out of range: ({}, {})", where, p.x, p.y));
            }
        }
    }
}

Dataset parse_dataset(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw validation_error(fmt::format("parse error at line {}: {}", line_of(text, e.byte), e.what()));
    }
    if (!root.is_object()) throw validation_error("dataset root must be a JSON object");

    Dataset ds;
    if (auto it = root.find("metadata"); it != root.end()) {
        if (!it->is_object()) throw validation_error("metadata must be an object");
        for (const auto& [k, v] : it->items()) {
            ds.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    auto entries = root.find("entries");
    if (entries == root.end() || !entries->is_array()) throw validation_error("missing \"entries\" array");

    ds.entries.reserve(entries->size());
    std::size_t idx = 0;
    for (const auto& je : *entries) {
        const auto where = fmt::format("entry {}", idx++);
        try {
            PromptEntry e;
            e.id = je.at("id").get<std::string>();
            e.prompt = je.at("prompt").get<std::string>();
            e.audio_type = AudioType::parse(je.at("audio_type").get<std::string>());
            const auto& resp = je.at("responses");
            if (!resp.is_array()) throw validation_error("responses must be an array");
            for (const auto& p : resp) {
                if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                    throw validation_error("each response must be [x, y]");
                }
                e.responses.push_back(make_coord(p[0].get<double>(), p[1].get<double>()));
            }
            ds.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw validation_error(fmt::format("{}: {}", where, ex.what()));
        } catch (const Error& ex) {
            throw validation_error(fmt::format("{}: {}", where, ex.what()));
        }
    }
    ds.validate();
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        throw validation_error(e.what());
    }
    return parse_dataset(text);
}

std::string serialize_dataset(const Dataset& ds) {
    json root;
    root["metadata"] = json::object();
    for (const auto& [k, v] : ds.metadata) root["metadata"][k] = v;
    root["entries"] = json::array();
    for (const auto& e : ds.entries) {
        json resp = json::array();
        for (const auto& p : e.responses) resp.push_back({p.x, p.y});
        root["entries"].push_back({{"id", e.id},
                                   {"prompt", e.prompt},
                                   {"audio_type", e.audio_type.to_string()},
                                   {"responses", std::move(resp)}});
    }
    return root.dump(1) + "\n";
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    io::write_atomic(path, serialize_dataset(ds));
}

std::tuple<Dataset, Dataset, Dataset> split_dataset(const Dataset& ds, const SplitSpec& spec) {
    const std::size_t need = spec.train_n + spec.val_n + spec.test_n;
    if (need > ds.entries.size()) {
        throw validation_error(
            fmt::format("split sizes {}+{}+{} exceed dataset size {}", spec.train_n, spec.val_n, spec.test_n, ds.entries.size()));
    }
    std::vector<std::size_t> order(ds.entries.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }

    auto take = [&](std::size_t from, std::size_t n, const char* name) {
        Dataset out;
        out.metadata = ds.metadata;
        out.metadata["split"] = name;
        out.metadata["split_seed"] = std::to_string(spec.seed);
        for (std::size_t i = from; i < from + n; ++i) out.entries.push_back(ds.entries[order[i]]);
        return out;
    };
    return {take(0, spec.train_n, "train"), take(spec.train_n, spec.val_n, "val"),
            take(spec.train_n + spec.val_n, spec.test_n, "test")};
}

double generalized_variance(std::span<const BeoCoord> points) {
    const std::size_t n = points.size();
    if (n < 2) throw validation_error("generalized variance needs at least 2 points");
    double mx = 0, my = 0;
    for (const auto& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& p : points) {
        const double dx = p.x - mx, dy = p.y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double d = static_cast<double>(n - 1);
    const double det = (sxx / d) * (syy / d) - (sxy / d) * (sxy / d);
    return std::max(det, 0.0);
}

namespace {

// Decode one UTF-8 code point starting at s[i]; advances i. Malformed bytes decode as themselves.
char32_t next_cp(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]) & 0x3F; };
    if (b0 < 0x80) {
        i += 1;
        return b0;
    }
    if ((b0 >> 5) == 0x6 && i + 1 < s.size()) {
        char32_t c = ((b0 & 0x1F) << 6) | cont(1);
        i += 2;
        return c;
    }
    if ((b0 >> 4) == 0xE && i + 2 < s.size()) {
        char32_t c = ((b0 & 0x0F) << 12) | (cont(1) << 6) | cont(2);
        i += 3;
        return c;
    }
    if ((b0 >> 3) == 0x1E && i + 3 < s.size()) {
        char32_t c = ((b0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
        i += 4;
        return c;
    }
    i += 1;
    return b0;
}

bool is_space(char32_t c) {
    if (c == ' ' || (c >= 0x09 && c <= 0x0D) || c == 0x1C || c == 0x1D || c == 0x1E || c == 0x1F) return true;
    switch (c) {
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_punct(char32_t c) {
    if (c < 0x80) return std::ispunct(static_cast<int>(c)) != 0;
    // general punctuation block plus the Latin-1 marks that show up in typed prompts
    return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || c == 0xA1 || c == 0xAB ||
           c == 0xBB || c == 0xBF || c == 0xB7;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    // (byte offset, byte length, code point) per code point
    struct Cp {
        std::size_t off, len;
        char32_t c;
    };
    std::vector<std::string> tokens;
    std::vector<Cp> word;
    auto flush = [&] {
        std::size_t b = 0, e = word.size();
        while (b < e && is_punct(word[b].c)) ++b;
        while (e > b && is_punct(word[e - 1].c)) --e;
        if (b < e) {
            std::string tok;
            for (std::size_t k = b; k < e; ++k) {
                if (word[k].c < 0x80) {
                    tok.push_back(static_cast<char>(std::tolower(static_cast<int>(word[k].c))));
                } else {
                    tok.append(text.substr(word[k].off, word[k].len));
                }
            }
            tokens.push_back(std::move(tok));
        }
        word.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const char32_t c = next_cp(text, i);
        if (is_space(c)) {
            flush();
        } else {
            word.push_back({start, i - start, c});
        }
    }
    flush();
    return tokens;
}

PromptStats prompt_stats(const Dataset& ds) {
    ds.validate();
    PromptStats st;
    st.total_prompts = ds.entries.size();
    std::set<std::string> vocab;
    std::size_t words = 0;
    double gv_sum = 0.0;
    st.gv_min = std::numeric_limits<double>::infinity();
    st.gv_max = -std::numeric_limits<double>::infinity();
    for (const auto& e : ds.entries) {
        st.total_annotations += e.responses.size();
        auto toks = tokenize(e.prompt);
        words += toks.size();
        vocab.insert(toks.begin(), toks.end());
        const double gv = generalized_variance(e.responses);
        gv_sum += gv;
        st.gv_min = std::min(st.gv_min, gv);
        st.gv_max = std::max(st.gv_max, gv);
    }
    st.vocab_size = vocab.size();
    st.avg_words_per_prompt = static_cast<double>(words) / static_cast<double>(st.total_prompts);
    st.gv_avg = gv_sum / static_cast<double>(st.total_prompts);
    return st;
}

}  // namespace eqalign
