#include "eqalign/parse.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <optional>
#include <regex>
#include <string>

#include "eqalign/error.hpp"
#include "json.hpp"

namespace eqalign {

namespace {

using nlohmann::json;

std::string normalise(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        // U+2212 MINUS SIGN and U+2013 EN DASH show up in model output as minus signs.
        if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
            static_cast<unsigned char>(text[i + 1]) == 0x88 && static_cast<unsigned char>(text[i + 2]) == 0x92) {
            out.push_back('-');
            i += 2;
        } else if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
                   static_cast<unsigned char>(text[i + 1]) == 0x80 && static_cast<unsigned char>(text[i + 2]) == 0x93) {
            out.push_back('-');
            i += 2;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

double to_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc::result_out_of_range) throw parse_error(fmt::format("number out of range: {}", s));
    if (ec != std::errc() || ptr != s.data() + s.size()) throw parse_error(fmt::format("not a number: {}", s));
    return v;
}

BeoCoord checked(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw parse_error("non-finite coordinate in model output");
    return {x, y};
}

std::optional<BeoCoord> as_pair(const json& j) {
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return checked(j[0].get<double>(), j[1].get<double>());
    }
    if (j.is_object() && j.size() == 2 && j.contains("x") && j.contains("y") && j["x"].is_number() &&
        j["y"].is_number()) {
        return checked(j["x"].get<double>(), j["y"].get<double>());
    }
    return std::nullopt;
}

struct JsonScan {
    std::vector<BeoCoord> pairs;
    bool found_structure = false;
};

// Walk top-level [...] / {...} spans, parse each as JSON and keep coordinate shapes.
JsonScan scan_json(const std::string& s) {
    JsonScan out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char open = s[i];
        if (open != '[' && open != '{') {
            ++i;
            continue;
        }
        int depth = 0;
        std::size_t end = std::string::npos;
        for (std::size_t k = i; k < s.size(); ++k) {
            if (s[k] == '[' || s[k] == '{') ++depth;
            if (s[k] == ']' || s[k] == '}') {
                if (--depth == 0) {
                    end = k;
                    break;
                }
            }
        }
        if (end == std::string::npos) {
            throw parse_error("unterminated array in model output");
        }
        const json j = json::parse(s.begin() + static_cast<std::ptrdiff_t>(i),
                                   s.begin() + static_cast<std::ptrdiff_t>(end + 1), nullptr, false);
        if (!j.is_discarded()) {
            if (auto p = as_pair(j)) {
                out.pairs.push_back(*p);
                out.found_structure = true;
            } else if (j.is_array() && !j.empty()) {
                out.found_structure = true;
                for (const auto& e : j) {
                    auto q = as_pair(e);
                    if (!q) throw parse_error(fmt::format("array element is not an [x, y] pair: {}", e.dump()));
                    out.pairs.push_back(*q);
                }
            } else if (j.is_array() || j.is_object()) {
                out.found_structure = true;
                throw parse_error(fmt::format("unexpected JSON shape: {}", j.dump()));
            }
        }
        i = end + 1;
    }
    return out;
}

const std::string kNum = R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)";

std::vector<BeoCoord> regex_pairs(const std::string& s, const std::regex& re) {
    std::vector<BeoCoord> out;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        out.push_back(checked(to_number((*it)[1].str()), to_number((*it)[2].str())));
    }
    return out;
}

std::vector<BeoCoord> pattern_pairs(const std::string& s) {
    static const std::regex assign(R"((?:^|[^A-Za-z])x\s*[=:]\s*()" + kNum + R"()\s*[,;]?\s*(?:and\s+)?y\s*[=:]\s*()" +
                                       kNum + ")",
                                   std::regex::icase);
    static const std::regex paren(R"(\(\s*()" + kNum + R"()\s*[,;]\s*()" + kNum + R"()\s*\))");
    static const std::regex loose("(" + kNum + R"()\s*,\s*()" + kNum + ")");
    for (const auto* re : {&assign, &paren, &loose}) {
        auto pairs = regex_pairs(s, *re);
        if (!pairs.empty()) return pairs;
    }
    return {};
}

}  // namespace

std::vector<BeoCoord> parse_coords(std::string_view text, std::size_t expected_count) {
    if (expected_count == 0) throw validation_error("expected_count must be >= 1");
    const std::string s = normalise(text);
    auto scan = scan_json(s);
    std::vector<BeoCoord> pairs = scan.found_structure ? std::move(scan.pairs) : pattern_pairs(s);
    if (pairs.empty()) throw parse_error("no coordinate pairs found in model output");
    if (pairs.size() != expected_count) {
        throw parse_error(fmt::format("expected {} coordinate pair(s), found {}", expected_count, pairs.size()));
    }
    std::vector<BeoCoord> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(clamp(p.x, p.y));
    return out;
}

}  // namespace eqalign
