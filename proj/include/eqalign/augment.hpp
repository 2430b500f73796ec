#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqalign/dataset.hpp"

namespace eqalign {

/// Lower-cased word -> replacement words.
using SynonymDict = std::map<std::string, std::vector<std::string>>;

/// Throws if a word maps to itself, has no synonyms, or is not lower-case.
void validate_synonyms(const SynonymDict& dict);
SynonymDict parse_synonyms(std::string_view json_text);
SynonymDict load_synonyms(const std::filesystem::path& path);

struct AugmentConfig {
    double target_factor = 50.0;
    double max_blur_db = 0.3;
    std::uint64_t seed = 7;

    void validate() const;
};

/// Each response moved by Uniform(-max, max) per coordinate, then clamped.
ResponseSet blur_labels(std::span<const BeoCoord> labels, double max_blur_db, std::uint64_t seed);

/// Original entries plus up to ceil(target_factor) synonym variants each.
/// Variants are enumerated by number of substituted words (one word first);
/// when a level overflows the remaining quota it is sampled without
/// replacement. Only variant labels are blurred.
Dataset augment_prompts(const Dataset& train, const SynonymDict& dict, const AugmentConfig& cfg);

/// All variant prompts in enumeration order, capped at `limit` (for inspection and tests).
std::vector<std::string> enumerate_variants(std::string_view prompt, const SynonymDict& dict, std::size_t limit);

}  // namespace eqalign
