#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "eqalign/beosonic.hpp"

namespace eqalign {

/// Audio material the prompt was labelled against.
struct AudioType {
    enum class Kind { Music1, Music2, Movies1, Movies2, NatureNoise, Audiobooks, Other };

    Kind kind = Kind::Other;
    std::string other_name;  // only for Kind::Other

    /// Wire form: "music1", ..., "audiobooks", "other:<name>".
    static AudioType parse(std::string_view s);
    std::string to_string() const;

    friend bool operator==(const AudioType&, const AudioType&) = default;
};

/// Listener settings for one prompt, one point per annotator.
using ResponseSet = std::vector<BeoCoord>;

struct PromptEntry {
    std::string id;
    std::string prompt;
    AudioType audio_type;
    ResponseSet responses;
};

struct Dataset {
    std::vector<PromptEntry> entries;
    std::map<std::string, std::string> metadata;

    /// Throws on any invariant violation (empty, duplicate id, short/out-of-range responses).
    void validate() const;
};

struct SplitSpec {
    std::size_t train_n = 60;
    std::size_t val_n = 30;
    std::size_t test_n = 30;
    std::uint64_t seed = 7;
};

struct PromptStats {
    std::size_t total_prompts = 0;
    std::size_t total_annotations = 0;
    std::size_t vocab_size = 0;
    double avg_words_per_prompt = 0.0;
    double gv_avg = 0.0;
    double gv_min = 0.0;
    double gv_max = 0.0;
};

Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view json_text);
std::string serialize_dataset(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

/// Seeded Fisher-Yates shuffle followed by prefix slicing into train/val/test.
std::tuple<Dataset, Dataset, Dataset> split_dataset(const Dataset& ds, const SplitSpec& spec);

/// Determinant of the 2x2 sample covariance (n-1 denominator), clamped at 0.
double generalized_variance(std::span<const BeoCoord> points);

/// Lower-case, split on whitespace, strip leading/trailing punctuation; empty tokens dropped.
std::vector<std::string> tokenize(std::string_view text);

PromptStats prompt_stats(const Dataset& ds);

}  // namespace eqalign
