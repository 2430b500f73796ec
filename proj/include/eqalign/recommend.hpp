#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eqalign/beosonic.hpp"
#include "eqalign/dataset.hpp"
#include "eqalign/gateway.hpp"

namespace eqalign {

/// Anything that turns a prompt into n coordinate samples. Outputs are always
/// exactly n_samples points inside the square.
class Recommender {
public:
    virtual ~Recommender() = default;
    virtual std::string name() const = 0;
    virtual std::vector<BeoCoord> recommend(std::string_view prompt, std::size_t n_samples, std::uint64_t seed) = 0;
};

// ---------------------------------------------------------------------------
// Baselines

/// Draws a mean uniformly over the square, then n isotropic normal samples
/// around it (clamped).
std::vector<BeoCoord> random_gaussian_baseline(std::size_t n_samples, std::uint64_t seed, double sigma = 2.0);
std::unique_ptr<Recommender> make_random_gaussian(double sigma = 2.0);

/// Mean of every response in the set.
BeoCoord response_centroid(const Dataset& ds);
/// Always answers with the train centroid.
std::unique_ptr<Recommender> static_preset_baseline(const Dataset& train);

/// Looks the prompt up in ds and returns its recorded responses (resampled
/// with replacement when n_samples differs from the stored count).
std::unique_ptr<Recommender> make_oracle_replay(const Dataset& ds);

// ---------------------------------------------------------------------------
// Retrieval

using Embedder = std::function<std::vector<std::vector<double>>(const std::vector<std::string>&)>;
Embedder embedder_of(Gateway& gw);

struct RetrievalItem {
    std::string prompt;
    ResponseSet responses;
    std::vector<double> embedding;  // unit norm
};

struct RetrievalIndex {
    std::vector<RetrievalItem> items;
    std::size_t dim() const { return items.empty() ? 0 : items.front().embedding.size(); }
};

using Example = std::pair<std::string, ResponseSet>;

RetrievalIndex build_index(const Dataset& train, const Embedder& embed);
/// Top-k items by dot product with the query embedding; ties keep insertion order.
std::vector<Example> retrieve(const RetrievalIndex& index, std::string_view prompt, std::size_t k, const Embedder& embed);
std::vector<std::size_t> rank_by_vector(const RetrievalIndex& index, std::span<const double> query, std::size_t k);

// ---------------------------------------------------------------------------
// Model-backed strategies

struct ExpertMapping {
    std::vector<std::pair<std::string, BeoCoord>> entries;

    void validate() const;
    /// "warm" -> [0, -6] plus a handful of illustrative descriptors.
    static ExpertMapping builtin();
};

struct StrategyConfig {
    std::string model = "gpt-4o-mini";
    double temperature = 1.0;
    std::size_t max_tokens = 256;
    /// Corrective re-prompts allowed per call after an unparseable answer.
    std::size_t retries = 3;
    /// Length of the prediction array requested by rag_qa.
    std::size_t qa_predictions = 11;
};

std::vector<BeoCoord> text2beosonic(std::string_view prompt, const ExpertMapping& mapping, Gateway& gw,
                                    std::size_t n_samples, std::uint64_t seed, const StrategyConfig& cfg = {});
std::vector<BeoCoord> static_icl(std::string_view prompt, std::span<const Example> examples, Gateway& gw,
                                 std::size_t n_samples, std::uint64_t seed, const StrategyConfig& cfg = {});
std::vector<BeoCoord> rag(std::string_view prompt, const RetrievalIndex& index, std::size_t k, Gateway& gw,
                          std::size_t n_samples, std::uint64_t seed, const StrategyConfig& cfg = {});
std::vector<BeoCoord> rag_qa(std::string_view prompt, const RetrievalIndex& index, std::size_t k, Gateway& gw,
                             std::size_t n_samples, std::uint64_t seed, const StrategyConfig& cfg = {});

/// Rendered system prompts, exposed so tests can inspect exactly what is sent.
std::string text2beosonic_system(const ExpertMapping& mapping);
std::string examples_block(std::span<const Example> examples);

std::unique_ptr<Recommender> make_text2beosonic(ExpertMapping mapping, Gateway& gw, StrategyConfig cfg = {});
std::unique_ptr<Recommender> make_static_icl(std::vector<Example> examples, Gateway& gw, StrategyConfig cfg = {});
std::unique_ptr<Recommender> make_rag(RetrievalIndex index, std::size_t k, Gateway& gw, StrategyConfig cfg = {});
std::unique_ptr<Recommender> make_rag_qa(RetrievalIndex index, std::size_t k, Gateway& gw, StrategyConfig cfg = {});

/// Seed of the i-th model call for a prompt evaluation seeded with `seed`.
std::uint64_t call_seed(std::uint64_t seed, std::size_t i);

}  // namespace eqalign
