#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "eqalign/dataset.hpp"
#include "eqalign/eval.hpp"
#include "eqalign/gateway.hpp"
#include "json.hpp"

namespace eqalign {

struct RecommenderSpec {
    std::string name = "oracle";  // oracle, random, preset, text2beosonic, static_icl, rag, rag_qa
    std::size_t n_samples = 11;
    std::size_t k = 5;                // retrieved examples (rag, rag_qa)
    std::size_t static_examples = 5;  // leading train entries used by static_icl
    double sigma = 2.0;               // random baseline spread
    StrategyConfig strategy;
};

/// Everything an `eval` run depends on. Relative input paths are resolved
/// against the directory of the config file.
struct RunConfig {
    std::filesystem::path dataset;
    SplitSpec split;
    MetricConfig metric;
    RecommenderSpec recommender;
    GatewayConfig gateway;
    std::uint64_t seed = 0;
    std::string run_name;  // defaults to the recommender name
    std::filesystem::path out_dir;
    std::filesystem::path source;  // config file, if loaded from one

    /// Structural checks; environment-dependent gateway checks happen when the run starts.
    void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

struct RunOutput {
    EvalRun run;
    nlohmann::json manifest;
};

/// Load + split the dataset, build the recommender, evaluate on the test split.
RunOutput execute_run(const RunConfig& cfg);

/// distances.csv and run.json (the manifest) in out_dir.
void write_run(const RunOutput& out, const std::filesystem::path& out_dir);

}  // namespace eqalign
