#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eqalign/dataset.hpp"
#include "eqalign/density.hpp"
#include "eqalign/recommend.hpp"
#include "eqalign/stats.hpp"
#include "eqalign/transport.hpp"

namespace eqalign {

enum class Metric { W1, ReflectiveW1, Sinkhorn, SlicedW1 };

/// Wire names: "w1", "reflective-w1", "sinkhorn", "sliced-w1".
Metric parse_metric(const std::string& s);
std::string to_string(Metric m);

struct MetricConfig {
    Metric metric = Metric::W1;
    /// Reflective-W1 density settings. The floor keeps point masses such as a
    /// constant preset (zero spread, so no Scott bandwidth) usable.
    KdeConfig kde = [] {
        KdeConfig k;
        k.min_bandwidth = 0.5;
        return k;
    }();
    SinkhornConfig sinkhorn;
    std::size_t projections = 500;
    std::uint64_t projection_seed = 0;

    void validate() const;
};

/// Distance between two uniform point sets under the configured metric.
double metric_distance(const MetricConfig& cfg, std::span<const BeoCoord> predicted, std::span<const BeoCoord> truth);

struct PromptResult {
    std::string id;
    double distance = 0.0;
    std::string error;  // empty on success
    bool ok() const { return error.empty(); }
};

struct EvalRun {
    std::string name;  // label in reports
    std::string recommender;
    Metric metric = Metric::W1;
    std::size_t n_samples = 11;
    std::uint64_t seed = 0;
    std::vector<PromptResult> per_prompt;

    std::size_t error_count() const;
};

struct EvalOptions {
    std::size_t n_samples = 11;
    std::uint64_t seed = 0;
    /// The run fails when more than this fraction of prompts error.
    double max_error_fraction = 0.2;
};

/// Seed handed to the recommender for one test prompt.
std::uint64_t prompt_seed(std::uint64_t run_seed, const std::string& prompt_id);

/// Prompts are processed in parallel; each gets its own derived seed so the
/// result does not depend on scheduling.
EvalRun evaluate(Recommender& rec, const Dataset& test, const MetricConfig& metric, const EvalOptions& opts);

struct Bracket {
    std::size_t a = 0, b = 0;  // run indices, a < b
    double p = 1.0;
    double level = 0.05;       // strictest level met: 0.01 or 0.05
};

struct TestReport {
    std::vector<std::string> names;
    std::vector<std::string> prompt_ids;  // prompts used (successful in every run)
    double kw_h = 0.0;
    double kw_p = 1.0;
    std::vector<std::vector<double>> dunn_p;  // Bonferroni-adjusted, NaN diagonal
    std::vector<Bracket> brackets;
};

/// Kruskal-Wallis across the runs' distance vectors plus Dunn-Bonferroni for
/// every pair. Runs must cover the same prompt ids.
TestReport compare(const std::vector<EvalRun>& runs, std::span<const double> alpha_levels = {});

// ---------------------------------------------------------------------------
// Files

/// `run,prompt_id,distance` rows (errored prompts are written with an empty distance).
std::string distances_csv(const std::vector<EvalRun>& runs);
std::string summary_csv(const std::vector<EvalRun>& runs, const TestReport& report);
std::string tests_csv(const TestReport& report);
std::string boxplot_svg(const std::vector<EvalRun>& runs, const TestReport& report);

/// Writes distances.csv, summary.csv, tests.csv and boxplot.svg atomically.
void emit_report(const TestReport& report, const std::vector<EvalRun>& runs, const std::filesystem::path& out_dir);

/// Reads back a distances.csv written for a single run.
EvalRun read_run_distances(const std::filesystem::path& csv_path);

}  // namespace eqalign
