#include "eqalign/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "eqalign/error.hpp"
#include "eqalign/rng.hpp"

namespace eqalign {

Metric parse_metric(const std::string& s) {
    if (s == "w1") return Metric::W1;
    if (s == "reflective-w1") return Metric::ReflectiveW1;
    if (s == "sinkhorn") return Metric::Sinkhorn;
    if (s == "sliced-w1") return Metric::SlicedW1;
    throw validation_error(fmt::format("unknown metric '{}' (w1, reflective-w1, sinkhorn, sliced-w1)", s));
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::W1: return "w1";
        case Metric::ReflectiveW1: return "reflective-w1";
        case Metric::Sinkhorn: return "sinkhorn";
        case Metric::SlicedW1: return "sliced-w1";
    }
    return "w1";
}

void MetricConfig::validate() const {
    kde.validate();
    sinkhorn.validate();
    if (projections == 0) throw validation_error("sliced W1 needs at least one projection");
}

double metric_distance(const MetricConfig& cfg, std::span<const BeoCoord> predicted, std::span<const BeoCoord> truth) {
    if (predicted.empty() || truth.empty()) throw validation_error("metric needs non-empty point sets");
    switch (cfg.metric) {
        case Metric::W1: {
            const auto a = DiscreteMeasure::uniform({predicted.begin(), predicted.end()});
            const auto b = DiscreteMeasure::uniform({truth.begin(), truth.end()});
            return w1_exact(a, b).distance;
        }
        case Metric::ReflectiveW1: return reflective_kantorovich(predicted, truth, cfg.kde);
        case Metric::Sinkhorn: {
            const auto a = DiscreteMeasure::uniform({predicted.begin(), predicted.end()});
            const auto b = DiscreteMeasure::uniform({truth.begin(), truth.end()});
            return sinkhorn_divergence(a, b, cfg.sinkhorn);
        }
        case Metric::SlicedW1: {
            const auto a = DiscreteMeasure::uniform({predicted.begin(), predicted.end()});
            const auto b = DiscreteMeasure::uniform({truth.begin(), truth.end()});
            return sliced_w1(a, b, cfg.projections, cfg.projection_seed);
        }
    }
    throw validation_error("unknown metric");
}

std::size_t EvalRun::error_count() const {
    return static_cast<std::size_t>(std::count_if(per_prompt.begin(), per_prompt.end(), [](const auto& r) { return !r.ok(); }));
}

std::uint64_t prompt_seed(std::uint64_t run_seed, const std::string& prompt_id) { return derive_seed(run_seed, fnv1a(prompt_id)); }

EvalRun evaluate(Recommender& rec, const Dataset& test, const MetricConfig& metric, const EvalOptions& opts) {
    if (test.entries.empty()) throw validation_error("test set is empty");
    if (opts.n_samples == 0) throw validation_error("n_samples must be >= 1");
    metric.validate();
    EvalRun run;
    run.name = rec.name();
    run.recommender = rec.name();
    run.metric = metric.metric;
    run.n_samples = opts.n_samples;
    run.seed = opts.seed;
    run.per_prompt.resize(test.entries.size());
    std::vector<ErrorKind> kinds(test.entries.size(), ErrorKind::Validation);

    const auto n = static_cast<std::ptrdiff_t>(test.entries.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& e = test.entries[static_cast<std::size_t>(i)];
        auto& out = run.per_prompt[static_cast<std::size_t>(i)];
        out.id = e.id;
        try {
            const auto pred = rec.recommend(e.prompt, opts.n_samples, prompt_seed(opts.seed, e.id));
            if (pred.size() != opts.n_samples) {
                throw validation_error(fmt::format("recommender returned {} samples, wanted {}", pred.size(), opts.n_samples));
            }
            out.distance = metric_distance(metric, pred, e.responses);
        } catch (const Error& err) {
            out.error = err.what();
            kinds[static_cast<std::size_t>(i)] = err.kind();
        } catch (const std::exception& err) {
            out.error = err.what();
            kinds[static_cast<std::size_t>(i)] = ErrorKind::Io;
        }
    }

    const std::size_t errors = run.error_count();
    if (static_cast<double>(errors) > opts.max_error_fraction * static_cast<double>(test.entries.size())) {
        std::size_t first = 0;
        while (run.per_prompt[first].ok()) ++first;
        throw Error(kinds[first], fmt::format("{} of {} prompts failed (allowed fraction {}); first: {}: {}", errors,
                                              test.entries.size(), opts.max_error_fraction, run.per_prompt[first].id,
                                              run.per_prompt[first].error));
    }
    return run;
}

TestReport compare(const std::vector<EvalRun>& runs, std::span<const double> alpha_levels) {
    if (runs.size() < 2) throw validation_error("compare needs at least 2 runs");
    std::vector<double> levels(alpha_levels.begin(), alpha_levels.end());
    if (levels.empty()) levels = {0.05, 0.01};
    std::sort(levels.begin(), levels.end());

    std::set<std::string> ids0;
    for (const auto& r : runs[0].per_prompt) ids0.insert(r.id);
    for (std::size_t k = 1; k < runs.size(); ++k) {
        std::set<std::string> ids;
        for (const auto& r : runs[k].per_prompt) ids.insert(r.id);
        if (ids != ids0) {
            throw validation_error(fmt::format("runs '{}' and '{}' cover different prompts", runs[0].name, runs[k].name));
        }
    }

    TestReport rep;
    // keep prompts that succeeded everywhere, in the first run's order
    std::vector<std::map<std::string, double>> lookup(runs.size());
    std::set<std::string> failed;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        rep.names.push_back(runs[k].name);
        for (const auto& r : runs[k].per_prompt) {
            if (r.ok()) lookup[k][r.id] = r.distance;
            else failed.insert(r.id);
        }
    }
    for (const auto& r : runs[0].per_prompt) {
        if (!failed.contains(r.id)) rep.prompt_ids.push_back(r.id);
    }
    if (rep.prompt_ids.empty()) throw validation_error("no prompt succeeded in every run");

    Groups groups(runs.size());
    for (std::size_t k = 0; k < runs.size(); ++k) {
        for (const auto& id : rep.prompt_ids) groups[k].push_back(lookup[k][id]);
    }
    const auto kw = kruskal_wallis(groups);
    rep.kw_h = kw.h;
    rep.kw_p = kw.p;
    rep.dunn_p = dunn_posthoc(groups, Correction::Bonferroni);
    for (std::size_t a = 0; a < runs.size(); ++a) {
        for (std::size_t b = a + 1; b < runs.size(); ++b) {
            const double p = rep.dunn_p[a][b];
            for (double lv : levels) {
                if (p <= lv) {
                    rep.brackets.push_back({a, b, p, lv});
                    break;
                }
            }
        }
    }
    return rep;
}

}  // namespace eqalign
