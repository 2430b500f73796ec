#include "eqalign/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "eqalign/error.hpp"
#include "eqalign/rng.hpp"

namespace eqalign {

namespace {

struct Pooled {
    std::vector<double> ranks;        // pooled midranks, group-major order
    std::vector<std::size_t> sizes;
    double n = 0.0;
    double tie_sum = 0.0;             // sum of t^3 - t over tie blocks
};

Pooled pool(const Groups& groups) {
    if (groups.size() < 2) throw validation_error("need at least 2 groups");
    Pooled p;
    std::vector<double> all;
    for (const auto& g : groups) {
        if (g.empty()) throw validation_error("every group must be non-empty");
        for (double v : g) {
            if (!std::isfinite(v)) throw validation_error("group values must be finite");
        }
        p.sizes.push_back(g.size());
        all.insert(all.end(), g.begin(), g.end());
    }
    p.ranks = midranks(all);
    p.n = static_cast<double>(all.size());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j] == all[i]) ++j;
        const double t = static_cast<double>(j - i);
        p.tie_sum += t * t * t - t;
        i = j;
    }
    return p;
}

// Rank sums per group for a labelling of the pooled ranks.
std::vector<double> rank_sums(const Pooled& p, std::span<const std::size_t> labels) {
    std::vector<double> s(p.sizes.size(), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) s[labels[i]] += p.ranks[i];
    return s;
}

double h_from_sums(const Pooled& p, std::span<const double> sums) {
    double acc = 0.0;
    for (std::size_t g = 0; g < sums.size(); ++g) acc += sums[g] * sums[g] / static_cast<double>(p.sizes[g]);
    const double h = 12.0 / (p.n * (p.n + 1.0)) * acc - 3.0 * (p.n + 1.0);
    const double c = 1.0 - p.tie_sum / (p.n * p.n * p.n - p.n);
    return std::max(0.0, h / c);
}

std::vector<std::size_t> initial_labels(const Pooled& p) {
    std::vector<std::size_t> labels;
    for (std::size_t g = 0; g < p.sizes.size(); ++g) labels.insert(labels.end(), p.sizes[g], g);
    return labels;
}

// Number of distinct labellings, saturating above `cap`.
std::uint64_t multinomial(std::span<const std::size_t> sizes, std::uint64_t cap) {
    long double acc = 1.0L;
    std::size_t total = 0;
    for (std::size_t s : sizes) {
        for (std::size_t i = 1; i <= s; ++i) {
            ++total;
            acc = acc * static_cast<long double>(total) / static_cast<long double>(i);
            if (acc > static_cast<long double>(cap)) return cap + 1;
        }
    }
    return static_cast<std::uint64_t>(std::llround(acc));
}

// Visit labellings: every distinct one (exact) or n_resamples random ones.
template <class Visit>
std::uint64_t for_each_labelling(const Pooled& p, const PermutationOptions& opts, Visit&& visit) {
    auto labels = initial_labels(p);
    if (multinomial(p.sizes, opts.max_exact) <= opts.max_exact) {
        std::uint64_t count = 0;
        do {
            visit(labels);
            ++count;
        } while (std::next_permutation(labels.begin(), labels.end()));
        return count;
    }
    if (opts.n_resamples == 0) throw validation_error("n_resamples must be >= 1");
    Rng rng(opts.seed);
    for (std::size_t r = 0; r < opts.n_resamples; ++r) {
        for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);
        visit(labels);
    }
    return opts.n_resamples;
}

bool all_tied(const Pooled& p) { return p.tie_sum == p.n * p.n * p.n - p.n; }

double tol_for(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
        for (std::size_t t = i; t < j; ++t) ranks[order[t]] = r;
        i = j;
    }
    return ranks;
}

KruskalWallisResult kruskal_wallis(const Groups& groups, PMethod method, const PermutationOptions& opts) {
    const Pooled p = pool(groups);
    if (all_tied(p)) return {0.0, 1.0};
    const auto labels = initial_labels(p);
    const double h = h_from_sums(p, rank_sums(p, labels));
    if (method == PMethod::Asymptotic) {
        const double df = static_cast<double>(groups.size() - 1);
        const double pv = boost::math::gamma_q(df / 2.0, h / 2.0);
        return {h, std::clamp(pv, 0.0, 1.0)};
    }
    std::uint64_t hits = 0;
    const double thresh = h - tol_for(h);
    const auto total = for_each_labelling(p, opts, [&](std::span<const std::size_t> lab) {
        if (h_from_sums(p, rank_sums(p, lab)) >= thresh) ++hits;
    });
    return {h, static_cast<double>(hits) / static_cast<double>(total)};
}

std::vector<std::vector<double>> dunn_posthoc(const Groups& groups, Correction correction, PMethod method,
                                              const PermutationOptions& opts) {
    const Pooled p = pool(groups);
    const std::size_t k = groups.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> out(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i) out[i][i] = nan;
    if (all_tied(p)) return out;

    const auto labels = initial_labels(p);
    const auto sums = rank_sums(p, labels);
    std::vector<double> mean(k);
    for (std::size_t g = 0; g < k; ++g) mean[g] = sums[g] / static_cast<double>(p.sizes[g]);
    const double var = p.n * (p.n + 1.0) / 12.0 - p.tie_sum / (12.0 * (p.n - 1.0));

    std::vector<std::vector<double>> raw(k, std::vector<double>(k, 1.0));
    if (method == PMethod::Asymptotic) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                const double se = std::sqrt(var * (1.0 / static_cast<double>(p.sizes[i]) + 1.0 / static_cast<double>(p.sizes[j])));
                const double z = (mean[i] - mean[j]) / se;
                raw[i][j] = raw[j][i] = std::erfc(std::abs(z) / std::sqrt(2.0));
            }
        }
    } else {
        // The z denominator is the same for every relabelling, so |mean rank
        // difference| orders outcomes exactly like |z|.
        std::vector<std::vector<std::uint64_t>> hits(k, std::vector<std::uint64_t>(k, 0));
        const auto total = for_each_labelling(p, opts, [&](std::span<const std::size_t> lab) {
            const auto s = rank_sums(p, lab);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = i + 1; j < k; ++j) {
                    const double obs = std::abs(mean[i] - mean[j]);
                    const double d = std::abs(s[i] / static_cast<double>(p.sizes[i]) - s[j] / static_cast<double>(p.sizes[j]));
                    if (d >= obs - tol_for(obs)) ++hits[i][j];
                }
            }
        });
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                raw[i][j] = raw[j][i] = static_cast<double>(hits[i][j]) / static_cast<double>(total);
            }
        }
    }
    const double m = correction == Correction::Bonferroni ? static_cast<double>(k * (k - 1) / 2) : 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i != j) out[i][j] = std::min(1.0, raw[i][j] * m);
        }
    }
    return out;
}

double quantile_r7(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw validation_error("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BoxplotSummary boxplot_summary(std::span<const double> values) {
    if (values.empty()) throw validation_error("boxplot of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    for (double x : v) {
        if (!std::isfinite(x)) throw validation_error("boxplot values must be finite");
    }
    std::sort(v.begin(), v.end());
    BoxplotSummary b;
    b.n = v.size();
    b.median = quantile_r7(v, 0.5);
    b.q1 = quantile_r7(v, 0.25);
    b.q3 = quantile_r7(v, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.q1;
    b.whisker_hi = b.q3;
    for (double x : v) {
        if (x >= lo_fence) {
            b.whisker_lo = std::min(x, b.q1);
            break;
        }
    }
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
        if (*it <= hi_fence) {
            b.whisker_hi = std::max(*it, b.q3);
            break;
        }
    }
    for (double x : v) {
        if (x < lo_fence || x > hi_fence) b.outliers.push_back(x);
    }
    const double half = 1.57 * iqr / std::sqrt(static_cast<double>(b.n));
    b.notch_lo = b.median - half;
    b.notch_hi = b.median + half;
    return b;
}

}  // namespace eqalign
