#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace eqalign {

using Groups = std::vector<std::vector<double>>;

/// How p-values are obtained. Asymptotic uses the chi-square (Kruskal-Wallis)
/// and normal (Dunn) approximations; Permutation enumerates every distinct
/// relabelling when there are at most max_exact of them and otherwise draws
/// n_resamples seeded random relabellings.
enum class PMethod { Asymptotic, Permutation };

struct PermutationOptions {
    std::uint64_t max_exact = 1'000'000;
    std::size_t n_resamples = 100'000;
    std::uint64_t seed = 1;
};

struct KruskalWallisResult {
    double h = 0.0;
    double p = 1.0;
};

/// Midranks of the pooled values (ties share the average rank), in input order.
std::vector<double> midranks(std::span<const double> values);

/// H with tie correction. All values identical gives H = 0, p = 1.
KruskalWallisResult kruskal_wallis(const Groups& groups, PMethod method = PMethod::Asymptotic,
                                   const PermutationOptions& opts = {});

enum class Correction { Bonferroni, None };

/// k x k matrix of two-sided adjusted p-values for Dunn's test (tie-corrected
/// mean-rank z statistics). The diagonal holds NaN.
std::vector<std::vector<double>> dunn_posthoc(const Groups& groups, Correction correction = Correction::Bonferroni,
                                              PMethod method = PMethod::Asymptotic, const PermutationOptions& opts = {});

struct BoxplotSummary {
    double median = 0.0, q1 = 0.0, q3 = 0.0;
    double whisker_lo = 0.0, whisker_hi = 0.0;
    double notch_lo = 0.0, notch_hi = 0.0;
    std::size_t n = 0;
    std::vector<double> outliers;
};

/// Linear interpolation between order statistics at h = (n - 1) q.
double quantile_r7(std::span<const double> sorted, double q);

/// Quartiles by quantile_r7, 1.5 IQR whiskers, notch = median +- 1.57 IQR / sqrt(n).
BoxplotSummary boxplot_summary(std::span<const double> values);

}  // namespace eqalign
