#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "eqalign/beosonic.hpp"
#include "eqalign/transport.hpp"

namespace eqalign {

/// Probability mass per cell of an R x R grid over the square. Row-major,
/// rows run along y (row 0 is the bottom edge), columns along x.
struct GridDensity {
    std::size_t resolution = 0;
    std::vector<double> cell_prob;

    double at(std::size_t row, std::size_t col) const { return cell_prob[row * resolution + col]; }
    BeoCoord cell_center(std::size_t row, std::size_t col) const;
};

struct KdeConfig {
    /// Per-dimension bandwidth in dB; unset means Scott's rule.
    std::optional<std::pair<double, double>> bandwidth;
    /// Multiplier applied on top of the chosen bandwidth.
    double bandwidth_scale = 1.0;
    /// Lower bound applied per dimension after scaling. Zero disables it; with
    /// it set, Scott's rule falls back to the floor on zero-spread inputs.
    double min_bandwidth = 0.0;
    std::size_t resolution = 32;
    bool reflect = true;

    void validate() const;
};

/// h_i = sigma_i * n^(-1/6), sigma with n-1 denominator.
std::pair<double, double> scott_bandwidth(std::span<const BeoCoord> points);

/// Bandwidth actually used by the KDE for these points under cfg.
std::pair<double, double> resolve_bandwidth(std::span<const BeoCoord> points, const KdeConfig& cfg);

GridDensity reflective_kde(std::span<const BeoCoord> points, const KdeConfig& cfg);
GridDensity standard_kde(std::span<const BeoCoord> points, const KdeConfig& cfg);
/// Dispatches on cfg.reflect.
GridDensity kde(std::span<const BeoCoord> points, const KdeConfig& cfg);

/// Atoms at cell centres; cells under 1e-12 are dropped and the rest renormalised.
DiscreteMeasure to_measure(const GridDensity& g);

/// W1 between the reflective-KDE grid measures of two point sets.
double reflective_kantorovich(std::span<const BeoCoord> a, std::span<const BeoCoord> b, const KdeConfig& cfg = {});

/// Cells strictly greater than all of their (up to 8) neighbours.
std::size_t count_local_maxima(const GridDensity& g);

/// `row,col,prob` CSV.
void write_grid_csv(const GridDensity& g, std::ostream& os);

}  // namespace eqalign
