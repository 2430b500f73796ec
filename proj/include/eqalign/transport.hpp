#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eqalign/beosonic.hpp"

namespace eqalign {

/// Weighted point cloud in the controller square. Weights are strictly
/// positive and sum to one (within 1e-9).
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    DiscreteMeasure(std::vector<BeoCoord> points, std::vector<double> weights);

    /// Equal weights 1/n.
    static DiscreteMeasure uniform(std::vector<BeoCoord> points);

    std::span<const BeoCoord> points() const { return points_; }
    std::span<const double> weights() const { return weights_; }
    std::size_t size() const { return points_.size(); }

private:
    std::vector<BeoCoord> points_;
    std::vector<double> weights_;
};

struct PlanCell {
    std::size_t row;  // index into the source measure
    std::size_t col;  // index into the target measure
    double mass;
};

/// Sparse optimal coupling; only cells with positive mass are listed.
struct TransportPlan {
    std::vector<PlanCell> cells;
};

struct W1Result {
    double distance = 0.0;
    TransportPlan plan;
    // Dual certificate on the merged supports: f_i + g_j <= |x_i - y_j|, with
    // equality wherever the plan has mass. Indexed like the inputs.
    std::vector<double> source_potential;
    std::vector<double> target_potential;
};

inline constexpr std::size_t kMaxExactAtoms = 10000;

/// Exact Kantorovich-1 distance with Euclidean ground cost (network simplex).
W1Result w1_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Optimal assignment between equal-size point lists, averaged (Hungarian method).
double w1_assignment(std::span<const BeoCoord> a, std::span<const BeoCoord> b);

struct SinkhornConfig {
    double epsilon = 0.05;
    std::size_t max_iters = 10000;
    double tolerance = 1e-9;
    int cost_power = 1;  // 1 or 2

    void validate() const;
};

/// Debiased entropic OT: OT_e(mu,nu) - OT_e(mu,mu)/2 - OT_e(nu,nu)/2.
/// Throws ErrorKind::Convergence when the potentials don't settle within max_iters.
double sinkhorn_divergence(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SinkhornConfig& cfg = {});

/// Regularised transport cost OT_e(mu, nu) = <a, f> + <b, g> at the dual optimum.
double entropic_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SinkhornConfig& cfg);

/// Mean 1D W1 over seeded random directions.
double sliced_w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu, std::size_t n_projections, std::uint64_t seed);

/// 1D W1 between weighted samples on the line, via the CDF difference integral.
double w1_line(std::span<const double> xs, std::span<const double> xw, std::span<const double> ys, std::span<const double> yw);

}  // namespace eqalign
