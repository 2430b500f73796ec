#include "eqalign/density.hpp"

#include <fmt/format.h>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <tuple>

#include "eqalign/error.hpp"
#include "eqalign/io.hpp"
#include "eqalign/kernels.hpp"

namespace eqalign {

namespace {

constexpr double kDropBelow = 1e-12;

double sample_sd(std::span<const BeoCoord> pts, double BeoCoord::*axis) {
    const double n = static_cast<double>(pts.size());
    double mean = 0.0;
    for (const auto& p : pts) mean += p.*axis;
    mean /= n;
    double ss = 0.0;
    for (const auto& p : pts) ss += (p.*axis - mean) * (p.*axis - mean);
    return std::sqrt(ss / (n - 1.0));
}

GridDensity build(std::span<const BeoCoord> points, const KdeConfig& cfg, bool reflect) {
    cfg.validate();
    if (points.empty()) throw validation_error("density estimate needs at least one point");
    for (const auto& p : points) {
        if (!in_square(p.x, p.y)) throw validation_error(fmt::format("coordinate out of range: ({}, {})", p.x, p.y));
    }
    const auto [hx, hy] = resolve_bandwidth(points, cfg);
    GridDensity g;
    g.resolution = cfg.resolution;
    g.cell_prob.assign(cfg.resolution * cfg.resolution, 0.0);
    kernels::kde_grid_omp(points, hx, hy, reflect, cfg.resolution, g.cell_prob);
    const double total = std::accumulate(g.cell_prob.begin(), g.cell_prob.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw validation_error(fmt::format("kernel mass vanished on the grid (bandwidth {}, {})", hx, hy));
    }
    for (double& v : g.cell_prob) v /= total;
    return g;
}

}  // namespace

BeoCoord GridDensity::cell_center(std::size_t row, std::size_t col) const {
    const double w = 2.0 * kBound / static_cast<double>(resolution);
    return {-kBound + (static_cast<double>(col) + 0.5) * w, -kBound + (static_cast<double>(row) + 0.5) * w};
}

void KdeConfig::validate() const {
    if (resolution < 8) throw validation_error(fmt::format("grid resolution must be >= 8, got {}", resolution));
    if (bandwidth) {
        const auto [hx, hy] = *bandwidth;
        if (!(hx > 0.0) || !(hy > 0.0) || !std::isfinite(hx) || !std::isfinite(hy)) {
            throw validation_error(fmt::format("bandwidths must be positive, got ({}, {})", hx, hy));
        }
    }
    if (!(bandwidth_scale > 0.0) || !std::isfinite(bandwidth_scale)) {
        throw validation_error("bandwidth scale must be positive");
    }
    if (!(min_bandwidth >= 0.0) || !std::isfinite(min_bandwidth)) {
        throw validation_error("minimum bandwidth must be non-negative");
    }
}

std::pair<double, double> scott_bandwidth(std::span<const BeoCoord> points) {
    if (points.size() < 2) throw validation_error("Scott's rule needs at least 2 points");
    const double sx = sample_sd(points, &BeoCoord::x);
    const double sy = sample_sd(points, &BeoCoord::y);
    if (!(sx > 0.0) || !(sy > 0.0)) {
        throw validation_error(fmt::format("zero spread in {} dimension", sx > 0.0 ? "y" : "x"));
    }
    const double f = std::pow(static_cast<double>(points.size()), -1.0 / 6.0);
    return {sx * f, sy * f};
}

std::pair<double, double> resolve_bandwidth(std::span<const BeoCoord> points, const KdeConfig& cfg) {
    double hx = 0.0, hy = 0.0;
    if (cfg.bandwidth) {
        std::tie(hx, hy) = *cfg.bandwidth;
    } else if (cfg.min_bandwidth > 0.0) {
        // With a floor configured, degenerate spread is not fatal: each axis
        // keeps whatever Scott's rule gives and the floor covers the rest.
        if (points.size() >= 2) {
            const double f = std::pow(static_cast<double>(points.size()), -1.0 / 6.0);
            hx = sample_sd(points, &BeoCoord::x) * f;
            hy = sample_sd(points, &BeoCoord::y) * f;
        }
    } else {
        std::tie(hx, hy) = scott_bandwidth(points);
    }
    hx = std::max(hx * cfg.bandwidth_scale, cfg.min_bandwidth);
    hy = std::max(hy * cfg.bandwidth_scale, cfg.min_bandwidth);
    if (!(hx > 0.0) || !(hy > 0.0)) throw validation_error("bandwidth resolved to zero");
    return {hx, hy};
}

GridDensity reflective_kde(std::span<const BeoCoord> points, const KdeConfig& cfg) { return build(points, cfg, true); }

GridDensity standard_kde(std::span<const BeoCoord> points, const KdeConfig& cfg) { return build(points, cfg, false); }

GridDensity kde(std::span<const BeoCoord> points, const KdeConfig& cfg) { return build(points, cfg, cfg.reflect); }

DiscreteMeasure to_measure(const GridDensity& g) {
    std::vector<BeoCoord> pts;
    std::vector<double> w;
    double kept = 0.0;
    for (std::size_t r = 0; r < g.resolution; ++r) {
        for (std::size_t c = 0; c < g.resolution; ++c) {
            const double p = g.at(r, c);
            if (p < kDropBelow) continue;
            pts.push_back(g.cell_center(r, c));
            w.push_back(p);
            kept += p;
        }
    }
    for (double& v : w) v /= kept;
    return DiscreteMeasure(std::move(pts), std::move(w));
}

double reflective_kantorovich(std::span<const BeoCoord> a, std::span<const BeoCoord> b, const KdeConfig& cfg) {
    if (a.empty() || b.empty()) throw validation_error("reflective Kantorovich distance needs non-empty point sets");
    KdeConfig rc = cfg;
    rc.reflect = true;
    const auto ga = reflective_kde(a, rc);
    const auto gb = reflective_kde(b, rc);
    if (ga.cell_prob == gb.cell_prob) return 0.0;
    return w1_exact(to_measure(ga), to_measure(gb)).distance;
}

std::size_t count_local_maxima(const GridDensity& g) {
    const auto R = static_cast<std::ptrdiff_t>(g.resolution);
    std::size_t count = 0;
    for (std::ptrdiff_t r = 0; r < R; ++r) {
        for (std::ptrdiff_t c = 0; c < R; ++c) {
            const double v = g.cell_prob[static_cast<std::size_t>(r * R + c)];
            bool peak = true;
            for (std::ptrdiff_t dr = -1; dr <= 1 && peak; ++dr) {
                for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const auto rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= R || cc >= R) continue;
                    if (!(v > g.cell_prob[static_cast<std::size_t>(rr * R + cc)])) {
                        peak = false;
                        break;
                    }
                }
            }
            if (peak) ++count;
        }
    }
    return count;
}

void write_grid_csv(const GridDensity& g, std::ostream& os) {
    os << "row,col,prob\n";
    for (std::size_t r = 0; r < g.resolution; ++r)
        for (std::size_t c = 0; c < g.resolution; ++c) os << r << ',' << c << ',' << io::format_double(g.at(r, c)) << '\n';
}

}  // namespace eqalign
