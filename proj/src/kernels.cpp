#include "eqalign/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "eqalign/transport.hpp"

namespace eqalign::kernels {

namespace {

inline double softmin_row(double eps, const double* cost_row, std::size_t cols, const double* log_w, const double* pot) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) {
        m = std::max(m, log_w[j] + (pot[j] - cost_row[j]) / eps);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        s += std::exp(log_w[j] + (pot[j] - cost_row[j]) / eps - m);
    }
    return -eps * (m + std::log(s));
}

inline double ground_cost(const BeoCoord& a, const BeoCoord& b, int power) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    const double sq = dx * dx + dy * dy;
    return power == 2 ? sq : std::sqrt(sq);
}

inline double cell_center(std::size_t k, std::size_t resolution) {
    return -kBound + (static_cast<double>(k) + 0.5) * (2.0 * kBound / static_cast<double>(resolution));
}

// Per-point 1D kernel profile along one axis, with optional mirror copies.
inline void axis_profile(double v, double h, bool reflect, std::size_t resolution, double* out) {
    const double inv = 1.0 / h;
    for (std::size_t k = 0; k < resolution; ++k) {
        const double c = cell_center(k, resolution);
        const double z0 = (c - v) * inv;
        double acc = std::exp(-0.5 * z0 * z0);
        if (reflect) {
            const double zl = (c - (-2.0 * kBound - v)) * inv;  // mirror across -6
            const double zr = (c - (2.0 * kBound - v)) * inv;   // mirror across +6
            acc += std::exp(-0.5 * zl * zl) + std::exp(-0.5 * zr * zr);
        }
        out[k] = acc;
    }
}

inline double project(const BeoCoord& p, double c, double s) { return p.x * c + p.y * s; }

double projection_w1(std::span<const BeoCoord> xs, std::span<const double> xw, std::span<const BeoCoord> ys,
                     std::span<const double> yw, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    std::vector<double> px(xs.size()), py(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) px[i] = project(xs[i], c, s);
    for (std::size_t j = 0; j < ys.size(); ++j) py[j] = project(ys[j], c, s);
    return w1_line(px, xw, py, yw);
}

}  // namespace

void softmin_serial(double eps, std::span<const double> cost, std::size_t rows, std::size_t cols,
                    std::span<const double> log_w, std::span<const double> pot, std::span<double> out) {
    for (std::size_t i = 0; i < rows; ++i) {
        out[i] = softmin_row(eps, cost.data() + i * cols, cols, log_w.data(), pot.data());
    }
}

void softmin_omp(double eps, std::span<const double> cost, std::size_t rows, std::size_t cols,
                 std::span<const double> log_w, std::span<const double> pot, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        out[r] = softmin_row(eps, cost.data() + r * cols, cols, log_w.data(), pot.data());
    }
}

void cost_matrix_serial(std::span<const BeoCoord> xs, std::span<const BeoCoord> ys, int power, std::span<double> out) {
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) out[i * ys.size() + j] = ground_cost(xs[i], ys[j], power);
}

void cost_matrix_omp(std::span<const BeoCoord> xs, std::span<const BeoCoord> ys, int power, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static) if (xs.size() * ys.size() > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        for (std::size_t j = 0; j < ys.size(); ++j) out[r * ys.size() + j] = ground_cost(xs[r], ys[j], power);
    }
}

void kde_grid_serial(std::span<const BeoCoord> points, double hx, double hy, bool reflect, std::size_t resolution,
                     std::span<double> out) {
    const std::size_t n = points.size(), R = resolution;
    std::vector<double> kx(n * R), ky(n * R);
    for (std::size_t p = 0; p < n; ++p) {
        axis_profile(points[p].x, hx, reflect, R, kx.data() + p * R);
        axis_profile(points[p].y, hy, reflect, R, ky.data() + p * R);
    }
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < R; ++c) {
            double acc = 0.0;
            for (std::size_t p = 0; p < n; ++p) acc += ky[p * R + r] * kx[p * R + c];
            out[r * R + c] = acc;
        }
    }
}

void kde_grid_omp(std::span<const BeoCoord> points, double hx, double hy, bool reflect, std::size_t resolution,
                  std::span<double> out) {
    const std::size_t n = points.size(), R = resolution;
    std::vector<double> kx(n * R), ky(n * R);
    const auto np = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
    {
#pragma omp for schedule(static)
        for (std::ptrdiff_t pi = 0; pi < np; ++pi) {
            const auto p = static_cast<std::size_t>(pi);
            axis_profile(points[p].x, hx, reflect, R, kx.data() + p * R);
            axis_profile(points[p].y, hy, reflect, R, ky.data() + p * R);
        }
        // implicit barrier above; each output cell sums over points in the same order as the serial kernel
#pragma omp for collapse(2) schedule(static)
        for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(R); ++ri) {
            for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(R); ++ci) {
                const auto r = static_cast<std::size_t>(ri), c = static_cast<std::size_t>(ci);
                double acc = 0.0;
                for (std::size_t p = 0; p < n; ++p) acc += ky[p * R + r] * kx[p * R + c];
                out[r * R + c] = acc;
            }
        }
    }
}

void sliced_projections_serial(std::span<const BeoCoord> xs, std::span<const double> xw, std::span<const BeoCoord> ys,
                               std::span<const double> yw, std::span<const double> angles, std::span<double> out) {
    for (std::size_t k = 0; k < angles.size(); ++k) out[k] = projection_w1(xs, xw, ys, yw, angles[k]);
}

void sliced_projections_omp(std::span<const BeoCoord> xs, std::span<const double> xw, std::span<const BeoCoord> ys,
                            std::span<const double> yw, std::span<const double> angles, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(angles.size());
#pragma omp parallel for schedule(static) if (angles.size() > 64)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        out[static_cast<std::size_t>(k)] = projection_w1(xs, xw, ys, yw, angles[static_cast<std::size_t>(k)]);
    }
}

}  // namespace eqalign::kernels
