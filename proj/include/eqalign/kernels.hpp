#pragma once

// Data-parallel inner loops. Every kernel comes in two flavours with the same
// arithmetic per output element: a plain serial reference and an OpenMP
// version. The library calls the OpenMP flavour; tests assert the two agree
// bit for bit and the benchmark target compares their speed.

#include <cstddef>
#include <span>

#include "eqalign/beosonic.hpp"

namespace eqalign::kernels {

/// Log-domain c-transform used by Sinkhorn:
///   out[i] = -eps * log( sum_j exp(log_w[j] + (pot[j] - cost[i*cols + j]) / eps) )
/// computed with a max-shift so it never overflows.
void softmin_serial(double eps, std::span<const double> cost, std::size_t rows, std::size_t cols,
                    std::span<const double> log_w, std::span<const double> pot, std::span<double> out);
void softmin_omp(double eps, std::span<const double> cost, std::size_t rows, std::size_t cols,
                 std::span<const double> log_w, std::span<const double> pot, std::span<double> out);

/// Pairwise ground cost |x_i - y_j|^power, row-major rows = xs.size().
void cost_matrix_serial(std::span<const BeoCoord> xs, std::span<const BeoCoord> ys, int power, std::span<double> out);
void cost_matrix_omp(std::span<const BeoCoord> xs, std::span<const BeoCoord> ys, int power, std::span<double> out);

/// Unnormalised product-Gaussian KDE evaluated at the centres of an R x R grid
/// over the controller square. out is row-major with rows along y.
/// With reflect, each point also contributes its mirror images across the
/// four edges and four corners.
void kde_grid_serial(std::span<const BeoCoord> points, double hx, double hy, bool reflect, std::size_t resolution,
                     std::span<double> out);
void kde_grid_omp(std::span<const BeoCoord> points, double hx, double hy, bool reflect, std::size_t resolution,
                  std::span<double> out);

/// One 1D W1 value per direction angle (radians) for projected measures.
void sliced_projections_serial(std::span<const BeoCoord> xs, std::span<const double> xw, std::span<const BeoCoord> ys,
                               std::span<const double> yw, std::span<const double> angles, std::span<double> out);
void sliced_projections_omp(std::span<const BeoCoord> xs, std::span<const double> xw, std::span<const BeoCoord> ys,
                            std::span<const double> yw, std::span<const double> angles, std::span<double> out);

}  // namespace eqalign::kernels
