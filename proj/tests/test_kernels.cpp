#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <omp.h>

#include "eqalign/kernels.hpp"
#include "test_util.hpp"

using namespace eqalign;

namespace {

std::vector<double> uniform_vec(std::mt19937_64& g, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(g);
    return v;
}

class KernelParity : public ::testing::TestWithParam<int> {
protected:
    void SetUp() override {
        saved_ = omp_get_max_threads();
        omp_set_num_threads(GetParam());
    }
    void TearDown() override { omp_set_num_threads(saved_); }

private:
    int saved_ = 1;
};

}  // namespace

TEST_P(KernelParity, Softmin) {
    std::mt19937_64 g(1);
    const std::size_t rows = 130, cols = 97;
    const auto cost = uniform_vec(g, rows * cols, 0.0, 17.0);
    const auto logw = uniform_vec(g, cols, -6.0, -3.0);
    const auto pot = uniform_vec(g, cols, -2.0, 2.0);
    std::vector<double> a(rows), b(rows);
    kernels::softmin_serial(0.05, cost, rows, cols, logw, pot, a);
    kernels::softmin_omp(0.05, cost, rows, cols, logw, pot, b);
    EXPECT_EQ(a, b);
}

TEST_P(KernelParity, CostMatrix) {
    std::mt19937_64 g(2);
    const auto xs = testutil::random_points(g, 120), ys = testutil::random_points(g, 90);
    for (int power : {1, 2}) {
        std::vector<double> a(xs.size() * ys.size()), b(a.size());
        kernels::cost_matrix_serial(xs, ys, power, a);
        kernels::cost_matrix_omp(xs, ys, power, b);
        EXPECT_EQ(a, b);
    }
}

TEST_P(KernelParity, KdeGrid) {
    std::mt19937_64 g(3);
    const auto pts = testutil::random_points(g, 257);
    for (bool reflect : {false, true}) {
        std::vector<double> a(32 * 32), b(a.size());
        kernels::kde_grid_serial(pts, 0.7, 1.1, reflect, 32, a);
        kernels::kde_grid_omp(pts, 0.7, 1.1, reflect, 32, b);
        EXPECT_EQ(a, b);
    }
}

TEST_P(KernelParity, SlicedProjections) {
    std::mt19937_64 g(4);
    const auto xs = testutil::random_points(g, 40), ys = testutil::random_points(g, 33);
    const std::vector<double> xw(xs.size(), 1.0 / 40.0), yw(ys.size(), 1.0 / 33.0);
    const auto angles = uniform_vec(g, 300, 0.0, 2.0 * std::numbers::pi);
    std::vector<double> a(angles.size()), b(angles.size());
    kernels::sliced_projections_serial(xs, xw, ys, yw, angles, a);
    kernels::sliced_projections_omp(xs, xw, ys, yw, angles, b);
    EXPECT_EQ(a, b);
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelParity, ::testing::Values(1, 2, 4));

TEST(Softmin, MatchesDirectLogSumExp) {
    std::mt19937_64 g(5);
    const std::size_t rows = 7, cols = 9;
    const auto cost = uniform_vec(g, rows * cols, 0.0, 3.0);
    const auto logw = uniform_vec(g, cols, -3.0, -1.0);
    const auto pot = uniform_vec(g, cols, -1.0, 1.0);
    std::vector<double> out(rows);
    const double eps = 0.5;  // large enough that the naive sum does not underflow
    kernels::softmin_serial(eps, cost, rows, cols, logw, pot, out);
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += std::exp(logw[j]) * std::exp((pot[j] - cost[i * cols + j]) / eps);
        EXPECT_NEAR(out[i], -eps * std::log(s), 1e-12);
    }
}

TEST(Softmin, NoOverflowAtTinyEpsilon) {
    const std::vector<double> cost = {0.0, 10.0, 20.0};
    const std::vector<double> logw = {std::log(1.0 / 3), std::log(1.0 / 3), std::log(1.0 / 3)};
    const std::vector<double> pot = {0.0, 0.0, 0.0};
    std::vector<double> out(1);
    kernels::softmin_serial(1e-4, cost, 1, 3, logw, pot, out);
    EXPECT_TRUE(std::isfinite(out[0]));
    EXPECT_NEAR(out[0], 1e-4 * std::log(3.0), 1e-12);
}

TEST(KdeGrid, ReflectionAddsMassNearEdge) {
    const std::vector<BeoCoord> pts = {{-5.9, 0.0}};
    std::vector<double> plain(16 * 16), refl(16 * 16);
    kernels::kde_grid_serial(pts, 0.5, 0.5, false, 16, plain);
    kernels::kde_grid_serial(pts, 0.5, 0.5, true, 16, refl);
    for (std::size_t i = 0; i < plain.size(); ++i) EXPECT_GE(refl[i], plain[i]);
    EXPECT_GT(refl[8 * 16 + 0], 1.5 * plain[8 * 16 + 0]);
}
