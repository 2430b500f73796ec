#include "eqalign/transport.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <utility>

#include "eqalign/error.hpp"
#include "eqalign/kernels.hpp"
#include "eqalign/rng.hpp"
#include "network_simplex.hpp"

namespace eqalign {

DiscreteMeasure::DiscreteMeasure(std::vector<BeoCoord> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) throw validation_error("measure has no atoms");
    if (points_.size() != weights_.size()) throw validation_error("measure points/weights length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!in_square(points_[i].x, points_[i].y)) {
            throw validation_error(fmt::format("coordinate out of range: ({}, {})", points_[i].x, points_[i].y));
        }
        if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) throw validation_error("measure weights must be > 0");
        total += weights_[i];
    }
    if (std::abs(total - 1.0) > 1e-9) throw validation_error(fmt::format("measure weights sum to {}, not 1", total));
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<BeoCoord> points) {
    const std::size_t n = points.size();
    if (n == 0) throw validation_error("measure has no atoms");
    return DiscreteMeasure(std::move(points), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

namespace {

double euclid(const BeoCoord& p, const BeoCoord& q) { return std::hypot(p.x - q.x, p.y - q.y); }

struct Merged {
    std::vector<BeoCoord> points;
    std::vector<double> weights;
    std::vector<std::size_t> group;  // original index -> merged index
};

Merged merge_duplicates(const DiscreteMeasure& m) {
    Merged out;
    std::map<std::pair<double, double>, std::size_t> seen;
    out.group.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& p = m.points()[i];
        auto [it, fresh] = seen.try_emplace({p.x, p.y}, out.points.size());
        if (fresh) {
            out.points.push_back(p);
            out.weights.push_back(0.0);
        }
        out.weights[it->second] += m.weights()[i];
        out.group[i] = it->second;
    }
    return out;
}

}  // namespace

W1Result w1_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.size() == 0 || nu.size() == 0) throw validation_error("w1_exact: empty measure");
    if (mu.size() > kMaxExactAtoms || nu.size() > kMaxExactAtoms) {
        throw validation_error(fmt::format("w1_exact: at most {} atoms per side", kMaxExactAtoms));
    }
    const Merged a = merge_duplicates(mu);
    const Merged b = merge_duplicates(nu);

    std::vector<PlanCell> merged_plan;
    std::vector<double> f, g;
    if (a.points.size() == 1 || b.points.size() == 1) {
        // a single atom on either side leaves exactly one coupling
        for (std::size_t i = 0; i < a.points.size(); ++i)
            for (std::size_t j = 0; j < b.points.size(); ++j)
                merged_plan.push_back({i, j, a.weights[i] * b.weights[j]});
        if (a.points.size() == 1) {
            f.assign(1, 0.0);
            for (const auto& q : b.points) g.push_back(euclid(a.points[0], q));
        } else {
            g.assign(1, 0.0);
            for (const auto& p : a.points) f.push_back(euclid(p, b.points[0]));
        }
    } else {
        detail::NetworkSimplex solver(a.points, a.weights, b.points, b.weights);
        solver.run();
        merged_plan = solver.plan();
        f = solver.source_potential();
        g = solver.target_potential();
    }

    // split merged mass back onto the original atoms in proportion to their weights
    W1Result res;
    res.source_potential.resize(mu.size());
    res.target_potential.resize(nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) res.source_potential[i] = f[a.group[i]];
    for (std::size_t j = 0; j < nu.size(); ++j) res.target_potential[j] = g[b.group[j]];

    std::vector<std::vector<std::size_t>> a_members(a.points.size()), b_members(b.points.size());
    for (std::size_t i = 0; i < mu.size(); ++i) a_members[a.group[i]].push_back(i);
    for (std::size_t j = 0; j < nu.size(); ++j) b_members[b.group[j]].push_back(j);

    double total = 0.0;
    for (const auto& cell : merged_plan) {
        total += cell.mass * euclid(a.points[cell.row], b.points[cell.col]);
        for (std::size_t i : a_members[cell.row]) {
            const double fa = mu.weights()[i] / a.weights[cell.row];
            for (std::size_t j : b_members[cell.col]) {
                const double fb = nu.weights()[j] / b.weights[cell.col];
                res.plan.cells.push_back({i, j, cell.mass * fa * fb});
            }
        }
    }
    std::sort(res.plan.cells.begin(), res.plan.cells.end(),
              [](const PlanCell& x, const PlanCell& y) { return x.row != y.row ? x.row < y.row : x.col < y.col; });
    res.distance = total;
    return res;
}

double w1_assignment(std::span<const BeoCoord> a, std::span<const BeoCoord> b) {
    if (a.size() != b.size()) throw validation_error("w1_assignment: size mismatch");
    if (a.empty()) throw validation_error("w1_assignment: empty input");
    const std::size_t n = a.size();
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = euclid(a[i], b[j]);

    // Hungarian method with row/column potentials, 1-based with a sentinel column 0
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (std::size_t j = 1; j <= n; ++j) total += cost[(p[j] - 1) * n + (j - 1)];
    return total / static_cast<double>(n);
}

void SinkhornConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw validation_error("sinkhorn epsilon must be > 0");
    if (!(tolerance > 0.0)) throw validation_error("sinkhorn tolerance must be > 0");
    if (cost_power != 1 && cost_power != 2) throw validation_error("sinkhorn cost_power must be 1 or 2");
    if (max_iters == 0) throw validation_error("sinkhorn max_iters must be >= 1");
}

namespace {

struct SideData {
    std::vector<BeoCoord> pts;
    std::vector<double> w, logw;
};

SideData side_of(const DiscreteMeasure& m) {
    SideData s{{m.points().begin(), m.points().end()}, {m.weights().begin(), m.weights().end()}, {}};
    s.logw.resize(s.w.size());
    for (std::size_t i = 0; i < s.w.size(); ++i) s.logw[i] = std::log(s.w[i]);
    return s;
}

std::vector<double> cost_of(const SideData& x, const SideData& y, int power) {
    std::vector<double> c(x.pts.size() * y.pts.size());
    kernels::cost_matrix_omp(x.pts, y.pts, power, c);
    return c;
}

// Annealing schedule: halve from the cost diameter down to the target epsilon.
std::vector<double> eps_schedule(double diameter, double eps) {
    std::vector<double> s;
    for (double e = std::max(diameter, eps); e > eps; e *= 0.5) s.push_back(e);
    s.push_back(eps);
    return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

[[noreturn]] void not_converged(const char* what, std::size_t iters, double residual) {
    throw Error(ErrorKind::Convergence,
                fmt::format("sinkhorn ({}) did not converge in {} iterations; residual {:.3e}", what, iters, residual));
}

// Newton polishing for the entropic dual at fixed eps. Plain Sinkhorn slows to
// a crawl at small eps (second eigenvalue of the scaling map close to 1); a few
// Newton steps on the same dual finish the job. The Hessian system
//   [diag(P1) P; P^T diag(P^T 1)] d = eps * (a - P1, b - P^T 1)
// is PSD with the (1, -1) gauge direction in its null space and a consistent
// right-hand side, so matrix-free CG solves it.
class DualNewton {
public:
    DualNewton(const SideData& x, const SideData& y, std::span<const double> cxy, double eps)
        : x_(x), y_(y), c_(cxy), eps_(eps), m_(x.pts.size()), n_(y.pts.size()), p_(m_ * n_) {}

    /// One damped Newton step; returns the sup-norm of the applied update.
    double step(std::vector<double>& f, std::vector<double>& g) {
        const auto [obj0, err0] = evaluate(f, g, row_, col_);
        std::vector<double> grad(m_ + n_);
        for (std::size_t i = 0; i < m_; ++i) grad[i] = x_.w[i] - row_[i];
        for (std::size_t j = 0; j < n_; ++j) grad[m_ + j] = y_.w[j] - col_[j];
        std::vector<double> rhs(grad);
        for (double& v : rhs) v *= eps_;
        const auto d = cg(rhs);
        const double slope = dot(grad, d);

        // Armijo on the concave dual; near the optimum the objective is flat to
        // round-off, so a drop in marginal error also counts as progress
        // potentials enter through exp(./eps): cap any single move at a few eps
        double dmax = 0.0;
        for (double v : d) dmax = std::max(dmax, std::abs(v));
        std::vector<double> ft(m_), gt(n_), rt(m_), ct(n_);
        double alpha = dmax > 4.0 * eps_ ? 4.0 * eps_ / dmax : 1.0;
        for (int k = 0; k < 40; ++k, alpha *= 0.5) {
            for (std::size_t i = 0; i < m_; ++i) ft[i] = f[i] + alpha * d[i];
            for (std::size_t j = 0; j < n_; ++j) gt[j] = g[j] + alpha * d[m_ + j];
            const auto [obj, err] = evaluate(ft, gt, rt, ct);
            if (obj >= obj0 + 1e-4 * alpha * slope || err < err0) {
                f.swap(ft);
                g.swap(gt);
                double mx = 0.0;
                for (double v : d) mx = std::max(mx, std::abs(alpha * v));
                return mx;
            }
        }
        return 0.0;  // no progress available: already at the floating-point floor
    }

private:
    // Fills P and its marginals; returns (dual objective, l1 marginal error).
    std::pair<double, double> evaluate(std::span<const double> f, std::span<const double> g, std::vector<double>& row,
                                       std::vector<double>& col) {
        row.assign(m_, 0.0);
        col.assign(n_, 0.0);
        double mass = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                const double v = std::exp(x_.logw[i] + y_.logw[j] + (f[i] + g[j] - c_[i * n_ + j]) / eps_);
                p_[i * n_ + j] = v;
                row[i] += v;
                col[j] += v;
                mass += v;
            }
        }
        double err = 0.0;
        for (std::size_t i = 0; i < m_; ++i) err += std::abs(row[i] - x_.w[i]);
        for (std::size_t j = 0; j < n_; ++j) err += std::abs(col[j] - y_.w[j]);
        return {dot(x_.w, f) + dot(y_.w, g) - eps_ * mass, err};
    }

    void hess_mul(std::span<const double> v, std::span<double> out) const {
        for (std::size_t i = 0; i < m_; ++i) out[i] = row_[i] * v[i];
        for (std::size_t j = 0; j < n_; ++j) out[m_ + j] = col_[j] * v[m_ + j];
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                const double pij = p_[i * n_ + j];
                out[i] += pij * v[m_ + j];
                out[m_ + j] += pij * v[i];
            }
        }
    }

    // CG on the system with the last target potential pinned (removes the gauge
    // direction, leaving a positive definite operator).
    std::vector<double> cg(std::span<const double> b) const {
        const std::size_t N = b.size();
        std::vector<double> xk(N, 0.0), r(b.begin(), b.end()), ap(N);
        r[N - 1] = 0.0;
        std::vector<double> p(r);
        double rr = dot(r, r);
        const double stop = rr * 1e-28;
        for (std::size_t it = 0; it < 4 * N && rr > stop && rr > 0.0; ++it) {
            hess_mul(p, ap);
            ap[N - 1] = 0.0;
            const double pap = dot(p, ap);
            if (!(pap > 0.0)) break;
            const double alpha = rr / pap;
            for (std::size_t k = 0; k < N; ++k) {
                xk[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            const double rr_new = dot(r, r);
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t k = 0; k < N; ++k) p[k] = r[k] + beta * p[k];
        }
        return xk;
    }

    const SideData& x_;
    const SideData& y_;
    std::span<const double> c_;
    double eps_;
    std::size_t m_, n_;
    std::vector<double> p_, row_, col_;
};

double ot_cross(const SideData& x, const SideData& y, const SinkhornConfig& cfg) {
    const std::size_t m = x.pts.size(), n = y.pts.size();
    const auto cxy = cost_of(x, y, cfg.cost_power);
    const auto cyx = cost_of(y, x, cfg.cost_power);
    const double diam = *std::max_element(cxy.begin(), cxy.end());
    const auto sched = eps_schedule(diam, cfg.epsilon);

    std::vector<double> f(m, 0.0), g(n, 0.0), ft(m), gt(n);
    kernels::softmin_omp(sched.front(), cxy, m, n, y.logw, g, ft);
    kernels::softmin_omp(sched.front(), cyx, n, m, x.logw, f, gt);
    f = ft;
    g = gt;
    for (std::size_t k = 0; k + 1 < sched.size(); ++k) {
        kernels::softmin_omp(sched[k], cxy, m, n, y.logw, g, ft);
        kernels::softmin_omp(sched[k], cyx, n, m, x.logw, f, gt);
        for (std::size_t i = 0; i < m; ++i) f[i] = 0.5 * (f[i] + ft[i]);
        for (std::size_t j = 0; j < n; ++j) g[j] = 0.5 * (g[j] + gt[j]);
    }
    // Sinkhorn sweeps; once progress per sweep drops below 1% switch on Newton
    // polishing between sweeps. Convergence is always judged on a plain sweep.
    constexpr std::size_t kWarmup = 200;
    DualNewton newton(x, y, cxy, cfg.epsilon);
    double residual = std::numeric_limits<double>::infinity();
    double previous = residual;
    bool polish = false;
    std::size_t it = 0;
    for (; it < cfg.max_iters; ++it) {
        if (polish) newton.step(f, g);
        kernels::softmin_omp(cfg.epsilon, cxy, m, n, y.logw, g, ft);
        kernels::softmin_omp(cfg.epsilon, cyx, n, m, x.logw, ft, gt);
        residual = std::max(sup_diff(ft, f), sup_diff(gt, g));
        f.swap(ft);
        g.swap(gt);
        if (residual < cfg.tolerance) break;
        if (!polish && it >= kWarmup && residual > 0.99 * previous) polish = true;
        previous = residual;
    }
    if (!(residual < cfg.tolerance)) not_converged("cross", it, residual);
    return dot(x.w, f) + dot(y.w, g);
}

double ot_self(const SideData& x, const SinkhornConfig& cfg) {
    const std::size_t m = x.pts.size();
    const auto c = cost_of(x, x, cfg.cost_power);
    const double diam = *std::max_element(c.begin(), c.end());
    const auto sched = eps_schedule(diam, cfg.epsilon);

    std::vector<double> f(m, 0.0), ft(m);
    kernels::softmin_omp(sched.front(), c, m, m, x.logw, f, ft);
    f = ft;
    double residual = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (std::size_t k = 0; k < sched.size(); ++k) {
        const bool last = k + 1 == sched.size();
        const std::size_t budget = last ? cfg.max_iters : 1;
        for (it = 0; it < budget; ++it) {
            kernels::softmin_omp(sched[k], c, m, m, x.logw, f, ft);
            residual = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double nf = 0.5 * (f[i] + ft[i]);
                residual = std::max(residual, std::abs(nf - f[i]));
                f[i] = nf;
            }
            if (last && residual < cfg.tolerance) break;
        }
    }
    if (!(residual < cfg.tolerance)) not_converged("self", it, residual);
    return 2.0 * dot(x.w, f);
}

}  // namespace

double entropic_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SinkhornConfig& cfg) {
    cfg.validate();
    return ot_cross(side_of(mu), side_of(nu), cfg);
}

double sinkhorn_divergence(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SinkhornConfig& cfg) {
    cfg.validate();
    const SideData x = side_of(mu), y = side_of(nu);
    return ot_cross(x, y, cfg) - 0.5 * ot_self(x, cfg) - 0.5 * ot_self(y, cfg);
}

double w1_line(std::span<const double> xs, std::span<const double> xw, std::span<const double> ys,
               std::span<const double> yw) {
    const bool uniform_pair = xs.size() == ys.size() &&
                              std::all_of(xw.begin(), xw.end(), [&](double w) { return w == xw[0]; }) &&
                              std::all_of(yw.begin(), yw.end(), [&](double w) { return w == xw[0]; });
    if (uniform_pair) {
        // quantile coupling: i-th order statistic to i-th order statistic
        std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
        return s / static_cast<double>(a.size());
    }
    // integral of |F - G| over the merged breakpoints
    std::vector<std::pair<double, double>> ev;
    ev.reserve(xs.size() + ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ev.emplace_back(xs[i], xw[i]);
    for (std::size_t j = 0; j < ys.size(); ++j) ev.emplace_back(ys[j], -yw[j]);
    std::sort(ev.begin(), ev.end());
    double diff = 0.0, total = 0.0;
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
        diff += ev[k].second;
        total += std::abs(diff) * (ev[k + 1].first - ev[k].first);
    }
    return total;
}

double sliced_w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu, std::size_t n_projections, std::uint64_t seed) {
    if (n_projections == 0) throw validation_error("sliced_w1 needs at least one projection");
    Rng rng(seed);
    std::vector<double> angles(n_projections);
    for (auto& a : angles) a = 2.0 * std::numbers::pi * rng.uniform();
    std::vector<double> vals(n_projections);
    kernels::sliced_projections_omp(mu.points(), mu.weights(), nu.points(), nu.weights(), angles, vals);
    double s = 0.0;
    for (double v : vals) s += v;
    return s / static_cast<double>(n_projections);
}

}  // namespace eqalign
