#include "network_simplex.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>

#include "eqalign/error.hpp"

namespace eqalign::detail {

namespace {
inline double euclid(const BeoCoord& p, const BeoCoord& q) {
    const double dx = p.x - q.x, dy = p.y - q.y;
    return std::sqrt(dx * dx + dy * dy);
}
}  // namespace

NetworkSimplex::NetworkSimplex(std::span<const BeoCoord> xs, std::span<const double> a, std::span<const BeoCoord> ys,
                               std::span<const double> b)
    : xs_(xs),
      ys_(ys),
      m_(static_cast<int>(xs.size())),
      n_(static_cast<int>(ys.size())),
      node_num_(m_ + n_),
      root_(m_ + n_),
      arc_num_(static_cast<Arc>(m_) * n_) {
    supply_.assign(static_cast<std::size_t>(node_num_) + 1, 0.0);
    for (int i = 0; i < m_; ++i) supply_[i] = a[i];
    for (int j = 0; j < n_; ++j) supply_[m_ + j] = -b[j];

    block_size_ = std::max<Arc>(static_cast<Arc>(std::sqrt(static_cast<double>(arc_num_))), 10);

    // upper bound on any ground cost: diagonal of the joint bounding box
    double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x, hi_x = -lo_x, hi_y = -lo_x;
    for (auto pts : {xs, ys}) {
        for (const auto& p : pts) {
            lo_x = std::min(lo_x, p.x);
            hi_x = std::max(hi_x, p.x);
            lo_y = std::min(lo_y, p.y);
            hi_y = std::max(hi_y, p.y);
        }
    }
    const double max_cost = std::hypot(hi_x - lo_x, hi_y - lo_y);
    art_cost_ = (max_cost + 1.0) * static_cast<double>(node_num_);
}

int NetworkSimplex::source(Arc e) const {
    return e < arc_num_ ? static_cast<int>(e / n_) : art_source_[static_cast<std::size_t>(e - arc_num_)];
}

int NetworkSimplex::target(Arc e) const {
    return e < arc_num_ ? m_ + static_cast<int>(e % n_) : art_target_[static_cast<std::size_t>(e - arc_num_)];
}

double NetworkSimplex::cost(Arc e) const {
    if (e < arc_num_) return euclid(xs_[static_cast<std::size_t>(e / n_)], ys_[static_cast<std::size_t>(e % n_)]);
    return art_cost_per_[static_cast<std::size_t>(e - arc_num_)];
}

bool NetworkSimplex::in_tree(Arc e) const { return pred_[source(e)] == e || pred_[target(e)] == e; }

void NetworkSimplex::init() {
    const auto N = static_cast<std::size_t>(node_num_) + 1;
    parent_.assign(N, -1);
    pred_.assign(N, -1);
    thread_.assign(N, 0);
    rev_thread_.assign(N, 0);
    succ_num_.assign(N, 0);
    last_succ_.assign(N, 0);
    pred_dir_.assign(N, 0);
    pi_.assign(N, 0.0);
    flow_.assign(N, 0.0);
    art_source_.assign(static_cast<std::size_t>(node_num_), 0);
    art_target_.assign(static_cast<std::size_t>(node_num_), 0);
    art_cost_per_.assign(static_cast<std::size_t>(node_num_), 0.0);

    double sum_supply = 0.0;
    for (int u = 0; u < node_num_; ++u) sum_supply += supply_[u];

    parent_[root_] = -1;
    pred_[root_] = -1;
    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = node_num_ + 1;
    last_succ_[root_] = root_ - 1;
    supply_[root_] = -sum_supply;
    pi_[root_] = 0.0;

    for (int u = 0; u < node_num_; ++u) {
        const Arc e = arc_num_ + u;
        parent_[u] = root_;
        pred_[u] = e;
        thread_[u] = u + 1;
        rev_thread_[u + 1] = u;
        succ_num_[u] = 1;
        last_succ_[u] = u;
        if (supply_[u] >= 0.0) {
            pred_dir_[u] = kUp;
            pi_[u] = 0.0;
            art_source_[u] = u;
            art_target_[u] = root_;
            flow_[u] = supply_[u];
            art_cost_per_[u] = 0.0;
        } else {
            pred_dir_[u] = kDown;
            pi_[u] = art_cost_;
            art_source_[u] = root_;
            art_target_[u] = u;
            flow_[u] = -supply_[u];
            art_cost_per_[u] = art_cost_;
        }
    }
}

bool NetworkSimplex::find_entering_arc() {
    double min_c = 0.0;
    bool found = false;
    Arc cnt = block_size_;
    Arc e = next_arc_;
    int i = static_cast<int>(e / n_);
    int j = static_cast<int>(e % n_);
    for (Arc k = 0; k < arc_num_; ++k) {
        const double c0 = euclid(xs_[static_cast<std::size_t>(i)], ys_[static_cast<std::size_t>(j)]);
        const double pi_s = pi_[i], pi_t = pi_[m_ + j];
        const double c = c0 + pi_s - pi_t;
        if (c < min_c) {
            // rounding floor: tree arcs sit at zero reduced cost up to a few ulps of the potentials
            const double thr = 8.0 * DBL_EPSILON * (c0 + std::abs(pi_s) + std::abs(pi_t));
            if (c < -thr && !(pred_[i] == e || pred_[m_ + j] == e)) {
                min_c = c;
                in_arc_ = e;
                found = true;
            }
        }
        ++e;
        if (++j == n_) {
            j = 0;
            if (++i == m_) {
                i = 0;
                e = 0;
            }
        }
        if (--cnt == 0) {
            if (found) {
                next_arc_ = e;
                return true;
            }
            cnt = block_size_;
        }
    }
    if (found) {
        next_arc_ = e;
        return true;
    }
    return false;
}

void NetworkSimplex::find_join_node() {
    int u = source(in_arc_), v = target(in_arc_);
    while (u != v) {
        if (succ_num_[u] < succ_num_[v]) {
            u = parent_[u];
        } else {
            v = parent_[v];
        }
    }
    join_ = u;
}

void NetworkSimplex::find_leaving_arc() {
    // uncapacitated: the entering arc is at its lower bound, so the cycle runs source -> target
    const int first = source(in_arc_);
    const int second = target(in_arc_);
    delta_ = std::numeric_limits<double>::infinity();
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
        if (pred_dir_[u] == kUp && flow_[u] < delta_) {
            delta_ = flow_[u];
            u_out_ = u;
            result = 1;
        }
    }
    for (int u = second; u != join_; u = parent_[u]) {
        if (pred_dir_[u] == kDown && flow_[u] <= delta_) {
            delta_ = flow_[u];
            u_out_ = u;
            result = 2;
        }
    }
    if (result == 0) throw Error(ErrorKind::Convergence, "network simplex: unbounded cycle");
    if (result == 1) {
        u_in_ = first;
        v_in_ = second;
    } else {
        u_in_ = second;
        v_in_ = first;
    }
}

void NetworkSimplex::change_flow() {
    if (delta_ > 0.0) {
        for (int u = source(in_arc_); u != join_; u = parent_[u]) flow_[u] -= pred_dir_[u] * delta_;
        for (int u = target(in_arc_); u != join_; u = parent_[u]) flow_[u] += pred_dir_[u] * delta_;
    }
    flow_[u_out_] = 0.0;
}

void NetworkSimplex::update_tree_structure() {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];
    const double in_flow = delta_;

    if (u_in_ == u_out_) {
        parent_[u_in_] = v_in_;
        pred_[u_in_] = in_arc_;
        pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
        flow_[u_in_] = in_flow;

        if (thread_[v_in_] != u_out_) {
            int after = thread_[old_last_succ];
            thread_[old_rev_thread] = after;
            rev_thread_[after] = old_rev_thread;
            after = thread_[v_in_];
            thread_[v_in_] = u_out_;
            rev_thread_[u_out_] = v_in_;
            thread_[old_last_succ] = after;
            rev_thread_[after] = old_last_succ;
        }
    } else {
        // when old_rev_thread == v_in, join and v_out coincide
        const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

        // re-hang the stem u_in .. u_out under v_in, fixing thread order as we go
        int stem = u_in_;
        int par_stem = v_in_;
        int next_stem;
        int last = last_succ_[u_in_];
        int before, after = thread_[last];
        thread_[v_in_] = u_in_;
        dirty_revs_.clear();
        dirty_revs_.push_back(v_in_);
        while (stem != u_out_) {
            next_stem = parent_[stem];
            thread_[last] = next_stem;
            dirty_revs_.push_back(last);

            before = rev_thread_[stem];
            thread_[before] = after;
            rev_thread_[after] = before;

            parent_[stem] = par_stem;
            par_stem = stem;
            stem = next_stem;

            last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
            after = thread_[last];
        }
        parent_[u_out_] = par_stem;
        thread_[last] = thread_continue;
        rev_thread_[thread_continue] = last;
        last_succ_[u_out_] = last;

        if (old_rev_thread != v_in_) {
            thread_[old_rev_thread] = after;
            rev_thread_[after] = old_rev_thread;
        }

        for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

        // pred arcs (and their flows) shift one step along the reversed stem
        int tmp_sc = 0;
        const int tmp_ls = last_succ_[u_out_];
        for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
            pred_[u] = pred_[p];
            pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
            flow_[u] = flow_[p];
            tmp_sc += succ_num_[u] - succ_num_[p];
            succ_num_[u] = tmp_sc;
            last_succ_[p] = tmp_ls;
        }
        pred_[u_in_] = in_arc_;
        pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
        flow_[u_in_] = in_flow;
        succ_num_[u_in_] = old_succ_num;
    }

    const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    const int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
        for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
            last_succ_[u] = old_rev_thread;
        }
    } else if (last_succ_out != old_last_succ) {
        for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
            last_succ_[u] = last_succ_out;
        }
    }

    for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void NetworkSimplex::update_potential() {
    const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost(in_arc_);
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

void NetworkSimplex::refresh_potentials() {
    pi_[root_] = 0.0;
    for (int u = thread_[root_]; u != root_; u = thread_[u]) {
        const double c = cost(pred_[u]);
        pi_[u] = pred_dir_[u] == kUp ? pi_[parent_[u]] - c : pi_[parent_[u]] + c;
    }
}

void NetworkSimplex::run() {
    init();
    if (arc_num_ == 0) return;
    const std::uint64_t max_pivots = 50ULL * static_cast<std::uint64_t>(arc_num_) + 1000000ULL;
    for (;;) {
        while (find_entering_arc()) {
            find_join_node();
            find_leaving_arc();
            change_flow();
            update_tree_structure();
            update_potential();
            if (++pivots_ > max_pivots) {
                throw Error(ErrorKind::Convergence, fmt::format("network simplex: no optimum after {} pivots", pivots_));
            }
        }
        // incremental potential updates drift; recompute them exactly from the
        // tree and only stop once the fresh potentials also price out clean
        refresh_potentials();
        if (!find_entering_arc()) break;
        find_join_node();
        find_leaving_arc();
        change_flow();
        update_tree_structure();
        update_potential();
        ++pivots_;
    }

    double stray = 0.0;
    for (int u = 0; u < node_num_; ++u) {
        if (pred_[u] >= arc_num_) stray += flow_[u];
    }
    if (stray > 1e-8) {
        throw validation_error(fmt::format("transport problem infeasible: {} mass unmatched", stray));
    }
}

double NetworkSimplex::total_cost() const {
    double total = 0.0;
    for (int u = 0; u < node_num_; ++u) {
        if (pred_[u] < arc_num_ && flow_[u] > 0.0) total += flow_[u] * cost(pred_[u]);
    }
    return total;
}

std::vector<PlanCell> NetworkSimplex::plan() const {
    std::vector<PlanCell> cells;
    for (int u = 0; u < node_num_; ++u) {
        const Arc e = pred_[u];
        if (e < arc_num_ && flow_[u] > 0.0) {
            cells.push_back({static_cast<std::size_t>(e / n_), static_cast<std::size_t>(e % n_), flow_[u]});
        }
    }
    std::sort(cells.begin(), cells.end(),
              [](const PlanCell& a, const PlanCell& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    return cells;
}

std::vector<double> NetworkSimplex::source_potential() const {
    std::vector<double> f(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) f[i] = -pi_[i];
    return f;
}

std::vector<double> NetworkSimplex::target_potential() const {
    std::vector<double> g(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) g[j] = pi_[m_ + j];
    return g;
}

}  // namespace eqalign::detail
