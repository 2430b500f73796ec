#pragma once

// Primal network simplex for the dense transportation problem with Euclidean
// ground cost. Tree bookkeeping (thread / rev_thread / succ_num / last_succ)
// follows the classic LEMON layout; the arc set is implicit (arc e joins
// source e / n with sink e % n), and flow is stored per tree node because
// non-tree arcs of an uncapacitated problem always carry zero flow. Memory is
// therefore O(m + n) even for 10k x 10k instances.

#include <cstdint>
#include <span>
#include <vector>

#include "eqalign/beosonic.hpp"
#include "eqalign/transport.hpp"

namespace eqalign::detail {

class NetworkSimplex {
public:
    NetworkSimplex(std::span<const BeoCoord> xs, std::span<const double> a, std::span<const BeoCoord> ys,
                   std::span<const double> b);

    /// Solve to optimality. Throws if the problem turns out infeasible.
    void run();

    double total_cost() const;
    std::vector<PlanCell> plan() const;
    /// f_i = -pi_i for sources, g_j = pi_{m+j} for sinks.
    std::vector<double> source_potential() const;
    std::vector<double> target_potential() const;
    std::uint64_t pivots() const { return pivots_; }

private:
    using Arc = std::int64_t;
    static constexpr signed char kUp = 1;
    static constexpr signed char kDown = -1;

    int source(Arc e) const;
    int target(Arc e) const;
    double cost(Arc e) const;
    bool in_tree(Arc e) const;

    void init();
    bool find_entering_arc();
    void find_join_node();
    void find_leaving_arc();
    void change_flow();
    void update_tree_structure();
    void update_potential();
    void refresh_potentials();

    std::span<const BeoCoord> xs_, ys_;
    int m_, n_, node_num_, root_;
    Arc arc_num_;
    Arc block_size_;
    Arc next_arc_ = 0;
    double art_cost_ = 0.0;

    std::vector<double> supply_;
    std::vector<int> art_source_, art_target_;
    std::vector<double> art_cost_per_;

    std::vector<int> parent_, thread_, rev_thread_, succ_num_, last_succ_;
    std::vector<Arc> pred_;
    std::vector<signed char> pred_dir_;
    std::vector<double> pi_;
    std::vector<double> flow_;  // flow on pred_[u]
    std::vector<int> dirty_revs_;

    // pivot state
    Arc in_arc_ = -1;
    int join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1, v_out_ = -1;
    double delta_ = 0.0;
    std::uint64_t pivots_ = 0;
};

}  // namespace eqalign::detail
