// algorithms.hpp -- the three delta-PC identification procedures: vanilla
// round robin, butterscotch batched round robin, and an LUCB-style sampler.
//
// Algorithms see only (cluster sizes, requirements, delta) plus a pull oracle;
// true means stay quarantined inside the environment.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "rai/instance.hpp"

namespace rai {

/// Confidence radius used by the per-round membership check:
/// sqrt( ln(pi^2 R^2 N / (3 delta)) / (2R) ).
inline double vanilla_radius(std::int64_t round, int num_arms, double delta) {
    const double r = static_cast<double>(round);
    return std::sqrt(std::log(pi() * pi() * r * r * num_arms / (3.0 * delta)) / (2.0 * r));
}

/// Cumulative per-arm pull target for the batched scheme at round R:
/// ceil( 2^(2R+5) * ln(pi^2 R^2 N / (3 delta)) ), with schedule(0) = 0.
/// Chosen so the confidence width after round R is ~2^-(R+3).
inline std::int64_t butterscotch_schedule(std::int64_t round, int num_arms, double delta) {
    if (round <= 0) return 0;
    const double r = static_cast<double>(round);
    const double t = std::ldexp(1.0, static_cast<int>(2 * round + 5)) *
                     std::log(pi() * pi() * r * r * num_arms / (3.0 * delta));
    // Saturate instead of overflowing; callers' budget guards abort first.
    if (!(t < 9.0e18)) return std::numeric_limits<std::int64_t>::max();
    return static_cast<std::int64_t>(std::ceil(t));
}

/// Mutable run state shared by all three algorithms.
struct AlgorithmState {
    std::vector<int> cluster_sizes;          // c_i (fixed)
    std::vector<int> required;               // r_i (fixed)
    std::vector<int> residual_sizes;         // c~_i, live
    std::vector<char> active;                // per-arm membership in A
    int active_count = 0;
    std::vector<std::uint64_t> pulls;        // per-arm pull counts
    std::vector<double> sums;                // per-arm reward sums
    std::vector<std::vector<int>> outputs;   // O_i, global arm ids
    std::int64_t round = 0;
    std::uint64_t total_pulls = 0;

    static AlgorithmState make(const ClusterSpec& c, const RequirementSpec& r) {
        if (r.required.size() != c.sizes.size())
            throw spec_error("requirement vector length does not match cluster count");
        AlgorithmState st;
        st.cluster_sizes = c.sizes;
        st.required = r.required;
        st.residual_sizes = c.sizes;
        const int n = c.total();
        st.active.assign(static_cast<std::size_t>(n), 1);
        st.active_count = n;
        st.pulls.assign(static_cast<std::size_t>(n), 0);
        st.sums.assign(static_cast<std::size_t>(n), 0.0);
        st.outputs.resize(c.sizes.size());
        return st;
    }

    int num_arms() const { return static_cast<int>(active.size()); }
    std::size_t num_clusters() const { return cluster_sizes.size(); }
    bool is_active(int arm) const { return active[static_cast<std::size_t>(arm)] != 0; }
    double mean(int arm) const {
        const auto a = static_cast<std::size_t>(arm);
        return pulls[a] ? sums[a] / static_cast<double>(pulls[a]) : 0.0;
    }

    void record(int arm, double reward) {
        const auto a = static_cast<std::size_t>(arm);
        ++pulls[a];
        sums[a] += reward;
        ++total_pulls;
    }

    bool requirements_met() const {
        for (std::size_t i = 0; i < required.size(); ++i)
            if (static_cast<int>(outputs[i].size()) != required[i]) return false;
        return true;
    }
};

/// Blocks A_1..A_m of sizes c~_1..c~_m, filled from the active arms sorted by
/// empirical mean descending (ties by ascending global index).
struct EmpiricalPartition {
    std::vector<std::vector<int>> blocks;
};

inline EmpiricalPartition partition_active(const AlgorithmState& st) {
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(st.active_count));
    for (int a = 0; a < st.num_arms(); ++a)
        if (st.is_active(a)) order.push_back(a);
    if (static_cast<int>(order.size()) !=
        std::accumulate(st.residual_sizes.begin(), st.residual_sizes.end(), 0))
        throw spec_error("residual sizes do not cover the active set");
    std::sort(order.begin(), order.end(), [&st](int a, int b) {
        const double ma = st.mean(a), mb = st.mean(b);
        if (ma != mb) return ma > mb;
        return a < b;
    });
    EmpiricalPartition part;
    part.blocks.resize(st.num_clusters());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < st.num_clusters(); ++i) {
        const auto sz = static_cast<std::size_t>(st.residual_sizes[i]);
        part.blocks[i].assign(order.begin() + pos, order.begin() + pos + sz);
        pos += sz;
    }
    return part;
}

/// Membership check for an arm placed in block `block`: it must be separated
/// by more than `margin` from at least sum_{j<block} c~_j arms currently in
/// earlier blocks and sum_{j>block} c~_j arms currently in later blocks.
/// Arms already finalized this round no longer count ("currently placed").
inline bool membership_check(const AlgorithmState& st, const EmpiricalPartition& part,
                             std::size_t block, int arm, double margin) {
    const double mu = st.mean(arm);
    int need_above = 0, need_below = 0;
    for (std::size_t j = 0; j < block; ++j) need_above += st.residual_sizes[j];
    for (std::size_t j = block + 1; j < st.num_clusters(); ++j) need_below += st.residual_sizes[j];

    int better = 0;
    for (std::size_t j = 0; j < block && better < need_above; ++j)
        for (int other : part.blocks[j])
            if (st.is_active(other) && st.mean(other) - mu > margin) ++better;
    if (better < need_above) return false;

    int worse = 0;
    for (std::size_t j = block + 1; j < st.num_clusters() && worse < need_below; ++j)
        for (int other : part.blocks[j])
            if (st.is_active(other) && mu - st.mean(other) > margin) ++worse;
    return worse >= need_below;
}

/// Finalize an arm into cluster i: join O_i while representatives are still
/// needed, otherwise discard; either way it leaves the active set.
inline void finalize_arm(AlgorithmState& st, int arm, std::size_t cluster) {
    if (static_cast<int>(st.outputs[cluster].size()) < st.required[cluster])
        st.outputs[cluster].push_back(arm);
    st.active[static_cast<std::size_t>(arm)] = 0;
    --st.active_count;
    --st.residual_sizes[cluster];
}

/// Merge cluster i-1 into cluster i once both requirements are met; no-op
/// otherwise. Relaxes the membership check for the combined block.
inline void merge_satisfied(AlgorithmState& st, std::size_t cluster) {
    if (cluster == 0 || cluster >= st.num_clusters()) return;
    if (static_cast<int>(st.outputs[cluster - 1].size()) != st.required[cluster - 1]) return;
    if (static_cast<int>(st.outputs[cluster].size()) != st.required[cluster]) return;
    st.residual_sizes[cluster] += st.residual_sizes[cluster - 1];
    st.residual_sizes[cluster - 1] = 0;
}

struct RunOptions {
    bool merging = true;
    std::uint64_t pull_budget = 1'000'000'000ULL;
};

/// Outcome of one algorithm run. On normal termination |O_i| = r_i for all i;
/// `completed` is false when the pull budget guard fired.
struct RunResult {
    std::vector<std::vector<int>> outputs;
    std::vector<std::uint64_t> per_arm_pulls;
    std::uint64_t total_pulls = 0;
    std::int64_t rounds = 0;
    bool completed = false;
};

namespace detail {

inline RunResult result_from(const AlgorithmState& st, bool completed) {
    RunResult res;
    res.outputs = st.outputs;
    res.per_arm_pulls = st.pulls;
    res.total_pulls = st.total_pulls;
    res.rounds = st.round;
    res.completed = completed;
    return res;
}

// One membership/merge sweep shared by the two round-robin schemes.
inline void elimination_sweep(AlgorithmState& st, double margin, bool merging) {
    const EmpiricalPartition part = partition_active(st);
    for (std::size_t i = 0; i < st.num_clusters(); ++i) {
        for (int arm : part.blocks[i]) {
            if (!st.is_active(arm)) continue;
            if (membership_check(st, part, i, arm, margin)) finalize_arm(st, arm, i);
        }
        if (merging) merge_satisfied(st, i);
    }
}

}  // namespace detail

/// Round-robin elimination with a per-round check: every active arm is pulled
/// once per round and finalized as soon as it separates from the other blocks
/// by twice the confidence radius.
template <class PullFn>
RunResult run_vanilla(const ClusterSpec& c, const RequirementSpec& r, double delta,
                      const RunOptions& opts, PullFn&& pull_arm) {
    AlgorithmState st = AlgorithmState::make(c, r);
    const int n = st.num_arms();
    while (!st.requirements_met()) {
        if (st.total_pulls + static_cast<std::uint64_t>(st.active_count) > opts.pull_budget)
            return detail::result_from(st, false);
        ++st.round;
        for (int a = 0; a < n; ++a)
            if (st.is_active(a)) st.record(a, pull_arm(a));
        const double margin = 2.0 * vanilla_radius(st.round, n, delta);
        detail::elimination_sweep(st, margin, opts.merging);
    }
    return detail::result_from(st, true);
}

/// Batched round robin: round R tops every active arm up to the cumulative
/// schedule, then checks membership at margin 2^-(R+2).
template <class PullFn>
RunResult run_butterscotch(const ClusterSpec& c, const RequirementSpec& r, double delta,
                           const RunOptions& opts, PullFn&& pull_arm) {
    AlgorithmState st = AlgorithmState::make(c, r);
    const int n = st.num_arms();
    std::int64_t prev_target = 0;
    while (!st.requirements_met()) {
        const std::int64_t target = butterscotch_schedule(st.round + 1, n, delta);
        const auto batch = static_cast<std::uint64_t>(target - prev_target);
        const std::uint64_t remaining =
            opts.pull_budget > st.total_pulls ? opts.pull_budget - st.total_pulls : 0;
        if (st.active_count <= 0 ||
            batch > remaining / static_cast<std::uint64_t>(st.active_count))
            return detail::result_from(st, false);
        ++st.round;
        for (int a = 0; a < n; ++a) {
            if (!st.is_active(a)) continue;
            for (std::uint64_t k = 0; k < batch; ++k) st.record(a, pull_arm(a));
        }
        prev_target = target;
        const double margin = std::ldexp(1.0, -static_cast<int>(st.round + 2));
        detail::elimination_sweep(st, margin, opts.merging);
    }
    return detail::result_from(st, true);
}

// ---------------------------------------------------------------------------
// LUCB-style sampler.
// ---------------------------------------------------------------------------

/// Lower/upper confidence bounds for one arm at round R with R_j pulls:
/// mu_hat -/+ sqrt( ln(pi^2 R^3 N / (3 delta)) / (2 R_j) ).
struct ConfidenceBounds {
    double lcb = 0.0;
    double ucb = 0.0;
};

inline double lucb_radius(std::int64_t round, std::uint64_t arm_pulls, int num_arms, double delta) {
    const double r = static_cast<double>(round);
    return std::sqrt(std::log(pi() * pi() * r * r * r * num_arms / (3.0 * delta)) /
                     (2.0 * static_cast<double>(arm_pulls)));
}

inline ConfidenceBounds lucb_bounds(std::int64_t round, std::uint64_t arm_pulls, int num_arms,
                                    double delta, double mean) {
    const double rad = lucb_radius(round, arm_pulls, num_arms, delta);
    return {mean - rad, mean + rad};
}

/// Empirical gap of an arm given its own bounds and the neighbor-block
/// aggregates (lowest LCB in the block above, highest UCB in the block
/// below): max(ucb_arm - lcb_above, ucb_below - lcb_arm). Positive while the
/// arm's interval still overlaps a neighbor block. Sentinels +inf / -inf make
/// the corresponding term drop out at the boundary clusters.
inline double lucb_empirical_gap(const ConfidenceBounds& arm, double lcb_above, double ucb_below) {
    // +inf above / -inf below sentinels turn the respective term into -inf.
    return std::max(arm.ucb - lcb_above, ucb_below - arm.lcb);
}

namespace detail {

// Neighbor-block aggregates for one block: the lowest LCB among active arms
// of the nearest non-empty earlier block (the "worst interval" above) and the
// highest UCB among active arms of the nearest non-empty later block (the
// "best interval" below), together with the arms attaining them. Dummy
// sentinels +inf / -inf when no active arm exists on a side.
struct NeighborBounds {
    double lcb_above = kInf;
    double ucb_below = -kInf;
    int arm_above = -1;
    int arm_below = -1;
};

template <class BoundsFn>
NeighborBounds neighbor_bounds(const AlgorithmState& st, const EmpiricalPartition& part,
                               std::size_t block, BoundsFn&& bounds_of) {
    NeighborBounds nb;
    for (std::size_t j = block; j-- > 0;) {
        for (int arm : part.blocks[j]) {
            if (!st.is_active(arm)) continue;
            const double v = bounds_of(arm).lcb;
            if (nb.arm_above < 0 || v < nb.lcb_above) {
                nb.lcb_above = v;
                nb.arm_above = arm;
            }
        }
        if (nb.arm_above >= 0) break;
    }
    for (std::size_t j = block + 1; j < part.blocks.size(); ++j) {
        for (int arm : part.blocks[j]) {
            if (!st.is_active(arm)) continue;
            const double v = bounds_of(arm).ucb;
            if (nb.arm_below < 0 || v > nb.ucb_below) {
                nb.ucb_below = v;
                nb.arm_below = arm;
            }
        }
        if (nb.arm_below >= 0) break;
    }
    return nb;
}

}  // namespace detail

/// LUCB-style scheme: one initial sweep, then per round only the arms that
/// most obstruct an unmet cluster's decision are pulled -- the cluster's
/// minimum-empirical-gap arm plus the boundary arms of the neighboring blocks
/// (those attaining the aggregates above). An arm is finalized when its
/// interval lies strictly below the worst interval of the block above and
/// strictly above the best interval of the block below.
template <class PullFn>
RunResult run_lucb(const ClusterSpec& c, const RequirementSpec& r, double delta,
                   const RunOptions& opts, PullFn&& pull_arm) {
    AlgorithmState st = AlgorithmState::make(c, r);
    const int n = st.num_arms();
    if (static_cast<std::uint64_t>(n) > opts.pull_budget) return detail::result_from(st, false);
    for (int a = 0; a < n; ++a) st.record(a, pull_arm(a));  // unconditional initial sweep

    while (!st.requirements_met()) {
        ++st.round;
        const EmpiricalPartition part = partition_active(st);
        auto bounds_of = [&](int arm) {
            return lucb_bounds(st.round, st.pulls[static_cast<std::size_t>(arm)], n, delta,
                               st.mean(arm));
        };

        std::vector<int> to_pull;
        for (std::size_t i = 0; i < st.num_clusters(); ++i) {
            // One aggregate view per cluster pass; only block-i arms finalize
            // during it, so the neighbor aggregates stay valid throughout.
            const auto nb = detail::neighbor_bounds(st, part, i, bounds_of);

            for (int arm : part.blocks[i]) {
                if (!st.is_active(arm)) continue;
                const ConfidenceBounds b = bounds_of(arm);
                // Strictly below every interval above and above every interval
                // below; the sentinels make boundary clusters vacuous.
                if (b.ucb < nb.lcb_above && b.lcb > nb.ucb_below) finalize_arm(st, arm, i);
            }

            if (static_cast<int>(st.outputs[i].size()) == st.required[i]) continue;

            // Candidate targets inside the block: the arm most likely to be
            // confirmed next and the most optimistic one (max UCB). Likelihood
            // is ranked by the point estimate against the neighbor intervals;
            // ranking by the arm's own interval instead would keep favoring
            // whichever arm has been pulled most, starving cheaper candidates.
            // The optimist is what reaches under-sampled arms whose wide
            // intervals would otherwise freeze the partition around them.
            int gap_arm = -1, optimist = -1;
            double best_gap = kInf, best_ucb = -kInf;
            for (int arm : part.blocks[i]) {
                if (!st.is_active(arm)) continue;
                const ConfidenceBounds b = bounds_of(arm);
                const double mid = st.mean(arm);
                const double g = lucb_empirical_gap({mid, mid}, nb.lcb_above, nb.ucb_below);
                if (g < best_gap) { best_gap = g; gap_arm = arm; }
                if (b.ucb > best_ucb) { best_ucb = b.ucb; optimist = arm; }
            }

            for (int arm : {gap_arm, optimist, nb.arm_above, nb.arm_below}) {
                if (arm < 0) continue;
                if (std::find(to_pull.begin(), to_pull.end(), arm) == to_pull.end())
                    to_pull.push_back(arm);
            }
            if (st.total_pulls + to_pull.size() > opts.pull_budget)
                return detail::result_from(st, false);
            for (int arm : to_pull) st.record(arm, pull_arm(arm));
            to_pull.clear();
        }
    }
    return detail::result_from(st, true);
}

}  // namespace rai
