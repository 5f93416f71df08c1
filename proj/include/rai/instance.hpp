// instance.hpp -- RAI problem instances, arm/bottleneck gaps, closed-form bounds.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rai {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double pi() { return 3.141592653589793238462643383279502884; }

/// Thrown on invalid instance / configuration data. The CLI maps it to exit code 2.
struct spec_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Cluster sizes c_1..c_m, in decreasing-mean order. Sum equals the arm count N.
struct ClusterSpec {
    std::vector<int> sizes;

    int total() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }
    std::size_t count() const { return sizes.size(); }
};

/// Required representatives r_1..r_m, 0 <= r_i <= c_i.
struct RequirementSpec {
    std::vector<int> required;
};

/// A validated RAI instance: clusters of non-increasing means with strict
/// separation across every cluster boundary. means[i][j] is the j-th largest
/// mean in cluster i. Immutable after construction; safe to share across threads.
struct Instance {
    ClusterSpec clusters;
    RequirementSpec requirements;
    std::vector<std::vector<double>> means;

    int num_arms() const { return clusters.total(); }
    std::size_t num_clusters() const { return clusters.count(); }

    /// Global index (position in the sorted-by-mean order) of arm j of cluster i.
    int global_index(std::size_t cluster, std::size_t j) const {
        int off = 0;
        for (std::size_t k = 0; k < cluster; ++k) off += clusters.sizes[k];
        return off + static_cast<int>(j);
    }

    /// Cluster that owns a global arm index.
    std::size_t cluster_of(int global) const {
        int off = 0;
        for (std::size_t i = 0; i < clusters.count(); ++i) {
            off += clusters.sizes[i];
            if (global < off) return i;
        }
        throw spec_error("arm index out of range: " + std::to_string(global));
    }

    std::vector<double> flat_means() const {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(num_arms()));
        for (const auto& c : means) out.insert(out.end(), c.begin(), c.end());
        return out;
    }
};

/// Per-arm gaps, per-cluster bottlenecks and the instance bottleneck.
/// Unbounded entries are IEEE +infinity; min/comparison follow extended reals.
struct GapReport {
    std::vector<std::vector<double>> arm_gaps;   // mirrors Instance::means layout
    std::vector<double> cluster_bottlenecks;     // r_i-th largest gap, inf when r_i = 0
    double bottleneck = kInf;                    // min over cluster bottlenecks
};

/// Validate and slice a flat non-increasing mean vector into clusters.
/// Rejects length mismatches, r_i outside [0, c_i], unsorted means, and equal
/// means straddling a cluster boundary (the partition must be unique).
inline Instance build_instance(const std::vector<double>& flat_means,
                               const ClusterSpec& sizes,
                               const RequirementSpec& required) {
    if (sizes.sizes.empty()) throw spec_error("cluster sizes must be non-empty");
    if (required.required.size() != sizes.sizes.size())
        throw spec_error("requirement vector length " + std::to_string(required.required.size()) +
                         " does not match cluster count " + std::to_string(sizes.sizes.size()));
    for (std::size_t i = 0; i < sizes.sizes.size(); ++i) {
        if (sizes.sizes[i] < 1)
            throw spec_error("cluster size c_" + std::to_string(i + 1) + " must be >= 1");
        if (required.required[i] < 0 || required.required[i] > sizes.sizes[i])
            throw spec_error("requirement r_" + std::to_string(i + 1) + " outside [0, c_" +
                             std::to_string(i + 1) + "]");
    }
    if (static_cast<int>(flat_means.size()) != sizes.total())
        throw spec_error("got " + std::to_string(flat_means.size()) + " means for " +
                         std::to_string(sizes.total()) + " arms");
    for (std::size_t k = 0; k + 1 < flat_means.size(); ++k) {
        if (flat_means[k] < flat_means[k + 1])
            throw spec_error("means must be sorted non-increasing (violated at position " +
                             std::to_string(k + 1) + ")");
    }

    Instance inst{sizes, required, {}};
    std::size_t pos = 0;
    for (int c : sizes.sizes) {
        inst.means.emplace_back(flat_means.begin() + pos, flat_means.begin() + pos + c);
        pos += static_cast<std::size_t>(c);
    }
    // Strict separation across boundaries: last mean of cluster i must exceed
    // first mean of cluster i+1, else the partition is ambiguous.
    for (std::size_t i = 0; i + 1 < inst.means.size(); ++i) {
        if (!(inst.means[i].back() > inst.means[i + 1].front()))
            throw spec_error("equal or inverted means across boundary of clusters " +
                             std::to_string(i + 1) + " and " + std::to_string(i + 2));
    }
    return inst;
}

/// Gap of arm j in cluster i: distance to the nearest arm of a neighboring
/// cluster, min(mu^{i-1}_last - mu, mu - mu^{i+1}_first), with dummy clusters
/// at +/- infinity beyond the ends.
inline double arm_gap(const Instance& inst, std::size_t cluster, std::size_t j) {
    if (cluster >= inst.num_clusters()) throw spec_error("cluster index out of range");
    if (j >= inst.means[cluster].size()) throw spec_error("arm index out of range");
    const double mu = inst.means[cluster][j];
    const double above = (cluster == 0) ? kInf : inst.means[cluster - 1].back() - mu;
    const double below = (cluster + 1 == inst.num_clusters()) ? kInf
                                                              : mu - inst.means[cluster + 1].front();
    return std::min(above, below);
}

/// Full gap report. The cluster bottleneck is the r_i-th largest arm gap in
/// cluster i (sorted descending, ties by ascending arm index), inf when r_i = 0.
inline GapReport gap_report(const Instance& inst) {
    GapReport rep;
    rep.arm_gaps.resize(inst.num_clusters());
    rep.cluster_bottlenecks.resize(inst.num_clusters());
    for (std::size_t i = 0; i < inst.num_clusters(); ++i) {
        auto& gaps = rep.arm_gaps[i];
        gaps.resize(inst.means[i].size());
        for (std::size_t j = 0; j < gaps.size(); ++j) gaps[j] = arm_gap(inst, i, j);

        const int r = inst.requirements.required[i];
        if (r == 0) {
            rep.cluster_bottlenecks[i] = kInf;
        } else {
            std::vector<double> sorted = gaps;
            std::stable_sort(sorted.begin(), sorted.end(), std::greater<double>());
            rep.cluster_bottlenecks[i] = sorted[static_cast<std::size_t>(r) - 1];
        }
        rep.bottleneck = std::min(rep.bottleneck, rep.cluster_bottlenecks[i]);
    }
    return rep;
}

/// Asymptotic expected-pull floor for any delta-PC scheme over 1/2-Gaussian
/// instances: ln(1/delta) / (2 * bottleneck^2). Zero when nothing is required.
inline double lower_bound(const Instance& inst, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw spec_error("delta must lie in (0, 1)");
    const double gap = gap_report(inst).bottleneck;
    if (std::isinf(gap)) return 0.0;
    return std::log(1.0 / delta) / (2.0 * gap * gap);
}

namespace detail {

// Effective per-arm gap in the upper bounds: arms below the bottleneck stay
// active until the run ends, so they are charged at the bottleneck gap.
inline double effective_gap(double arm, double bottleneck) {
    return arm >= bottleneck ? arm : bottleneck;
}

}  // namespace detail

/// High-probability pull bound for the round-robin scheme with per-round checks:
/// sum over arms of (26/D^2) ln(16*pi*sqrt(N/(3delta)) / D^2) + 1, where D is
/// the arm gap, floored at the bottleneck gap.
inline double vanilla_upper_bound(const Instance& inst, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw spec_error("delta must lie in (0, 1)");
    const GapReport rep = gap_report(inst);
    if (std::isinf(rep.bottleneck)) throw spec_error("bound undefined: bottleneck gap is infinite");
    const double n = inst.num_arms();
    const double c = 16.0 * pi() * std::sqrt(n / (3.0 * delta));
    double total = 0.0;
    for (std::size_t i = 0; i < rep.arm_gaps.size(); ++i) {
        for (double g : rep.arm_gaps[i]) {
            const double d = detail::effective_gap(g, rep.bottleneck);
            total += 26.0 / (d * d) * std::log(c / (d * d)) + 1.0;
        }
    }
    return total;
}

/// High-probability pull bound for the batched scheme:
/// per arm max( (32/D^2) ln(N pi^2/(3delta) * Rs^2), 128 ln(N pi^2/(3delta)) )
/// with Rs = max(1, ceil(log2(1/(2D)))); the clamp keeps the round index >= 1
/// (the log2 term goes non-positive for D > 1/4).
inline double butterscotch_upper_bound(const Instance& inst, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw spec_error("delta must lie in (0, 1)");
    const GapReport rep = gap_report(inst);
    if (std::isinf(rep.bottleneck)) throw spec_error("bound undefined: bottleneck gap is infinite");
    const double n = inst.num_arms();
    const double base = n * pi() * pi() / (3.0 * delta);
    const double floor_term = 128.0 * std::log(base);
    double total = 0.0;
    for (std::size_t i = 0; i < rep.arm_gaps.size(); ++i) {
        for (double g : rep.arm_gaps[i]) {
            const double d = detail::effective_gap(g, rep.bottleneck);
            const double rounds = std::max(1.0, std::ceil(std::log2(1.0 / (2.0 * d))));
            total += std::max(32.0 / (d * d) * std::log(base * rounds * rounds), floor_term);
        }
    }
    return total;
}

enum class Task {
    best_arm,
    one_of_top_k,
    top_k,
    m_of_top_k,
    coarse_ranking,
    full_ranking,
};

inline const char* task_name(Task t) {
    switch (t) {
        case Task::best_arm: return "best-arm";
        case Task::one_of_top_k: return "one-of-top-k";
        case Task::top_k: return "top-k";
        case Task::m_of_top_k: return "m-of-top-k";
        case Task::coarse_ranking: return "coarse-ranking";
        case Task::full_ranking: return "full-ranking";
    }
    throw spec_error("unknown task");
}

inline Task task_from_name(const std::string& name) {
    for (Task t : {Task::best_arm, Task::one_of_top_k, Task::top_k, Task::m_of_top_k,
                   Task::coarse_ranking, Task::full_ranking}) {
        if (name == task_name(t)) return t;
    }
    throw spec_error("unknown task '" + name + "'");
}

struct TaskParams {
    int k = 0;                    // top-K family
    int m = 0;                    // M out of top K
    std::vector<int> ratios;      // coarse ranking, scaled to sum to N
};

/// Map a classical identification task onto (cluster sizes, requirements).
inline std::pair<ClusterSpec, RequirementSpec> task_preset(Task task, int n,
                                                           const TaskParams& params = {}) {
    if (n < 2) throw spec_error("task presets need at least 2 arms");
    auto two_cluster = [n](int k, int r) {
        if (!(k >= 1 && k < n)) throw spec_error("K must satisfy 1 <= K < N");
        return std::make_pair(ClusterSpec{{k, n - k}}, RequirementSpec{{r, 0}});
    };
    switch (task) {
        case Task::best_arm:
            return two_cluster(1, 1);
        case Task::one_of_top_k:
            return two_cluster(params.k, 1);
        case Task::top_k:
            return two_cluster(params.k, params.k);
        case Task::m_of_top_k: {
            if (!(params.m >= 1 && params.m <= params.k))
                throw spec_error("M must satisfy 1 <= M <= K");
            return two_cluster(params.k, params.m);
        }
        case Task::coarse_ranking: {
            if (params.ratios.empty()) throw spec_error("coarse ranking needs cluster ratios");
            long sum = 0;
            for (int v : params.ratios) {
                if (v <= 0) throw spec_error("ratios must be positive");
                sum += v;
            }
            ClusterSpec c;
            for (int v : params.ratios) {
                const long scaled = static_cast<long>(n) * v;
                if (scaled % sum != 0)
                    throw spec_error("ratios do not divide N = " + std::to_string(n) + " evenly");
                c.sizes.push_back(static_cast<int>(scaled / sum));
            }
            RequirementSpec r{c.sizes};  // coarse ranking requires every arm
            return {c, r};
        }
        case Task::full_ranking: {
            ClusterSpec c{std::vector<int>(static_cast<std::size_t>(n), 1)};
            RequirementSpec r{std::vector<int>(static_cast<std::size_t>(n), 1)};
            return {c, r};
        }
    }
    throw spec_error("unknown task");
}

}  // namespace rai
