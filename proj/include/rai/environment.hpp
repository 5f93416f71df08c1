// environment.hpp -- seeded per-arm reward samplers (1/2-subGaussian families).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rai/instance.hpp"

namespace rai {

enum class Family { bernoulli, gaussian_half, empirical };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::bernoulli: return "bernoulli";
        case Family::gaussian_half: return "gaussian-half";
        case Family::empirical: return "empirical";
    }
    throw spec_error("unknown family");
}

inline Family family_from_name(const std::string& name) {
    for (Family f : {Family::bernoulli, Family::gaussian_half, Family::empirical})
        if (name == family_name(f)) return f;
    throw spec_error("unknown reward family '" + name + "'");
}

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Order-sensitive combine: mix(a, b) != mix(b, a) in general.
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b + 0x9E3779B97F4A7C15ULL));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; safe as a log argument.
inline double uniform01_open(std::mt19937_64& g) {
    return static_cast<double>((g() >> 11) + 1) * 0x1.0p-53;
}

/// Standard normal via Box-Muller. Draws two uniforms per call; stateless, so
/// a pull consumes a fixed number of engine steps regardless of history.
inline double standard_normal(std::mt19937_64& g) {
    const double u1 = uniform01_open(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi() * u2);
}

}  // namespace rng

/// One arm's reward distribution. Bernoulli(p), Gaussian(mu, sigma = 1/2),
/// or uniform resampling from a multiset of values in [0,1].
struct ArmSampler {
    Family family = Family::bernoulli;
    double mean = 0.0;
    std::vector<double> atoms;  // empirical family only

    double sample(std::mt19937_64& g) const {
        switch (family) {
            case Family::bernoulli:
                return rng::uniform01(g) < mean ? 1.0 : 0.0;
            case Family::gaussian_half:
                return mean + 0.5 * rng::standard_normal(g);
            case Family::empirical: {
                auto idx = static_cast<std::size_t>(rng::uniform01(g) *
                                                    static_cast<double>(atoms.size()));
                if (idx >= atoms.size()) idx = atoms.size() - 1;
                return atoms[idx];
            }
        }
        throw spec_error("unknown family");
    }
};

/// Reward environment: one sampler per arm, in the instance's sorted-mean
/// order. Algorithms only ever see samples drawn from it.
struct Environment {
    Family family = Family::bernoulli;
    std::vector<ArmSampler> arms;

    int num_arms() const { return static_cast<int>(arms.size()); }
};

/// Deterministic seed derivation: stream(rep, arm) = mix(mix(master, rep), arm).
/// Every (replication, arm) pair owns an independent substream, so the pull
/// order inside an algorithm never perturbs another arm's sequence.
struct SeedPolicy {
    std::uint64_t master = 0;

    std::uint64_t stream_seed(std::uint64_t replication, std::uint64_t arm) const {
        return rng::mix(rng::mix(master, replication), arm);
    }
};

/// Per-replication bundle of arm RNG streams.
class ArmStreams {
public:
    ArmStreams(const SeedPolicy& policy, std::uint64_t replication, int num_arms) {
        engines_.reserve(static_cast<std::size_t>(num_arms));
        for (int a = 0; a < num_arms; ++a)
            engines_.emplace_back(policy.stream_seed(replication, static_cast<std::uint64_t>(a)));
    }

    std::mt19937_64& stream(int arm) { return engines_.at(static_cast<std::size_t>(arm)); }

private:
    std::vector<std::mt19937_64> engines_;
};

inline double multiset_mean(const std::vector<double>& atoms) {
    double s = 0.0;
    for (double v : atoms) s += v;
    return s / static_cast<double>(atoms.size());
}

/// Build the environment matching an instance. Bernoulli and empirical require
/// means in [0,1]; the empirical family takes one rating multiset per arm whose
/// average must reproduce the instance mean (tolerance 1e-9).
inline Environment make_environment(const Instance& inst, Family family,
                                    const std::vector<std::vector<double>>& ratings = {}) {
    Environment env;
    env.family = family;
    const auto flat = inst.flat_means();
    if (family == Family::empirical) {
        if (ratings.size() != flat.size())
            throw spec_error("empirical family needs one rating multiset per arm");
    }
    for (std::size_t a = 0; a < flat.size(); ++a) {
        ArmSampler s;
        s.family = family;
        s.mean = flat[a];
        if (family == Family::bernoulli || family == Family::empirical) {
            if (s.mean < 0.0 || s.mean > 1.0)
                throw spec_error("mean " + std::to_string(s.mean) + " outside [0,1] for bounded family");
        }
        if (family == Family::empirical) {
            s.atoms = ratings[a];
            if (s.atoms.empty()) throw spec_error("empty rating multiset for arm " + std::to_string(a));
            for (double v : s.atoms)
                if (v < 0.0 || v > 1.0) throw spec_error("rating outside [0,1] in arm " + std::to_string(a));
            if (std::abs(multiset_mean(s.atoms) - s.mean) > 1e-9)
                throw spec_error("rating multiset mean disagrees with instance mean for arm " +
                                 std::to_string(a));
        }
        env.arms.push_back(std::move(s));
    }
    return env;
}

/// One i.i.d. draw from an arm; advances that arm's stream.
inline double pull(const Environment& env, int arm, ArmStreams& streams) {
    if (arm < 0 || arm >= env.num_arms())
        throw spec_error("arm index out of range: " + std::to_string(arm));
    return env.arms[static_cast<std::size_t>(arm)].sample(streams.stream(arm));
}

}  // namespace rai
