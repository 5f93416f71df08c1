#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rai/instance.hpp"
#include "test_support.hpp"

using Catch::Approx;
using namespace rai;

TEST_CASE("build_instance validates and slices") {
    SECTION("case-study instance") {
        const Instance inst = testsupport::case_study_instance({2, 2, 0});
        REQUIRE(inst.num_arms() == 10);
        REQUIRE(inst.num_clusters() == 3);
        REQUIRE(inst.means[0] == std::vector<double>{0.9, 0.85, 0.7});
        REQUIRE(inst.means[2] == std::vector<double>{0.2, 0.15});
        REQUIRE(inst.global_index(1, 0) == 3);
        REQUIRE(inst.cluster_of(0) == 0);
        REQUIRE(inst.cluster_of(3) == 1);
        REQUIRE(inst.cluster_of(9) == 2);
    }
    SECTION("minimal full-ranking instance") {
        const Instance inst =
            build_instance({1.0, 0.0}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 1}});
        REQUIRE(inst.num_arms() == 2);
    }
    SECTION("rejections") {
        REQUIRE_THROWS_AS(
            build_instance({0.5, 0.5}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}}), spec_error);
        REQUIRE_THROWS_AS(
            build_instance({0.9, 0.8}, ClusterSpec{{1, 1}}, RequirementSpec{{1}}), spec_error);
        REQUIRE_THROWS_AS(
            build_instance({0.9, 0.8}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 2}}), spec_error);
        REQUIRE_THROWS_AS(
            build_instance({0.9, 0.8, 0.7}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}}),
            spec_error);
        REQUIRE_THROWS_AS(
            build_instance({0.5, 0.7}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}}), spec_error);
        REQUIRE_THROWS_AS(
            build_instance({0.5}, ClusterSpec{{0, 1}}, RequirementSpec{{0, 0}}), spec_error);
    }
}

TEST_CASE("arm gaps follow the nearest-neighbor definition") {
    const Instance inst = testsupport::case_study_instance({2, 2, 0});
    CHECK(arm_gap(inst, 0, 2) == Approx(0.04));   // mu = 0.7, nearest below 0.66
    CHECK(arm_gap(inst, 1, 0) == Approx(0.04));   // mu = 0.66, nearest above 0.7
    CHECK(arm_gap(inst, 0, 0) == Approx(0.24));
    CHECK(arm_gap(inst, 2, 1) == Approx(0.20));

    const Instance two = build_instance({1.0, 0.0}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}});
    CHECK(arm_gap(two, 0, 0) == Approx(1.0));  // dummy +inf above

    const Instance solo = build_instance({0.4}, ClusterSpec{{1}}, RequirementSpec{{1}});
    CHECK(std::isinf(arm_gap(solo, 0, 0)));

    REQUIRE_THROWS_AS(arm_gap(inst, 3, 0), spec_error);
    REQUIRE_THROWS_AS(arm_gap(inst, 0, 3), spec_error);
}

TEST_CASE("gap report on the case study") {
    const Instance inst = testsupport::case_study_instance({2, 2, 0});
    const GapReport rep = gap_report(inst);
    CHECK(rep.cluster_bottlenecks[0] == Approx(0.19));
    CHECK(rep.cluster_bottlenecks[1] == Approx(0.15));
    CHECK(std::isinf(rep.cluster_bottlenecks[2]));
    CHECK(rep.bottleneck == Approx(0.15));
}

TEST_CASE("gap report conventions") {
    SECTION("all-zero requirements give an infinite bottleneck") {
        const Instance inst = testsupport::case_study_instance({0, 0, 0});
        CHECK(std::isinf(gap_report(inst).bottleneck));
    }
    SECTION("m-of-top-k identity") {
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            const int n = std::uniform_int_distribution<int>(3, 12)(gen);
            std::vector<double> means;
            while (static_cast<int>(means.size()) < n) {
                double v = unif(gen);
                if (std::find(means.begin(), means.end(), v) == means.end()) means.push_back(v);
            }
            std::sort(means.begin(), means.end(), std::greater<double>());
            const int k = std::uniform_int_distribution<int>(1, n - 1)(gen);
            const int m = std::uniform_int_distribution<int>(1, k)(gen);
            const auto [c, r] = task_preset(Task::m_of_top_k, n, TaskParams{k, m, {}});
            const Instance inst = build_instance(means, c, r);
            const double expect = means[static_cast<std::size_t>(m) - 1] -
                                  means[static_cast<std::size_t>(k)];
            REQUIRE(gap_report(inst).bottleneck == expect);
        }
    }
    SECTION("bottleneck is the minimum over cluster bottlenecks, r_i gaps at or above it") {
        std::mt19937_64 gen(99);
        for (int trial = 0; trial < 200; ++trial) {
            const Instance inst = testsupport::random_instance(gen);
            const GapReport rep = gap_report(inst);
            double lo = testsupport::kInf;
            for (double v : rep.cluster_bottlenecks) lo = std::min(lo, v);
            REQUIRE(rep.bottleneck == lo);
            for (std::size_t i = 0; i < inst.num_clusters(); ++i) {
                const int r = inst.requirements.required[i];
                if (r == 0) continue;
                int at_least = 0;
                for (double g : rep.arm_gaps[i])
                    if (g >= rep.cluster_bottlenecks[i]) ++at_least;
                REQUIRE(at_least >= r);
            }
        }
    }
}

TEST_CASE("gap report matches the brute-force oracle") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const Instance inst = testsupport::random_instance(gen);
        const auto brute = testsupport::brute_force_gaps(inst.means, inst.requirements.required);
        const GapReport rep = gap_report(inst);
        REQUIRE(rep.bottleneck == brute.bottleneck);
        for (std::size_t i = 0; i < inst.num_clusters(); ++i) {
            REQUIRE(rep.cluster_bottlenecks[i] == brute.cluster_bottlenecks[i]);
            REQUIRE(rep.arm_gaps[i] == brute.arm_gaps[i]);
        }
    }
}

TEST_CASE("lower bound") {
    const Instance inst = testsupport::case_study_instance({2, 2, 0});
    // ln(1/delta) / (2 * 0.15^2), evaluated independently.
    const double expect = std::log(100.0) / (2.0 * 0.15 * 0.15);
    CHECK(lower_bound(inst, 0.01) == Approx(expect).epsilon(1e-9));
    CHECK(lower_bound(inst, 0.01) == Approx(102.34).margin(0.01));

    CHECK(lower_bound(testsupport::case_study_instance({0, 0, 0}), 0.01) == 0.0);

    const Instance two = build_instance({1.0, 0.0}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}});
    CHECK(lower_bound(two, std::exp(-1.0)) == Approx(0.5));

    SECTION("monotone in the bottleneck and in 1/delta") {
        double prev = testsupport::kInf;
        for (double gap : {0.05, 0.1, 0.2, 0.4, 0.8}) {
            const Instance i2 =
                build_instance({0.9, 0.9 - gap}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}});
            const double lb = lower_bound(i2, 0.01);
            REQUIRE(lb <= prev);
            prev = lb;
        }
        prev = 0.0;
        for (double delta : {0.5, 0.1, 0.01, 0.001}) {
            const double lb = lower_bound(two, delta);
            REQUIRE(lb >= prev);
            prev = lb;
        }
    }
    REQUIRE_THROWS_AS(lower_bound(two, 0.0), spec_error);
    REQUIRE_THROWS_AS(lower_bound(two, 1.0), spec_error);
}

TEST_CASE("vanilla upper bound") {
    const Instance two = build_instance({1.0, 0.0}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}});
    // Independent evaluation: both arms have gap 1 >= bottleneck 1.
    const double term = 26.0 * std::log(16.0 * rai::pi() * std::sqrt(2.0 / 0.03)) + 1.0;
    CHECK(vanilla_upper_bound(two, 0.01) == Approx(2.0 * term).epsilon(1e-12));
    CHECK(vanilla_upper_bound(two, 0.01) == Approx(314.9).margin(0.05));

    SECTION("doubling every gap quarters each 1/gap^2 factor") {
        const Instance half =
            build_instance({0.5, 0.0}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}});
        const double t_half = (vanilla_upper_bound(half, 0.01) - 2.0) / 2.0;  // per-arm, minus +1
        const double t_full = (vanilla_upper_bound(two, 0.01) - 2.0) / 2.0;
        // term(2g) = (term(g) - (26/g^2) ln 4) / 4 with g = 1/2.
        const double expected = (t_half - 26.0 / 0.25 * std::log(4.0)) / 4.0;
        CHECK(t_full == Approx(expected).epsilon(1e-9));
    }

    SECTION("dominates the lower bound on random instances") {
        std::mt19937_64 gen(5);
        int checked = 0;
        while (checked < 100) {
            const Instance inst = testsupport::random_instance(gen);
            if (std::isinf(gap_report(inst).bottleneck)) continue;
            ++checked;
            for (double delta : {0.1, 0.01}) {
                REQUIRE(vanilla_upper_bound(inst, delta) > lower_bound(inst, delta));
                REQUIRE(butterscotch_upper_bound(inst, delta) > lower_bound(inst, delta));
            }
        }
    }
}

TEST_CASE("butterscotch upper bound") {
    const Instance two = build_instance({1.0, 0.0}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}});
    // gap 1 -> round index clamps to 1, so the 128 ln(...) floor wins.
    const double floor_term = 128.0 * std::log(2.0 * rai::pi() * rai::pi() / 0.03);
    CHECK(butterscotch_upper_bound(two, 0.01) == Approx(2.0 * floor_term).epsilon(1e-12));
    CHECK(butterscotch_upper_bound(two, 0.01) == Approx(1661.3).margin(0.5));

    SECTION("clamp boundary at gap 1/2") {
        const Instance half =
            build_instance({0.75, 0.25}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}});
        const double v = butterscotch_upper_bound(half, 0.01);
        REQUIRE(std::isfinite(v));
        // log2(1/(2*0.5)) = 0 clamps to 1; identical to the gap-1 floor case.
        CHECK(v == Approx(2.0 * floor_term).epsilon(1e-12));
    }

    SECTION("small gaps select the 32/gap^2 branch") {
        const Instance tight =
            build_instance({0.51, 0.49}, ClusterSpec{{1, 1}}, RequirementSpec{{1, 0}});
        const double base = 2.0 * rai::pi() * rai::pi() / 0.03;
        const double rounds = std::ceil(std::log2(1.0 / (2.0 * 0.02)));
        const double branch = 32.0 / (0.02 * 0.02) * std::log(base * rounds * rounds);
        REQUIRE(branch > 128.0 * std::log(base));
        CHECK(butterscotch_upper_bound(tight, 0.01) == Approx(2.0 * branch).epsilon(1e-9));
    }
}

TEST_CASE("task presets reproduce the classical reductions") {
    auto [c1, r1] = task_preset(Task::best_arm, 5);
    CHECK(c1.sizes == std::vector<int>{1, 4});
    CHECK(r1.required == std::vector<int>{1, 0});

    auto [c2, r2] = task_preset(Task::m_of_top_k, 10, TaskParams{5, 2, {}});
    CHECK(c2.sizes == std::vector<int>{5, 5});
    CHECK(r2.required == std::vector<int>{2, 0});

    auto [c3, r3] = task_preset(Task::full_ranking, 3);
    CHECK(c3.sizes == std::vector<int>{1, 1, 1});
    CHECK(r3.required == std::vector<int>{1, 1, 1});

    auto [c4, r4] = task_preset(Task::one_of_top_k, 10, TaskParams{5, 0, {}});
    CHECK(c4.sizes == std::vector<int>{5, 5});
    CHECK(r4.required == std::vector<int>{1, 0});

    auto [c5, r5] = task_preset(Task::top_k, 10, TaskParams{3, 0, {}});
    CHECK(c5.sizes == std::vector<int>{3, 7});
    CHECK(r5.required == std::vector<int>{3, 0});

    auto [c6, r6] = task_preset(Task::coarse_ranking, 20, TaskParams{0, 0, {3, 5, 2}});
    CHECK(c6.sizes == std::vector<int>{6, 10, 4});
    CHECK(r6.required == c6.sizes);

    REQUIRE_THROWS_AS(task_preset(Task::m_of_top_k, 10, TaskParams{5, 6, {}}), spec_error);
    REQUIRE_THROWS_AS(task_preset(Task::one_of_top_k, 10, TaskParams{10, 0, {}}), spec_error);
    REQUIRE_THROWS_AS(task_preset(Task::coarse_ranking, 10, TaskParams{0, 0, {3, 4}}), spec_error);
    REQUIRE_THROWS_AS(task_preset(Task::top_k, 10, TaskParams{0, 0, {}}), spec_error);
}
