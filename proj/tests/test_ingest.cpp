#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "rai/ingest.hpp"

using Catch::Approx;
using namespace rai;

namespace {

// The checked-in fixture: 10 items x 20 ratings, normalized means 0.90 down
// to 0.18 in steps of 0.08.
const char* kFixture = RAI_TEST_DATA_DIR "/ratings_fixture.csv";

std::string write_temp(const std::string& body) {
    static int counter = 0;
    const auto path = std::filesystem::temp_directory_path() /
                      ("rai_ingest_tmp_" + std::to_string(counter++) + ".csv");
    std::ofstream out(path);
    out << body;
    return path.string();
}

}  // namespace

TEST_CASE("parse_ratings accepts well-formed files") {
    const auto path = write_temp(
        "userId,movieId,rating,timestamp\n"
        "1,10,4.0,964982703\n"
        "2,10,5.0,964982704\n");
    const RatingsTable table = parse_ratings(path, 5.0);
    REQUIRE(table.records.size() == 2);
    CHECK(table.records[0].user == 1);
    CHECK(table.records[0].item == 10);
    CHECK(table.records[0].rating == 4.0);
    CHECK(table.records[1].rating == 5.0);
    std::remove(path.c_str());

    SECTION("CRLF line endings parse identically") {
        const auto crlf = write_temp(
            "userId,movieId,rating,timestamp\r\n"
            "1,10,4.0,964982703\r\n");
        CHECK(parse_ratings(crlf, 5.0).records.size() == 1);
        std::remove(crlf.c_str());
    }
}

TEST_CASE("parse_ratings rejections carry line context") {
    const auto bad_header = write_temp("user,movie,rating,ts\n1,10,4.0,1\n");
    REQUIRE_THROWS_AS(parse_ratings(bad_header, 5.0), parse_error);
    std::remove(bad_header.c_str());

    const auto empty = write_temp("userId,movieId,rating,timestamp\n");
    REQUIRE_THROWS_WITH(parse_ratings(empty, 5.0), Catch::Matchers::ContainsSubstring("no rating"));
    std::remove(empty.c_str());

    const auto out_of_range = write_temp(
        "userId,movieId,rating,timestamp\n"
        "1,10,4.0,1\n"
        "2,10,6.0,2\n");
    REQUIRE_THROWS_WITH(parse_ratings(out_of_range, 5.0), Catch::Matchers::ContainsSubstring(":3:"));
    std::remove(out_of_range.c_str());

    const auto non_numeric = write_temp(
        "userId,movieId,rating,timestamp\n"
        "1,10,great,1\n");
    REQUIRE_THROWS_WITH(parse_ratings(non_numeric, 5.0), Catch::Matchers::ContainsSubstring(":2:"));
    std::remove(non_numeric.c_str());

    REQUIRE_THROWS_AS(parse_ratings("does_not_exist.csv", 5.0), parse_error);
}

TEST_CASE("top_items selects by count then sorts by normalized mean") {
    const auto path = write_temp(
        "userId,movieId,rating,timestamp\n"
        "1,1,1.0,1\n1,1,1.5,2\n1,1,2.0,3\n"   // item 1: 3 ratings, low mean
        "2,2,4.0,4\n2,2,5.0,5\n"              // item 2: 2 ratings, mean 0.9
        "3,3,3.0,6\n");                        // item 3: 1 rating
    const RatingsTable table = parse_ratings(path, 5.0);
    const auto items = top_items(table, 2);
    REQUIRE(items.size() == 2);
    // Items 1 and 2 retained by count; sorted by mean descending.
    CHECK(items[0].item == 2);
    CHECK(items[0].normalized_mean == Approx(0.9));
    CHECK(items[0].rating_count == 2);
    CHECK(items[1].item == 1);
    CHECK(items[1].normalized_mean == Approx(0.3));
    REQUIRE_THROWS_AS(top_items(table, 4), parse_error);
    std::remove(path.c_str());

    SECTION("count ties break by ascending item id") {
        const auto tie = write_temp(
            "userId,movieId,rating,timestamp\n"
            "1,7,2.0,1\n"
            "2,5,3.0,2\n"
            "3,9,4.0,3\n");
        const auto tied = top_items(parse_ratings(tie, 5.0), 2);
        // All counts equal: items 5 and 7 survive; sorted by mean.
        REQUIRE(tied.size() == 2);
        CHECK(tied[0].item == 5);
        CHECK(tied[1].item == 7);
        std::remove(tie.c_str());
    }
}

TEST_CASE("fixture ingestion round-trips the multiset averages") {
    const RatingsTable table = parse_ratings(kFixture, 5.0);
    REQUIRE(table.records.size() == 200);
    const auto items = top_items(table, 10);
    REQUIRE(items.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK(items[k].rating_count == 20);
        CHECK(items[k].item == static_cast<std::int64_t>(101 + k));
        CHECK(items[k].normalized_mean == Approx(0.9 - 0.08 * static_cast<double>(k)).margin(1e-12));
    }

    auto [inst, env] = build_movielens_instance(items, ClusterSpec{{3, 5, 2}},
                                                RequirementSpec{{3, 5, 2}});
    REQUIRE(inst.num_arms() == 10);
    const auto flat = inst.flat_means();
    for (std::size_t k = 0; k < 10; ++k) {
        REQUIRE(std::abs(flat[k] - multiset_mean(items[k].normalized_ratings)) <= 1e-12);
        REQUIRE(env.arms[k].atoms.size() == 20);
    }

    SECTION("re-running the selection is stable") {
        const auto again = top_items(parse_ratings(kFixture, 5.0), 10);
        for (std::size_t k = 0; k < 10; ++k) REQUIRE(again[k].item == items[k].item);
    }
}

TEST_CASE("boundary-equal means are rejected with the offending pair") {
    ItemSummary a{1, 1, 0.8, {0.8}};
    ItemSummary b{2, 1, 0.5, {0.5}};
    ItemSummary c{3, 1, 0.5, {0.5}};
    REQUIRE_THROWS_WITH(
        build_movielens_instance({a, b, c}, ClusterSpec{{2, 1}}, RequirementSpec{{1, 0}}),
        Catch::Matchers::ContainsSubstring("2") && Catch::Matchers::ContainsSubstring("3"));
    // The same items split so the tie is inside a cluster are fine.
    REQUIRE_NOTHROW(
        build_movielens_instance({a, b, c}, ClusterSpec{{1, 2}}, RequirementSpec{{1, 0}}));
}
