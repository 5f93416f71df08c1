// ingest.hpp -- build an RAI instance and empirical environment from a
// MovieLens-style ratings CSV (header: userId,movieId,rating,timestamp).
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rai/environment.hpp"
#include "rai/instance.hpp"

namespace rai {

/// Thrown on unreadable or malformed ratings data. The CLI maps it to exit code 3.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RatingRecord {
    std::int64_t user = 0;
    std::int64_t item = 0;
    double rating = 0.0;
    std::int64_t timestamp = 0;  // parsed and otherwise ignored
};

struct RatingsTable {
    std::vector<RatingRecord> records;
    double raw_max = 5.0;
};

/// Per-item view after normalization by raw_max.
struct ItemSummary {
    std::int64_t item = 0;
    std::size_t rating_count = 0;
    double normalized_mean = 0.0;
    std::vector<double> normalized_ratings;
};

namespace detail {

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// Parse a ratings CSV. Every malformed line is rejected with its line number;
/// ratings must lie in (0, raw_max].
inline RatingsTable parse_ratings(const std::string& path, double raw_max) {
    if (!(raw_max > 0.0)) throw parse_error("raw_max must be positive");
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open ratings file '" + path + "'");

    RatingsTable table;
    table.raw_max = raw_max;
    std::string line;
    if (!std::getline(in, line)) throw parse_error(path + ": empty file");
    if (detail::strip_cr(line) != "userId,movieId,rating,timestamp")
        throw parse_error(path + ":1: expected header 'userId,movieId,rating,timestamp'");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string clean = detail::strip_cr(line);
        if (clean.empty()) continue;
        const auto fields = detail::split_csv_line(clean);
        if (fields.size() != 4)
            throw parse_error(path + ":" + std::to_string(lineno) + ": expected 4 fields, got " +
                              std::to_string(fields.size()));
        RatingRecord rec;
        try {
            std::size_t used = 0;
            rec.user = std::stoll(fields[0], &used);
            if (used != fields[0].size()) throw std::invalid_argument("user");
            rec.item = std::stoll(fields[1], &used);
            if (used != fields[1].size()) throw std::invalid_argument("item");
            rec.rating = std::stod(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("rating");
            rec.timestamp = std::stoll(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("timestamp");
        } catch (const std::exception&) {
            throw parse_error(path + ":" + std::to_string(lineno) + ": malformed record '" +
                              clean + "'");
        }
        if (!(rec.rating > 0.0) || rec.rating > raw_max)
            throw parse_error(path + ":" + std::to_string(lineno) + ": rating " +
                              fields[2] + " outside (0, " + std::to_string(raw_max) + "]");
        table.records.push_back(rec);
    }
    if (table.records.empty()) throw parse_error(path + ": no rating records");
    return table;
}

/// Keep the n items with the most ratings (count ties broken by ascending item
/// id), normalize by raw_max, and sort them by normalized mean descending
/// (mean ties by ascending item id).
inline std::vector<ItemSummary> top_items(const RatingsTable& table, std::size_t n) {
    std::map<std::int64_t, std::vector<double>> by_item;
    for (const auto& rec : table.records) by_item[rec.item].push_back(rec.rating);
    if (by_item.size() < n)
        throw parse_error("need " + std::to_string(n) + " distinct items, found " +
                          std::to_string(by_item.size()));

    std::vector<std::pair<std::int64_t, std::size_t>> counts;
    counts.reserve(by_item.size());
    for (const auto& [item, ratings] : by_item) counts.emplace_back(item, ratings.size());
    std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<ItemSummary> items;
    items.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        ItemSummary s;
        s.item = counts[k].first;
        const auto& raw = by_item[s.item];
        s.rating_count = raw.size();
        s.normalized_ratings.reserve(raw.size());
        for (double v : raw) s.normalized_ratings.push_back(v / table.raw_max);
        s.normalized_mean = multiset_mean(s.normalized_ratings);
        items.push_back(std::move(s));
    }
    std::sort(items.begin(), items.end(), [](const ItemSummary& a, const ItemSummary& b) {
        if (a.normalized_mean != b.normalized_mean) return a.normalized_mean > b.normalized_mean;
        return a.item < b.item;
    });
    return items;
}

/// Turn a mean-sorted item list into an instance plus the matching empirical
/// environment (arm k resamples item k's normalized ratings uniformly).
/// Items with equal means on a cluster boundary are rejected: the partition
/// would not be unique, and the caller should pick a different n or split.
inline std::pair<Instance, Environment> build_movielens_instance(
    const std::vector<ItemSummary>& items, const ClusterSpec& sizes,
    const RequirementSpec& required) {
    std::vector<double> means;
    std::vector<std::vector<double>> ratings;
    means.reserve(items.size());
    for (const auto& it : items) {
        means.push_back(it.normalized_mean);
        ratings.push_back(it.normalized_ratings);
    }
    // Surface boundary ties as the offending item pair before generic validation.
    int pos = 0;
    for (std::size_t i = 0; i + 1 < sizes.sizes.size(); ++i) {
        pos += sizes.sizes[i];
        if (pos > 0 && static_cast<std::size_t>(pos) < items.size() &&
            items[static_cast<std::size_t>(pos) - 1].normalized_mean ==
                items[static_cast<std::size_t>(pos)].normalized_mean) {
            throw spec_error("items " + std::to_string(items[static_cast<std::size_t>(pos) - 1].item) +
                             " and " + std::to_string(items[static_cast<std::size_t>(pos)].item) +
                             " have equal normalized means across a cluster boundary");
        }
    }
    Instance inst = build_instance(means, sizes, required);
    Environment env = make_environment(inst, Family::empirical, ratings);
    return {std::move(inst), std::move(env)};
}

}  // namespace rai
