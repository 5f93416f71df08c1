// harness.hpp -- experiment configuration, replication execution, verification,
// aggregation, and the built-in reproduction presets (table2, table3,
// movielens-fig2).
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rai/algorithms.hpp"
#include "rai/environment.hpp"
#include "rai/ingest.hpp"
#include "rai/instance.hpp"

namespace rai {

enum class Algorithm { vanilla, butterscotch, lucb };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::vanilla: return "vanilla";
        case Algorithm::butterscotch: return "butterscotch";
        case Algorithm::lucb: return "lucb";
    }
    throw spec_error("unknown algorithm");
}

inline Algorithm algorithm_from_name(const std::string& name) {
    for (Algorithm a : {Algorithm::vanilla, Algorithm::butterscotch, Algorithm::lucb})
        if (name == algorithm_name(a)) return a;
    throw spec_error("unknown algorithm '" + name + "'");
}

struct MovielensSource {
    std::string ratings_path;
    double raw_max = 5.0;
    int top_n = 50;
};

/// One experiment: an instance source, a reward family, and run parameters.
struct ExperimentConfig {
    // Instance source: inline means (+ cluster_sizes/required or task+params),
    // or a movielens block.
    std::vector<double> means;
    std::optional<ClusterSpec> cluster_sizes;
    std::optional<RequirementSpec> required;
    std::optional<Task> task;
    TaskParams params;
    std::optional<MovielensSource> movielens;

    Family family = Family::bernoulli;
    double delta = 0.01;
    int replications = 100;
    std::uint64_t seed = 1729;
    Algorithm algorithm = Algorithm::vanilla;
    bool merging = true;
    std::uint64_t pull_budget = 1'000'000'000ULL;
};

/// Instance + environment, ready to run.
struct ResolvedExperiment {
    Instance instance;
    Environment environment;
};

/// Outcome of one replication.
struct RunRecord {
    int replication = 0;
    RunResult result;
    bool correct = false;
    double wall_seconds = 0.0;
};

/// Aggregates over the completed replications of one experiment.
struct Summary {
    int replications = 0;
    int completed = 0;
    int aborted = 0;      // pull-budget hits, excluded from the moments below
    double mean_pulls = 0.0;
    double std_pulls = 0.0;
    std::uint64_t min_pulls = 0;
    std::uint64_t max_pulls = 0;
    int errors = 0;
    double error_rate = 0.0;
    double lower = 0.0;
    double upper_vanilla = 0.0;
    double upper_butterscotch = 0.0;
};

/// True iff every output arm really belongs to the cluster it was assigned to.
inline bool verify_output(const RunResult& result, const Instance& inst) {
    for (std::size_t i = 0; i < result.outputs.size(); ++i)
        for (int arm : result.outputs[i])
            if (inst.cluster_of(arm) != i) return false;
    return true;
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detail

/// Expand the config's instance source. Movielens configs read the ratings
/// file; synthetic configs build the environment from the means directly.
inline ResolvedExperiment resolve_experiment(const ExperimentConfig& cfg) {
    if (cfg.movielens) {
        const auto& ml = *cfg.movielens;
        const RatingsTable table = parse_ratings(ml.ratings_path, ml.raw_max);
        const auto items = top_items(table, static_cast<std::size_t>(ml.top_n));
        ClusterSpec c;
        RequirementSpec r;
        if (cfg.task) {
            std::tie(c, r) = task_preset(*cfg.task, ml.top_n, cfg.params);
        } else if (cfg.cluster_sizes && cfg.required) {
            c = *cfg.cluster_sizes;
            r = *cfg.required;
        } else {
            throw spec_error("movielens config needs either task+params or cluster_sizes+required");
        }
        auto [inst, env] = build_movielens_instance(items, c, r);
        return {std::move(inst), std::move(env)};
    }

    if (cfg.means.empty()) throw spec_error("config needs 'means' or a 'movielens' block");
    ClusterSpec c;
    RequirementSpec r;
    if (cfg.task) {
        std::tie(c, r) = task_preset(*cfg.task, static_cast<int>(cfg.means.size()), cfg.params);
    } else if (cfg.cluster_sizes && cfg.required) {
        c = *cfg.cluster_sizes;
        r = *cfg.required;
    } else {
        throw spec_error("config needs either task+params or cluster_sizes+required");
    }
    Instance inst = build_instance(cfg.means, c, r);
    if (cfg.family == Family::empirical)
        throw spec_error("empirical family requires a movielens block");
    Environment env = make_environment(inst, cfg.family);
    return {std::move(inst), std::move(env)};
}

inline RunResult dispatch_run(Algorithm alg, const Instance& inst, double delta,
                              const RunOptions& opts, const Environment& env,
                              ArmStreams& streams) {
    auto pull_fn = [&](int a) { return pull(env, a, streams); };
    switch (alg) {
        case Algorithm::vanilla:
            return run_vanilla(inst.clusters, inst.requirements, delta, opts, pull_fn);
        case Algorithm::butterscotch:
            return run_butterscotch(inst.clusters, inst.requirements, delta, opts, pull_fn);
        case Algorithm::lucb:
            return run_lucb(inst.clusters, inst.requirements, delta, opts, pull_fn);
    }
    throw spec_error("unknown algorithm");
}

inline Summary summarize(const ExperimentConfig& cfg, const ResolvedExperiment& rx,
                         const std::vector<RunRecord>& records) {
    Summary s;
    s.replications = static_cast<int>(records.size());
    s.min_pulls = std::numeric_limits<std::uint64_t>::max();
    double sum = 0.0, sumsq = 0.0;
    for (const auto& rec : records) {
        if (!rec.result.completed) {
            ++s.aborted;
            continue;
        }
        ++s.completed;
        const auto pulls = static_cast<double>(rec.result.total_pulls);
        sum += pulls;
        sumsq += pulls * pulls;
        s.min_pulls = std::min(s.min_pulls, rec.result.total_pulls);
        s.max_pulls = std::max(s.max_pulls, rec.result.total_pulls);
        if (!rec.correct) ++s.errors;
    }
    if (s.completed > 0) {
        s.mean_pulls = sum / s.completed;
        if (s.completed > 1) {
            const double var =
                (sumsq - sum * sum / s.completed) / static_cast<double>(s.completed - 1);
            s.std_pulls = var > 0.0 ? std::sqrt(var) : 0.0;
        }
    } else {
        s.min_pulls = 0;
    }
    if (s.replications > 0) s.error_rate = static_cast<double>(s.errors) / s.replications;
    s.lower = lower_bound(rx.instance, cfg.delta);
    const double gap = gap_report(rx.instance).bottleneck;
    if (!std::isinf(gap)) {
        s.upper_vanilla = vanilla_upper_bound(rx.instance, cfg.delta);
        s.upper_butterscotch = butterscotch_upper_bound(rx.instance, cfg.delta);
    } else {
        s.upper_vanilla = s.upper_butterscotch = 0.0;
    }
    return s;
}

/// Run `replications` independent replications. Every replication owns
/// per-arm RNG substreams derived from (seed, replication, arm), so results
/// do not depend on execution order.
inline std::pair<Summary, std::vector<RunRecord>> run_experiment(const ExperimentConfig& cfg,
                                                                 const ResolvedExperiment& rx) {
    if (cfg.replications < 1) throw spec_error("replications must be >= 1");
    RunOptions opts{cfg.merging, cfg.pull_budget};
    std::vector<RunRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.replications));
    for (int rep = 0; rep < cfg.replications; ++rep) {
        ArmStreams streams(SeedPolicy{cfg.seed}, static_cast<std::uint64_t>(rep),
                           rx.instance.num_arms());
        const auto t0 = std::chrono::steady_clock::now();
        RunRecord rec;
        rec.replication = rep;
        rec.result = dispatch_run(cfg.algorithm, rx.instance, cfg.delta, opts, rx.environment,
                                  streams);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.correct = rec.result.completed && verify_output(rec.result, rx.instance);
        records.push_back(std::move(rec));
    }
    Summary s = summarize(cfg, rx, records);
    return {s, std::move(records)};
}

inline std::pair<Summary, std::vector<RunRecord>> run_experiment(const ExperimentConfig& cfg) {
    const ResolvedExperiment rx = resolve_experiment(cfg);
    return run_experiment(cfg, rx);
}

// ---------------------------------------------------------------------------
// Config file (JSON) loading.
// ---------------------------------------------------------------------------

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "means", "cluster_sizes", "required", "task",   "params",       "movielens",
        "family", "delta",        "replications", "seed", "algorithm", "merging",
        "pull_budget"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw spec_error("unknown config key '" + it.key() + "'");
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("means")) cfg.means = j.at("means").get<std::vector<double>>();
        if (j.contains("cluster_sizes"))
            cfg.cluster_sizes = ClusterSpec{j.at("cluster_sizes").get<std::vector<int>>()};
        if (j.contains("required"))
            cfg.required = RequirementSpec{j.at("required").get<std::vector<int>>()};
        if (j.contains("task")) cfg.task = task_from_name(j.at("task").get<std::string>());
        if (j.contains("params")) {
            const auto& p = j.at("params");
            if (p.contains("k")) cfg.params.k = p.at("k").get<int>();
            if (p.contains("m")) cfg.params.m = p.at("m").get<int>();
            if (p.contains("ratios")) cfg.params.ratios = p.at("ratios").get<std::vector<int>>();
        }
        if (j.contains("movielens")) {
            const auto& m = j.at("movielens");
            MovielensSource src;
            src.ratings_path = m.at("ratings_path").get<std::string>();
            if (m.contains("raw_max")) src.raw_max = m.at("raw_max").get<double>();
            if (m.contains("top_n")) src.top_n = m.at("top_n").get<int>();
            cfg.movielens = src;
            cfg.family = Family::empirical;
        }
        if (j.contains("family")) cfg.family = family_from_name(j.at("family").get<std::string>());
        if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
        if (j.contains("replications")) cfg.replications = j.at("replications").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("algorithm"))
            cfg.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
        if (j.contains("merging")) cfg.merging = j.at("merging").get<bool>();
        if (j.contains("pull_budget")) cfg.pull_budget = j.at("pull_budget").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw spec_error(std::string("config error: ") + e.what());
    }
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw spec_error("delta must lie in (0, 1)");
    if (cfg.replications < 1) throw spec_error("replications must be >= 1");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw spec_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw spec_error("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV output.
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "preset,task,c,r,algorithm,merging,delta,replications,mean_pulls,std_pulls,"
    "min_pulls,max_pulls,errors,lower_bound,upper_bound";

inline std::string format_sizes(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ':';
        out += std::to_string(v[i]);
    }
    return out;
}

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

/// One CSV data row. The upper bound is the row algorithm's own calculator;
/// LUCB rows leave the column empty (no closed-form bound ships with it).
inline std::string csv_row(const std::string& preset, const std::string& task_label,
                           const ExperimentConfig& cfg, const ResolvedExperiment& rx,
                           const Summary& s) {
    std::string upper;
    if (cfg.algorithm == Algorithm::vanilla)
        upper = format_real(s.upper_vanilla);
    else if (cfg.algorithm == Algorithm::butterscotch)
        upper = format_real(s.upper_butterscotch);
    std::string row;
    row += preset + "," + task_label + ",";
    row += format_sizes(rx.instance.clusters.sizes) + ",";
    row += format_sizes(rx.instance.requirements.required) + ",";
    row += std::string(algorithm_name(cfg.algorithm)) + ",";
    row += (cfg.merging ? "true" : "false");
    row += "," + format_real(cfg.delta) + "," + std::to_string(s.replications);
    row += "," + format_real(s.mean_pulls) + "," + format_real(s.std_pulls);
    row += "," + std::to_string(s.min_pulls) + "," + std::to_string(s.max_pulls);
    row += "," + std::to_string(s.errors);
    row += "," + format_real(s.lower) + "," + upper;
    return row;
}

// ---------------------------------------------------------------------------
// Reproduction presets.
// ---------------------------------------------------------------------------

/// The 10-arm synthetic case study: clusters of sizes 3/5/2.
inline std::vector<double> synthetic_means() {
    return {0.9, 0.85, 0.7, 0.66, 0.65, 0.6, 0.4, 0.35, 0.2, 0.15};
}

inline ClusterSpec synthetic_clusters() { return ClusterSpec{{3, 5, 2}}; }

/// Requirement vectors of the five benchmark tasks on the synthetic instance.
inline std::vector<RequirementSpec> synthetic_tasks() {
    return {RequirementSpec{{1, 0, 0}}, RequirementSpec{{3, 0, 0}}, RequirementSpec{{2, 2, 0}},
            RequirementSpec{{0, 5, 0}}, RequirementSpec{{0, 0, 1}}};
}

struct ReproduceOptions {
    int replications = 100;
    std::uint64_t seed = 1729;
    std::string out_dir = ".";
    std::string ratings_path;           // movielens-fig2 only
    double raw_max = 5.0;
    std::vector<int> arm_counts = {10, 20, 30, 40, 50};  // movielens-fig2 sweep
    std::uint64_t pull_budget = 1'000'000'000ULL;
};

struct ReproduceRow {
    std::string preset;
    std::string task_label;
    std::string row_key;
    ExperimentConfig config;
    Summary summary;
    std::string csv_line;
};

struct ReproduceOutcome {
    std::vector<ReproduceRow> rows;
    std::string csv_path;
    std::string manifest_path;
    bool any_aborted = false;
};

namespace detail {

/// Row seeds are derived from the master seed and a stable per-row key, so
/// adding rows to a preset never perturbs existing rows.
inline std::uint64_t row_seed(std::uint64_t master, const std::string& row_key) {
    return rng::mix(master, fnv1a(row_key));
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    if (!cfg.means.empty()) j["means"] = cfg.means;
    if (cfg.cluster_sizes) j["cluster_sizes"] = cfg.cluster_sizes->sizes;
    if (cfg.required) j["required"] = cfg.required->required;
    if (cfg.task) j["task"] = task_name(*cfg.task);
    if (cfg.params.k || cfg.params.m || !cfg.params.ratios.empty()) {
        nlohmann::json p;
        if (cfg.params.k) p["k"] = cfg.params.k;
        if (cfg.params.m) p["m"] = cfg.params.m;
        if (!cfg.params.ratios.empty()) p["ratios"] = cfg.params.ratios;
        j["params"] = p;
    }
    if (cfg.movielens) {
        j["movielens"] = {{"ratings_path", cfg.movielens->ratings_path},
                          {"raw_max", cfg.movielens->raw_max},
                          {"top_n", cfg.movielens->top_n}};
    }
    j["family"] = family_name(cfg.family);
    j["delta"] = cfg.delta;
    j["replications"] = cfg.replications;
    j["seed"] = cfg.seed;
    j["algorithm"] = algorithm_name(cfg.algorithm);
    j["merging"] = cfg.merging;
    j["pull_budget"] = cfg.pull_budget;
    return j;
}

inline ReproduceOutcome finish_preset(const std::string& preset, std::vector<ReproduceRow> rows,
                                      std::uint64_t master, const ReproduceOptions& opt) {
    ReproduceOutcome out;
    out.rows = std::move(rows);
    std::filesystem::create_directories(opt.out_dir);
    out.csv_path = (std::filesystem::path(opt.out_dir) / (preset + ".csv")).string();
    out.manifest_path =
        (std::filesystem::path(opt.out_dir) / (preset + "_manifest.json")).string();

    std::ofstream csv(out.csv_path);
    if (!csv) throw spec_error("cannot write '" + out.csv_path + "'");
    csv << kCsvHeader << "\n";
    nlohmann::json manifest;
    manifest["preset"] = preset;
    manifest["master_seed"] = master;
    manifest["rows"] = nlohmann::json::array();
    for (const auto& row : out.rows) {
        csv << row.csv_line << "\n";
        if (row.summary.aborted > 0) out.any_aborted = true;
        nlohmann::json entry;
        entry["row_key"] = row.row_key;
        entry["task"] = row.task_label;
        entry["config"] = config_to_json(row.config);
        entry["mean_pulls"] = row.summary.mean_pulls;
        entry["errors"] = row.summary.errors;
        entry["aborted"] = row.summary.aborted;
        manifest["rows"].push_back(entry);
    }
    std::ofstream mf(out.manifest_path);
    mf << manifest.dump(2) << "\n";
    return out;
}

}  // namespace detail

/// Five synthetic tasks x three algorithms, merging on. 15 rows.
inline ReproduceOutcome reproduce_table2(const ReproduceOptions& opt) {
    std::vector<ReproduceRow> rows;
    const auto tasks = synthetic_tasks();
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        for (Algorithm alg : {Algorithm::vanilla, Algorithm::butterscotch, Algorithm::lucb}) {
            ReproduceRow row;
            row.preset = "table2";
            row.task_label = std::to_string(t + 1);
            row.row_key = "table2|task=" + row.task_label + "|alg=" + algorithm_name(alg);
            ExperimentConfig cfg;
            cfg.means = synthetic_means();
            cfg.cluster_sizes = synthetic_clusters();
            cfg.required = tasks[t];
            cfg.family = Family::bernoulli;
            cfg.delta = 0.01;
            cfg.replications = opt.replications;
            cfg.seed = detail::row_seed(opt.seed, row.row_key);
            cfg.algorithm = alg;
            cfg.merging = true;
            cfg.pull_budget = opt.pull_budget;
            const ResolvedExperiment rx = resolve_experiment(cfg);
            row.summary = run_experiment(cfg, rx).first;
            row.csv_line = csv_row(row.preset, row.task_label, cfg, rx, row.summary);
            row.config = std::move(cfg);
            rows.push_back(std::move(row));
        }
    }
    return detail::finish_preset("table2", std::move(rows), opt.seed, opt);
}

/// Five synthetic tasks x {vanilla, butterscotch} x {merging, non-merging}. 20 rows.
inline ReproduceOutcome reproduce_table3(const ReproduceOptions& opt) {
    std::vector<ReproduceRow> rows;
    const auto tasks = synthetic_tasks();
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        for (Algorithm alg : {Algorithm::vanilla, Algorithm::butterscotch}) {
            for (bool merging : {true, false}) {
                ReproduceRow row;
                row.preset = "table3";
                row.task_label = std::to_string(t + 1);
                // The merging flag stays out of the row key so both variants
                // replay identical reward streams (variance-paired comparison).
                row.row_key = "table3|task=" + row.task_label + "|alg=" + algorithm_name(alg);
                ExperimentConfig cfg;
                cfg.means = synthetic_means();
                cfg.cluster_sizes = synthetic_clusters();
                cfg.required = tasks[t];
                cfg.family = Family::bernoulli;
                cfg.delta = 0.01;
                cfg.replications = opt.replications;
                cfg.seed = detail::row_seed(opt.seed, row.row_key);
                cfg.algorithm = alg;
                cfg.merging = merging;
                cfg.pull_budget = opt.pull_budget;
                const ResolvedExperiment rx = resolve_experiment(cfg);
                row.summary = run_experiment(cfg, rx).first;
                row.csv_line = csv_row(row.preset, row.task_label, cfg, rx, row.summary);
                row.config = std::move(cfg);
                rows.push_back(std::move(row));
            }
        }
    }
    return detail::finish_preset("table3", std::move(rows), opt.seed, opt);
}

/// Six classical tasks x three algorithms over N in arm_counts, on an
/// instance built from a ratings file. M = 0.2N, K = 0.5N, coarse ratio 3:5:2.
inline ReproduceOutcome reproduce_movielens(const ReproduceOptions& opt) {
    if (opt.ratings_path.empty())
        throw spec_error("movielens-fig2 needs --ratings PATH");
    std::vector<ReproduceRow> rows;
    for (int n : opt.arm_counts) {
        if (n < 10 || n % 10 != 0)
            throw spec_error("arm count " + std::to_string(n) +
                             " unsupported: the sweep needs a multiple of 10 so that M = N/5, "
                             "K = N/2 and the 3:5:2 ratio are all integral");
        for (Task task : {Task::best_arm, Task::one_of_top_k, Task::top_k, Task::m_of_top_k,
                          Task::coarse_ranking, Task::full_ranking}) {
            for (Algorithm alg : {Algorithm::vanilla, Algorithm::butterscotch, Algorithm::lucb}) {
                ReproduceRow row;
                row.preset = "movielens-fig2";
                row.task_label = task_name(task);
                row.row_key = "movielens-fig2|n=" + std::to_string(n) +
                              "|task=" + row.task_label + "|alg=" + algorithm_name(alg);
                ExperimentConfig cfg;
                cfg.movielens = MovielensSource{opt.ratings_path, opt.raw_max, n};
                cfg.task = task;
                cfg.params.k = n / 2;
                cfg.params.m = n / 5;
                cfg.params.ratios = {3, 5, 2};
                cfg.family = Family::empirical;
                cfg.delta = 0.01;
                cfg.replications = opt.replications;
                cfg.seed = detail::row_seed(opt.seed, row.row_key);
                cfg.algorithm = alg;
                cfg.merging = true;
                cfg.pull_budget = opt.pull_budget;
                const ResolvedExperiment rx = resolve_experiment(cfg);
                row.summary = run_experiment(cfg, rx).first;
                row.csv_line = csv_row(row.preset, row.task_label, cfg, rx, row.summary);
                row.config = std::move(cfg);
                rows.push_back(std::move(row));
            }
        }
    }
    return detail::finish_preset("movielens-fig2", std::move(rows), opt.seed, opt);
}

inline ReproduceOutcome reproduce(const std::string& preset, const ReproduceOptions& opt) {
    if (preset == "table2") return reproduce_table2(opt);
    if (preset == "table3") return reproduce_table3(opt);
    if (preset == "movielens-fig2") return reproduce_movielens(opt);
    throw spec_error("unknown preset '" + preset + "' (expected table2, table3, movielens-fig2)");
}

}  // namespace rai
