// rai -- command-line front end: bound reports, single experiments, and the
// built-in reproduction presets.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rai/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIngest = 3;
constexpr int kExitBudget = 4;

std::vector<int> parse_ratio_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) {
        try {
            out.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw rai::spec_error("bad ratio component '" + part + "' in '" + text + "'");
        }
    }
    if (out.empty()) throw rai::spec_error("empty ratio list");
    return out;
}

void print_gap_value(std::ostream& os, double v) {
    if (std::isinf(v))
        os << "inf";
    else
        os << rai::format_real(v);
}

int cmd_bound(const std::string& config_path) {
    const rai::ExperimentConfig cfg = rai::load_config(config_path);
    const rai::ResolvedExperiment rx = rai::resolve_experiment(cfg);
    const rai::GapReport rep = rai::gap_report(rx.instance);

    std::cout << "arms: " << rx.instance.num_arms()
              << "  clusters: " << rai::format_sizes(rx.instance.clusters.sizes)
              << "  required: " << rai::format_sizes(rx.instance.requirements.required) << "\n";
    for (std::size_t i = 0; i < rep.arm_gaps.size(); ++i) {
        std::cout << "cluster " << (i + 1) << " gaps:";
        for (double g : rep.arm_gaps[i]) {
            std::cout << ' ';
            print_gap_value(std::cout, g);
        }
        std::cout << "  bottleneck: ";
        print_gap_value(std::cout, rep.cluster_bottlenecks[i]);
        std::cout << "\n";
    }
    std::cout << "instance bottleneck: ";
    print_gap_value(std::cout, rep.bottleneck);
    std::cout << "\n";
    std::cout << "lower bound (delta=" << rai::format_real(cfg.delta)
              << "): " << rai::format_real(rai::lower_bound(rx.instance, cfg.delta)) << "\n";
    if (std::isinf(rep.bottleneck)) {
        std::cout << "upper bounds: not defined (nothing to identify)\n";
    } else {
        std::cout << "vanilla upper bound: "
                  << rai::format_real(rai::vanilla_upper_bound(rx.instance, cfg.delta)) << "\n";
        std::cout << "butterscotch upper bound: "
                  << rai::format_real(rai::butterscotch_upper_bound(rx.instance, cfg.delta))
                  << "\n";
    }
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path, bool as_json) {
    const rai::ExperimentConfig cfg = rai::load_config(config_path);
    const rai::ResolvedExperiment rx = rai::resolve_experiment(cfg);
    const auto [summary, records] = rai::run_experiment(cfg, rx);

    std::string task_label = cfg.task ? rai::task_name(*cfg.task) : "custom";
    std::string text;
    if (as_json) {
        nlohmann::json j;
        j["task"] = task_label;
        j["c"] = rx.instance.clusters.sizes;
        j["r"] = rx.instance.requirements.required;
        j["algorithm"] = rai::algorithm_name(cfg.algorithm);
        j["merging"] = cfg.merging;
        j["delta"] = cfg.delta;
        j["replications"] = summary.replications;
        j["completed"] = summary.completed;
        j["aborted"] = summary.aborted;
        j["mean_pulls"] = summary.mean_pulls;
        j["std_pulls"] = summary.std_pulls;
        j["min_pulls"] = summary.min_pulls;
        j["max_pulls"] = summary.max_pulls;
        j["errors"] = summary.errors;
        j["error_rate"] = summary.error_rate;
        j["lower_bound"] = summary.lower;
        j["upper_bound_vanilla"] = summary.upper_vanilla;
        j["upper_bound_butterscotch"] = summary.upper_butterscotch;
        text = j.dump(2) + "\n";
    } else {
        text = std::string(rai::kCsvHeader) + "\n" +
               rai::csv_row("run", task_label, cfg, rx, summary) + "\n";
    }

    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw rai::spec_error("cannot write '" + out_path + "'");
        out << text;
    }
    if (summary.aborted > 0) {
        std::cerr << "warning: " << summary.aborted
                  << " replication(s) hit the pull budget and were excluded from the means\n";
        return kExitBudget;
    }
    return 0;
}

int cmd_reproduce(const std::string& preset, const rai::ReproduceOptions& opt) {
    const rai::ReproduceOutcome out = rai::reproduce(preset, opt);
    std::cout << "wrote " << out.csv_path << " (" << out.rows.size() << " rows) and "
              << out.manifest_path << "\n";
    if (out.any_aborted) {
        std::cerr << "warning: at least one replication hit the pull budget; "
                     "affected rows are flagged in the manifest\n";
        return kExitBudget;
    }
    return 0;
}

int cmd_preset(const std::string& task_name, int n, int k, int m, const std::string& ratios) {
    rai::TaskParams params;
    params.k = k;
    params.m = m;
    if (!ratios.empty()) params.ratios = parse_ratio_list(ratios);
    const auto [c, r] = rai::task_preset(rai::task_from_name(task_name), n, params);
    std::cout << "c = " << rai::format_sizes(c.sizes) << "\n";
    std::cout << "r = " << rai::format_sizes(r.required) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"representative arm identification toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    auto* bound = app.add_subcommand("bound", "print the gap report and sample-complexity bounds");
    bound->add_option("config", config_path, "experiment config (JSON)")->required();

    std::string run_config, run_out;
    bool run_json = false;
    auto* run = app.add_subcommand("run", "run a single experiment");
    run->add_option("config", run_config, "experiment config (JSON)")->required();
    run->add_option("--out", run_out, "write the result to a file instead of stdout");
    run->add_flag("--json", run_json, "emit JSON instead of CSV");

    std::string preset_name;
    rai::ReproduceOptions ropt;
    std::vector<int> arm_counts;
    auto* repro = app.add_subcommand("reproduce", "run a built-in benchmark preset");
    repro->add_option("preset", preset_name, "table2 | table3 | movielens-fig2")->required();
    repro->add_option("--ratings", ropt.ratings_path, "ratings CSV (movielens-fig2)");
    repro->add_option("--raw-max", ropt.raw_max, "rating scale maximum (default 5.0)");
    repro->add_option("--reps", ropt.replications, "replications per row (default 100)");
    repro->add_option("--seed", ropt.seed, "master seed (default 1729)");
    repro->add_option("--out", ropt.out_dir, "output directory (default .)");
    repro->add_option("--n", arm_counts, "restrict the movielens arm-count sweep");
    repro->add_option("--budget", ropt.pull_budget, "per-run pull budget (default 1e9)");

    std::string task_name, ratios;
    int n = 0, k = 0, m = 0;
    auto* preset = app.add_subcommand("preset", "print the (c, r) pair of a task preset");
    preset->add_option("task", task_name,
                       "best-arm | one-of-top-k | top-k | m-of-top-k | coarse-ranking | full-ranking")
        ->required();
    preset->add_option("--n", n, "arm count")->required();
    preset->add_option("--k", k, "K (top-k family)");
    preset->add_option("--m", m, "M (m-of-top-k)");
    preset->add_option("--ratios", ratios, "coarse-ranking ratios, e.g. 3:5:2");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bound->parsed()) return cmd_bound(config_path);
        if (run->parsed()) return cmd_run(run_config, run_out, run_json);
        if (repro->parsed()) {
            if (!arm_counts.empty()) ropt.arm_counts = arm_counts;
            return cmd_reproduce(preset_name, ropt);
        }
        if (preset->parsed()) return cmd_preset(task_name, n, k, m, ratios);
    } catch (const rai::parse_error& e) {
        std::cerr << "ingest error: " << e.what() << "\n";
        return kExitIngest;
    } catch (const rai::spec_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
