#include "crowdflow/cli.hpp"

#include "crowdflow/local_planner.hpp"
#include "crowdflow/scenario_config.hpp"
#include "crowdflow/sim.hpp"
#include "crowdflow/sim_io.hpp"
#include "crowdflow/traj_eval.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

namespace crowdflow::cli {

namespace fs = std::filesystem;

std::optional<std::pair<std::uint64_t, std::uint64_t>> parse_seed_range(const std::string& text)
{
    const auto parse = [](const std::string& s) -> std::optional<std::uint64_t> {
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return std::nullopt;
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        const auto v = parse(text);
        if (!v) return std::nullopt;
        return std::make_pair(*v, *v);
    }
    const auto a = parse(text.substr(0, dots));
    const auto b = parse(text.substr(dots + 2));
    if (!a || !b || *b < *a) return std::nullopt;
    return std::make_pair(*a, *b);
}

namespace {

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& config,
                    const std::string& seeds)
{
    fs::create_directories(dir);
    std::ofstream os(dir / "manifest.txt");
    write_key_values(os, {{"command", command},
                          {"config", config},
                          {"seeds", seeds},
                          {"output_dir", dir.string()},
                          {"tool_version", kVersion},
                          {"timestamp", utc_timestamp()}});
    if (!os) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn)
{
    std::ofstream os(path);
    fn(os);
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

void write_run(const fs::path& dir, const SimResult& r)
{
    fs::create_directories(dir);
    write_file(dir / "trajectories.csv", [&](std::ostream& os) { write_trajectories_csv(os, r.trajectories); });
    write_file(dir / "metrics.txt", [&](std::ostream& os) { write_metrics(os, r); });
    write_file(dir / "collisions.csv", [&](std::ostream& os) { write_collisions_csv(os, r.collisions); });
    write_file(dir / "planner_ticks.csv", [&](std::ostream& os) { write_ticks_csv(os, r); });
}

int report_config_error(const ConfigError& e, std::ostream& err)
{
    err << "error: " << e.what() << '\n';
    return usage_error;
}

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::string out = "out";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err)
{
    ScenarioConfig cfg;
    try {
        cfg = load_scenario(a.config);
    } catch (const ConfigError& e) {
        return report_config_error(e, err);
    }
    if (a.seed) cfg.seed = *a.seed;

    std::vector<NavigationMode> modes{cfg.mode};
    if (a.mode == "both") {
        modes = {NavigationMode::with_social_model, NavigationMode::without_social_model};
    } else if (!a.mode.empty()) {
        const auto m = parse_mode(a.mode);
        if (!m) {
            err << "error: --mode must be with, without or both\n";
            return usage_error;
        }
        modes = {*m};
    }

    try {
        const fs::path dir(a.out);
        write_manifest(dir, "simulate", a.config, std::to_string(cfg.seed));
        std::vector<SimResult> results;
        for (const auto mode : modes) {
            cfg.mode = mode;
            results.push_back(run_scenario(cfg));
            const fs::path run_dir = modes.size() > 1 ? dir / to_string(mode) : dir;
            write_run(run_dir, results.back());
            out << "[" << to_string(mode) << "] seed " << cfg.seed << ": goal_reached="
                << (results.back().goal_reached ? "true" : "false")
                << " collisions=" << results.back().collisions.count
                << " disturbance=" << format_fixed(results.back().disturbance, 4) << " m\n";
        }
        if (results.size() == 2) {
            write_file(dir / "comparison.txt", [&](std::ostream& os) {
                std::vector<std::pair<std::string, std::string>> kv{{"seed", std::to_string(cfg.seed)}};
                for (const auto& r : results) {
                    const std::string p = r.mode == NavigationMode::with_social_model ? "with." : "without.";
                    kv.emplace_back(p + "collision_count", std::to_string(r.collisions.count));
                    kv.emplace_back(p + "disturbance_m", format_fixed(r.disturbance));
                    kv.emplace_back(p + "path_length_m", format_fixed(r.path_length));
                    kv.emplace_back(p + "travel_time_s", format_fixed(r.travel_time, 3));
                    kv.emplace_back(p + "goal_reached", r.goal_reached ? "true" : "false");
                }
                write_key_values(os, kv);
            });
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return ok;
}

struct SweepArgs {
    std::string config;
    std::string seeds;
    std::string out = "out";
    unsigned jobs = 0;
};

double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v)
{
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err)
{
    const auto range = parse_seed_range(a.seeds);
    if (!range) {
        err << "error: --seeds must look like A..B with A <= B\n";
        return usage_error;
    }
    ScenarioConfig base;
    try {
        base = load_scenario(a.config);
    } catch (const ConfigError& e) {
        return report_config_error(e, err);
    }

    try {
        const fs::path dir(a.out);
        write_manifest(dir, "sweep", a.config, a.seeds);

        struct Job {
            std::uint64_t seed;
            NavigationMode mode;
            std::optional<SimResult> result;
            std::string error;
        };
        std::vector<Job> jobs;
        for (std::uint64_t s = range->first;; ++s) {
            jobs.push_back({s, NavigationMode::with_social_model, std::nullopt, {}});
            jobs.push_back({s, NavigationMode::without_social_model, std::nullopt, {}});
            if (s == range->second) break;
        }

        // Each run is independent; results land in their own slot.
        const unsigned workers =
            std::max(1u, std::min<unsigned>(a.jobs ? a.jobs : std::thread::hardware_concurrency(),
                                            static_cast<unsigned>(jobs.size())));
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) {
                    ScenarioConfig cfg = base;
                    cfg.seed = jobs[i].seed;
                    cfg.mode = jobs[i].mode;
                    try {
                        jobs[i].result = run_scenario(cfg);
                    } catch (const std::exception& e) {
                        jobs[i].error = e.what();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& j : jobs)
            if (!j.result) throw std::runtime_error("seed " + std::to_string(j.seed) + ": " + j.error);

        write_file(dir / "per_seed.csv", [&](std::ostream& os) {
            os << "seed,mode,goal_reached,travel_time_s,path_length_m,collision_count,min_clearance_m,disturbance_m\n";
            for (const auto& j : jobs) {
                const SimResult& r = *j.result;
                os << j.seed << ',' << to_string(j.mode) << ',' << (r.goal_reached ? 1 : 0) << ','
                   << format_fixed(r.travel_time, 3) << ',' << format_fixed(r.path_length) << ','
                   << r.collisions.count << ',' << format_fixed(r.min_clearance) << ','
                   << format_fixed(r.disturbance) << '\n';
            }
        });
        write_file(dir / "aggregate.csv", [&](std::ostream& os) {
            os << "mode,runs,median_collisions,mean_collisions,median_disturbance_m,mean_disturbance_m,goal_rate\n";
            for (const auto mode : {NavigationMode::with_social_model, NavigationMode::without_social_model}) {
                std::vector<double> collisions;
                std::vector<double> disturbance;
                std::vector<double> reached;
                for (const auto& j : jobs) {
                    if (j.mode != mode) continue;
                    collisions.push_back(j.result->collisions.count);
                    disturbance.push_back(j.result->disturbance);
                    reached.push_back(j.result->goal_reached ? 1.0 : 0.0);
                }
                os << to_string(mode) << ',' << collisions.size() << ',' << format_fixed(median(collisions)) << ','
                   << format_fixed(mean(collisions)) << ',' << format_fixed(median(disturbance)) << ','
                   << format_fixed(mean(disturbance)) << ',' << format_fixed(mean(reached)) << '\n';
                out << "[" << to_string(mode) << "] runs=" << collisions.size()
                    << " median_collisions=" << format_fixed(median(collisions), 1)
                    << " mean_disturbance=" << format_fixed(mean(disturbance), 4) << " m\n";
            }
        });
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return ok;
}

struct EvaluateArgs {
    std::vector<std::string> datasets;
    std::string predictor = "linear";
    int t_obs = 8;
    int t_pred = 8;
    std::string windows_csv;
    std::string classifier;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err)
{
    EvalConfig cfg{a.t_obs, a.t_pred, 0.4};
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    }

    LinearClassifier classifier;
    if (!a.classifier.empty()) {
        std::ifstream in(a.classifier);
        try {
            if (!in) throw std::runtime_error("cannot open " + a.classifier);
            classifier = load_classifier(in);
        } catch (const std::exception& e) {
            err << "error: classifier: " << e.what() << '\n';
            return usage_error;
        }
    }
    const Predictor predictor = a.predictor == "flow" ? make_flow_predictor(classifier) : make_linear_predictor();

    try {
        std::ofstream windows;
        if (!a.windows_csv.empty()) windows.open(a.windows_csv);
        for (const auto& path : a.datasets) {
            const auto tracks = load_dataset(fs::path(path));
            const EvalReport report = evaluate(tracks, predictor, cfg, classifier, path);
            out << "predictor: " << a.predictor << '\n';
            write_report(out, report);
            if (windows.is_open()) write_window_csv(windows, report);
        }
        if (windows.is_open() && !windows) throw std::runtime_error("cannot write " + a.windows_csv);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return ok;
}

struct ExportArgs {
    std::string config;
    std::string out = "primitives.csv";
};

int cmd_export_primitives(const ExportArgs& a, std::ostream& out, std::ostream& err)
{
    ScenarioConfig cfg;
    if (!a.config.empty()) {
        try {
            cfg = load_scenario(a.config);
        } catch (const ConfigError& e) {
            return report_config_error(e, err);
        }
    }
    try {
        const LibraryParams& lp = cfg.planner.library;
        const TrajectoryLibrary lib =
            build_library({lp.count, lp.max_curvature, lp.length, cfg.robot.radius, lp.inflation});
        const fs::path path(a.out);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        write_file(path, [&](std::ostream& os) { export_primitives_csv(os, lib); });
        out << "wrote " << lib.primitives.size() << " primitives to " << path.string() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Group-aware crowd navigation: simulation, seed sweeps and trajectory evaluation", "crowdflow"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run one scenario and export trajectories and metrics");
    simulate->add_option("--config", sim.config, "Scenario JSON file")->required();
    simulate->add_option("--seed", sim.seed, "Override the scenario seed");
    simulate->add_option("--mode", sim.mode, "with, without or both");
    simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run both navigation modes over a seed range");
    sweep_cmd->add_option("--config", sweep.config, "Scenario JSON file")->required();
    sweep_cmd->add_option("--seeds", sweep.seeds, "Inclusive seed range A..B")->required();
    sweep_cmd->add_option("--out", sweep.out, "Output directory")->capture_default_str();
    sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads (0 = hardware concurrency)");

    EvaluateArgs eval;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "ADE/FDE evaluation on frame/pedestrian/x/y datasets");
    evaluate_cmd->add_option("--dataset", eval.datasets, "Dataset file(s)")->required();
    evaluate_cmd->add_option("--predictor", eval.predictor, "linear or flow")
        ->check(CLI::IsMember({"linear", "flow"}))
        ->capture_default_str();
    evaluate_cmd->add_option("--t-obs", eval.t_obs, "Observed frames")->capture_default_str();
    evaluate_cmd->add_option("--t-pred", eval.t_pred, "Predicted frames")->capture_default_str();
    evaluate_cmd->add_option("--windows-csv", eval.windows_csv, "Write per-window errors here");
    evaluate_cmd->add_option("--classifier", eval.classifier, "Group classifier record (w1 w2 w3 bias)");

    ExportArgs exp;
    auto* export_cmd = app.add_subcommand("export-primitives", "Write the trajectory library as CSV");
    export_cmd->add_option("--config", exp.config, "Scenario JSON file for library parameters");
    export_cmd->add_option("--out", exp.out, "CSV path")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return usage_error;
    }

    if (*simulate) return cmd_simulate(sim, out, err);
    if (*sweep_cmd) return cmd_sweep(sweep, out, err);
    if (*evaluate_cmd) return cmd_evaluate(eval, out, err);
    return cmd_export_primitives(exp, out, err);
}

}  // namespace crowdflow::cli
