// mpqdpg command-line front end.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 I/O or file format
// error, 4 numeric failure.

#include "mpqdpg/config.hpp"
#include "mpqdpg/errors.hpp"
#include "mpqdpg/harness.hpp"
#include "mpqdpg/stats.hpp"
#include "mpqdpg/svg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mpqdpg;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kIo = 3, kNumeric = 4 };

void apply_overrides(harness::RunConfig& cfg, const std::vector<std::string>& sets) {
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble deterministic policy gradient for AUV trajectory tracking"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "Train an agent and write train.csv + checkpoint.bin");
    std::string train_config, algo, trajectory, out_dir;
    std::optional<int> actors, critics, episodes, steps;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> train_sets;
    bool quiet = false;
    train->add_option("--config", train_config, "key = value configuration file");
    train->add_option("--algo", algo, "mpq-dpg or ddpg");
    train->add_option("--trajectory", trajectory, "rt1 or rt2");
    train->add_option("--actors", actors, "number of actors n");
    train->add_option("--critics", critics, "number of critics m");
    train->add_option("--episodes", episodes, "training episodes");
    train->add_option("--steps", steps, "steps per episode");
    train->add_option("--seed", seed, "master seed");
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--set", train_sets, "extra key=value overrides")->take_all();
    train->add_flag("--quiet", quiet, "suppress per-episode progress");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Noise-free rollout of a checkpoint's average policy");
    std::string checkpoint, eval_config, eval_traj, eval_out = "eval";
    std::optional<std::uint64_t> eval_seed;
    std::vector<std::string> eval_sets;
    eval->add_option("--checkpoint", checkpoint, "checkpoint.bin from train")->required();
    eval->add_option("--trajectory", eval_traj, "rt1 or rt2");
    eval->add_option("--out", eval_out, "output directory");
    eval->add_option("--config", eval_config, "configuration (defaults to config.txt next to the checkpoint)");
    eval->add_option("--seed", eval_seed, "seed for the initial state");
    eval->add_option("--set", eval_sets, "extra key=value overrides")->take_all();

    // stats
    auto* stats = app.add_subcommand("stats", "R_best / R_av / STD-DEV / IR over training CSVs");
    std::string window_text = "500:1500";
    std::vector<std::string> baseline_csvs, trial_csvs;
    std::optional<double> baseline_rav;
    stats->add_option("--window", window_text, "1-based inclusive episode window FIRST:LAST");
    stats->add_option("--baseline", baseline_csvs, "baseline training CSV(s), averaged pointwise")->take_all();
    stats->add_option("--baseline-rav", baseline_rav, "baseline R_av given directly");
    stats->add_option("csv", trial_csvs, "training CSVs of independent trials")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Open-loop constant-input vehicle rollout");
    double thrust = 0.0, rudder = 0.0, duration = 10.0, sim_ts = 0.1;
    double u0 = 0.0, v0 = 0.0, r0 = 0.0, psi0 = 0.0;
    std::string sim_out;
    sim->add_option("--thrust", thrust, "propeller force (N)");
    sim->add_option("--rudder", rudder, "rudder angle (rad)");
    sim->add_option("--duration", duration, "seconds");
    sim->add_option("--ts", sim_ts, "step (s)");
    sim->add_option("--u0", u0, "initial surge velocity");
    sim->add_option("--v0", v0, "initial sway velocity");
    sim->add_option("--r0", r0, "initial yaw rate");
    sim->add_option("--psi0", psi0, "initial yaw");
    sim->add_option("--out", sim_out, "CSV path (stdout when omitted)");

    // plot
    auto* plot = app.add_subcommand("plot", "Render a rollout CSV as SVG");
    std::string plot_in, plot_out;
    plot->add_option("--in", plot_in, "rollout.csv")->required();
    plot->add_option("--out", plot_out, "output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (train->parsed()) {
            harness::RunConfig cfg = train_config.empty() ? harness::RunConfig{} : harness::load_config(train_config);
            if (!algo.empty()) cfg.algorithm = harness::parse_algorithm(algo);
            if (!trajectory.empty()) cfg.trajectory = env::parse_trajectory(trajectory);
            if (actors) cfg.agent.n_actors = *actors;
            if (critics) cfg.agent.m_critics = *critics;
            if (episodes) cfg.episodes = *episodes;
            if (steps) cfg.episode.steps_per_episode = *steps;
            if (seed) cfg.seed = *seed;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            apply_overrides(cfg, train_sets);
            cfg.validate();

            harness::EpisodeCallback progress;
            if (!quiet) {
                progress = [&](const harness::EpisodeRecord& rec) {
                    std::cout << "episode " << rec.episode << "/" << cfg.episodes << " total_reward "
                              << harness::format_double(rec.total_reward) << std::endl;
                };
            }
            const auto result = harness::train(cfg, {}, progress);
            std::cout << "wrote " << result.csv_path.string() << " and " << result.checkpoint_path.string() << "\n";
        } else if (eval->parsed()) {
            fs::path cfg_path = eval_config;
            if (cfg_path.empty()) {
                const fs::path sibling = fs::path(checkpoint).parent_path() / "config.txt";
                if (fs::exists(sibling)) cfg_path = sibling;
            }
            harness::RunConfig cfg = cfg_path.empty() ? harness::RunConfig{} : harness::load_config(cfg_path);
            if (!eval_traj.empty()) cfg.trajectory = env::parse_trajectory(eval_traj);
            if (eval_seed) cfg.seed = *eval_seed;
            apply_overrides(cfg, eval_sets);
            const auto result = harness::evaluate(checkpoint, cfg, eval_out);
            std::cout << "steps = " << result.summary.steps << "\n"
                      << "total_reward = " << harness::format_double(result.summary.total_reward) << "\n"
                      << "rms_error = " << harness::format_double(result.summary.rms_error) << "\n";
        } else if (stats->parsed()) {
            const harness::Window window = harness::Window::parse(window_text);
            std::vector<std::vector<double>> trials;
            for (const auto& path : trial_csvs) trials.push_back(harness::read_training_rewards(path));

            std::optional<double> baseline = baseline_rav;
            if (!baseline_csvs.empty()) {
                std::vector<std::vector<double>> base;
                for (const auto& path : baseline_csvs) base.push_back(harness::read_training_rewards(path));
                baseline = harness::window_mean(harness::average_trials(base), window);
            }
            const harness::TrialStats s = harness::compute_stats(trials, window, baseline);
            std::cout << "trials = " << trials.size() << "\n"
                      << "window = " << window.first << ":" << window.last << "\n"
                      << "r_best = " << harness::format_double(s.r_best) << "\n"
                      << "r_av = " << harness::format_double(s.r_av) << "\n"
                      << "std_dev = " << harness::format_double(s.std_dev) << "\n";
            if (baseline) {
                std::cout << "baseline_r_av = " << harness::format_double(*baseline) << "\n"
                          << "ir = " << harness::format_double(*s.improvement) << "\n";
            }
        } else if (sim->parsed()) {
            dynamics::VehicleState start;
            start.u = u0;
            start.v = v0;
            start.r = r0;
            start.psi = psi0;
            const auto samples = harness::simulate({}, {thrust, rudder}, duration, sim_ts, start);
            if (sim_out.empty()) {
                harness::write_simulation_csv(std::cout, samples);
            } else {
                std::ofstream out(sim_out, std::ios::trunc);
                if (!out) throw IoError("cannot open for writing: " + sim_out);
                harness::write_simulation_csv(out, samples);
                if (!out) throw IoError("write failed: " + sim_out);
            }
        } else if (plot->parsed()) {
            harness::write_trajectory_svg(plot_in, plot_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kConfig;
    }
    return kOk;
}
