// Training, evaluation and open-loop simulation drivers.
//
// A training run writes into RunConfig::out_dir:
//   config.txt       resolved configuration
//   train.csv        episode,total_reward,steps,seconds (flushed per episode)
//   checkpoint.bin   final networks (actors first, then critics)
// An evaluation writes rollout.csv and summary.txt.
#pragma once

#include "mpqdpg/agent.hpp"
#include "mpqdpg/config.hpp"
#include "mpqdpg/dynamics.hpp"
#include "mpqdpg/env.hpp"
#include "mpqdpg/neural.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mpqdpg::harness {

struct EpisodeRecord {
    int episode = 0;  // 1-based
    double total_reward = 0.0;
    int steps = 0;
    double seconds = 0.0;
    bool explored = true;
};

struct TrainResult {
    std::vector<EpisodeRecord> records;
    std::filesystem::path csv_path;
    std::filesystem::path checkpoint_path;
};

std::unique_ptr<agent::Agent> make_agent(const RunConfig& config);

using EpisodeCallback = std::function<void(const EpisodeRecord&)>;

/// Validates the config, then runs the full training loop. A non-finite
/// critic loss or episode return raises NumericError.
TrainResult train(const RunConfig& config, const agent::TraceSink& trace = {},
                  const EpisodeCallback& on_episode = {});

/// Shortest round-trip decimal form, used for every floating CSV field.
std::string format_double(double v);

struct RolloutRow {
    int step = 0;
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double x_d = 0.0;
    double y_d = 0.0;
    double err_norm = 0.0;
    double thrust = 0.0;
    double rudder = 0.0;
    double reward = 0.0;
};

struct EvalSummary {
    double total_reward = 0.0;
    double rms_error = 0.0;
    int steps = 0;
};

struct EvalResult {
    std::vector<RolloutRow> rows;
    EvalSummary summary;
};

/// One noise-free episode under the average of `actors`.
EvalResult rollout(std::span<const nn::MlpNetwork> actors, const RunConfig& config,
                   const dynamics::VehicleState& initial);

/// Initial vehicle state an evaluation uses for `config` (seeded draw).
dynamics::VehicleState evaluation_start(const RunConfig& config);

/// Actor networks from a checkpoint (final tanh layer). Throws FormatError
/// when none is present or shapes do not fit the 10-state/2-action MDP.
std::vector<nn::MlpNetwork> select_actors(std::vector<nn::MlpNetwork> nets);

/// Loads the checkpoint, rolls out one episode and writes rollout.csv and
/// summary.txt into `out_dir`.
EvalResult evaluate(const std::filesystem::path& checkpoint, const RunConfig& config,
                    const std::filesystem::path& out_dir);

void write_rollout_csv(std::ostream& out, std::span<const RolloutRow> rows);

/// Throws FormatError naming the offending (1-based, header = row 1) row.
std::vector<RolloutRow> read_rollout_csv(std::istream& in);
std::vector<RolloutRow> read_rollout_csv(const std::filesystem::path& path);

struct SimSample {
    double t = 0.0;
    dynamics::VehicleState state;
};

/// Constant-input rollout of the vehicle model (input saturated once).
std::vector<SimSample> simulate(const dynamics::ModelCoefficients& model, dynamics::ControlInput tau,
                                double duration, double Ts, const dynamics::VehicleState& initial = {});

void write_simulation_csv(std::ostream& out, std::span<const SimSample> samples);

}  // namespace mpqdpg::harness
