// Trajectory-tracking MDP around the vehicle model.
//
// Observation layout (10 entries):
//   [x, y, psi, u, v, r, xd_k, yd_k, xd_{k+1}, yd_{k+1}]
// Rewards are r_{k+1} = -(e_k' e_k + a_k' H a_k) with e_k the pre-step
// position error against d(k Ts). Episodes have a fixed horizon.
#pragma once

#include "mpqdpg/dynamics.hpp"
#include "mpqdpg/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <utility>

namespace mpqdpg::env {

inline constexpr int kStateDim = 10;
inline constexpr int kActionDim = 2;

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using Vec2 = Eigen::Vector2d;

enum class Trajectory { rt1, rt2 };

Trajectory parse_trajectory(const std::string& name);
std::string to_string(Trajectory traj);

/// Desired position d(t) in metres.
Vec2 reference_point(Trajectory traj, double t);

/// Per-dimension affine ranges mapped onto [-1, 1].
struct NormalizationBounds {
    std::array<double, kStateDim> lo{-60, -60, -3.141592653589793, -3, -3, -2, -60, -60, -60, -60};
    std::array<double, kStateDim> hi{60, 60, 3.141592653589793, 3, 3, 2, 60, 60, 60, 60};

    void validate() const;
};

StateVec normalize(const StateVec& raw, const NormalizationBounds& bounds);

using Range = std::pair<double, double>;

/// Uniform sampling box for the initial vehicle state.
struct InitialRanges {
    Range x, y, psi, u, v, r;

    static InitialRanges defaults(Trajectory traj);
};

struct EpisodeConfig {
    double Ts = 0.1;
    // Explicit Euler sub-steps per control step. A single Ts = 0.1 Euler
    // step diverges at high speed with large rudder (the N_rr yaw damping
    // is stiff), so the default integrates at Ts / 10 under a held input.
    int substeps = 10;
    int steps_per_episode = 1000;
    Eigen::Matrix2d H = 0.001 * Eigen::Matrix2d::Identity();
    double gamma = 0.99;
    double thrust_limit = dynamics::kThrustLimit;
    double rudder_limit = dynamics::kRudderLimit;
    NormalizationBounds bounds;

    /// Throws ConfigError.
    void validate() const;
};

struct MdpState {
    StateVec raw = StateVec::Zero();
    StateVec normalized = StateVec::Zero();
};

/// Tracking error e = p - d.
Vec2 tracking_error(const StateVec& raw);

double reward(const Vec2& error, const dynamics::ControlInput& action, const Eigen::Matrix2d& H);

/// Reward of taking `action` in `state` (uses the d_k slot of the raw vector).
double reward(const MdpState& state, const dynamics::ControlInput& action, const Eigen::Matrix2d& H);

struct StepResult {
    MdpState state;                   // s_{k+1}
    double reward = 0.0;              // r_{k+1}
    int step_index = 0;               // k + 1
    dynamics::ControlInput applied;   // saturated a_k
    Vec2 error = Vec2::Zero();        // e_k
};

class TrackingEnv {
public:
    TrackingEnv(Trajectory traj, EpisodeConfig config,
                dynamics::VehicleModel model = dynamics::VehicleModel(dynamics::ModelCoefficients{}));

    /// Randomized start drawn from `ranges` (or the trajectory defaults).
    MdpState reset(Rng& rng);
    MdpState reset(Rng& rng, const InitialRanges& ranges);
    MdpState reset(const dynamics::VehicleState& initial);

    /// Saturates the physical-unit action, advances one Ts and scores the
    /// transition. Throws UsageError once the horizon is exhausted.
    StepResult step(const dynamics::ControlInput& action);

    int step_index() const { return k_; }
    bool done() const { return k_ >= config_.steps_per_episode; }
    double time() const { return k_ * config_.Ts; }
    const dynamics::VehicleState& vehicle() const { return vehicle_; }
    const EpisodeConfig& config() const { return config_; }
    Trajectory trajectory() const { return traj_; }
    MdpState observation() const;

private:
    Trajectory traj_;
    EpisodeConfig config_;
    dynamics::VehicleModel model_;
    dynamics::VehicleState vehicle_;
    int k_ = 0;
    bool started_ = false;
};

}  // namespace mpqdpg::env
