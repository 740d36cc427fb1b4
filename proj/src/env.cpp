#include "mpqdpg/env.hpp"

#include "mpqdpg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mpqdpg::env {

using dynamics::ControlInput;
using dynamics::VehicleState;

Trajectory parse_trajectory(const std::string& name) {
    if (name == "rt1" || name == "RT1") return Trajectory::rt1;
    if (name == "rt2" || name == "RT2") return Trajectory::rt2;
    throw ConfigError("unknown trajectory '" + name + "' (expected rt1 or rt2)");
}

std::string to_string(Trajectory traj) { return traj == Trajectory::rt1 ? "rt1" : "rt2"; }

Vec2 reference_point(Trajectory traj, double t) {
    constexpr double pi = std::numbers::pi;
    switch (traj) {
        case Trajectory::rt1: {
            const double radius = 15.0 - 0.1 * t;
            return {radius * std::cos(pi / 20.0 * t), radius * std::sin(pi / 20.0 * t)};
        }
        case Trajectory::rt2:
            return {0.8 * t - 40.0, 10.0 * std::sin(pi / 25.0 * t)};
    }
    return Vec2::Zero();
}

void NormalizationBounds::validate() const {
    for (int i = 0; i < kStateDim; ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(hi[i] > lo[i])) {
            throw ConfigError("normalization bounds must be finite with positive width (dimension " +
                              std::to_string(i) + ")");
        }
    }
}

StateVec normalize(const StateVec& raw, const NormalizationBounds& bounds) {
    StateVec out;
    for (int i = 0; i < kStateDim; ++i) {
        const double scaled = 2.0 * (raw(i) - bounds.lo[i]) / (bounds.hi[i] - bounds.lo[i]) - 1.0;
        out(i) = std::clamp(scaled, -1.0, 1.0);
    }
    return out;
}

InitialRanges InitialRanges::defaults(Trajectory traj) {
    constexpr double pi = std::numbers::pi;
    InitialRanges r{};
    r.x = traj == Trajectory::rt1 ? Range{14.0, 16.0} : Range{-41.0, -39.0};
    r.y = {-1.0, 1.0};
    r.psi = {pi / 4.0, 3.0 * pi / 4.0};
    r.u = {1.0, 1.5};
    r.v = {-0.3, 0.3};
    r.r = {-0.2, 0.2};
    return r;
}

void EpisodeConfig::validate() const {
    if (!(Ts > 0.0) || !std::isfinite(Ts)) throw ConfigError("Ts must be positive");
    if (substeps <= 0) throw ConfigError("substeps must be positive");
    if (steps_per_episode <= 0) throw ConfigError("steps_per_episode must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (!(thrust_limit > 0.0) || !(rudder_limit > 0.0)) throw ConfigError("saturation limits must be positive");
    if (!H.allFinite() || std::abs(H(0, 1) - H(1, 0)) > 1e-15) throw ConfigError("H must be symmetric");
    if (!(H(0, 0) > 0.0) || !(H.determinant() > 0.0)) throw ConfigError("H must be positive definite");
    bounds.validate();
}

Vec2 tracking_error(const StateVec& raw) { return {raw(0) - raw(6), raw(1) - raw(7)}; }

double reward(const Vec2& error, const ControlInput& action, const Eigen::Matrix2d& H) {
    const Vec2 a(action.thrust, action.rudder);
    return -(error.squaredNorm() + a.dot(H * a));
}

double reward(const MdpState& state, const ControlInput& action, const Eigen::Matrix2d& H) {
    return reward(tracking_error(state.raw), action, H);
}

TrackingEnv::TrackingEnv(Trajectory traj, EpisodeConfig config, dynamics::VehicleModel model)
    : traj_(traj), config_(std::move(config)), model_(std::move(model)) {
    config_.validate();
}

MdpState TrackingEnv::reset(Rng& rng) { return reset(rng, InitialRanges::defaults(traj_)); }

MdpState TrackingEnv::reset(Rng& rng, const InitialRanges& ranges) {
    VehicleState s;
    s.x = uniform(rng, ranges.x.first, ranges.x.second);
    s.y = uniform(rng, ranges.y.first, ranges.y.second);
    s.psi = uniform(rng, ranges.psi.first, ranges.psi.second);
    s.u = uniform(rng, ranges.u.first, ranges.u.second);
    s.v = uniform(rng, ranges.v.first, ranges.v.second);
    s.r = uniform(rng, ranges.r.first, ranges.r.second);
    return reset(s);
}

MdpState TrackingEnv::reset(const VehicleState& initial) {
    if (!initial.finite()) throw NumericError("initial vehicle state is not finite");
    vehicle_ = initial;
    vehicle_.psi = dynamics::wrap_angle(initial.psi);
    k_ = 0;
    started_ = true;
    return observation();
}

MdpState TrackingEnv::observation() const {
    MdpState out;
    const Vec2 d0 = reference_point(traj_, k_ * config_.Ts);
    const Vec2 d1 = reference_point(traj_, (k_ + 1) * config_.Ts);
    out.raw << vehicle_.x, vehicle_.y, vehicle_.psi, vehicle_.u, vehicle_.v, vehicle_.r, d0(0), d0(1), d1(0),
        d1(1);
    out.normalized = normalize(out.raw, config_.bounds);
    return out;
}

StepResult TrackingEnv::step(const ControlInput& action) {
    if (!started_) throw UsageError("step called before reset");
    if (done()) throw UsageError("episode exhausted after " + std::to_string(config_.steps_per_episode) + " steps");

    StepResult res;
    res.applied = dynamics::saturate(action, config_.thrust_limit, config_.rudder_limit);
    const Vec2 d = reference_point(traj_, k_ * config_.Ts);
    res.error = Vec2(vehicle_.x - d(0), vehicle_.y - d(1));
    res.reward = reward(res.error, res.applied, config_.H);

    const double h = config_.Ts / config_.substeps;
    for (int i = 0; i < config_.substeps; ++i) vehicle_ = model_.step(vehicle_, res.applied, h);
    ++k_;
    res.step_index = k_;
    res.state = observation();
    return res;
}

}  // namespace mpqdpg::env
