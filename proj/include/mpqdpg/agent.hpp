// Ensemble actor-critic learner (n actors, m critics) with multi pseudo
// Q-learning targets, and a single actor-critic DDPG baseline.
//
// Conventions:
//   * states fed to networks are the normalized 10-vectors;
//   * actors emit normalized actions in (-1, 1); the affine map
//     a_phys = bound .* a_norm turns them into (thrust, rudder);
//   * critics consume physical-unit actions;
//   * indices of actors and critics are 0-based.
#pragma once

#include "mpqdpg/dynamics.hpp"
#include "mpqdpg/env.hpp"
#include "mpqdpg/neural.hpp"
#include "mpqdpg/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mpqdpg::agent {

using env::StateVec;
using nn::Matrix;
using nn::MlpNetwork;
using ActionVec = Eigen::Vector2d;
using RowVector = Eigen::RowVectorXd;

struct Transition {
    StateVec s = StateVec::Zero();       // normalized
    ActionVec a = ActionVec::Zero();     // physical, saturated
    double r = 0.0;
    StateVec s_next = StateVec::Zero();  // normalized
};

/// Column-stacked transitions.
struct Minibatch {
    Matrix states;        // 10 x N
    Matrix actions;       // 2 x N, physical
    RowVector rewards;    // 1 x N
    Matrix next_states;   // 10 x N

    Eigen::Index size() const { return states.cols(); }
    static Minibatch from(std::span<const Transition> transitions);
};

/// Bounded FIFO; sampling is uniform with replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void store(const Transition& t);
    /// Throws UsageError when empty.
    Minibatch sample(std::size_t n, Rng& rng) const;
    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    /// i-th oldest transition.
    const Transition& at(std::size_t i) const;

private:
    std::size_t capacity_;
    std::vector<Transition> data_;
    std::size_t oldest_ = 0;
};

/// x <- x + theta (mean - x) dt + sigma sqrt(dt) N(0, 1), per component.
struct OuNoise {
    double theta = 0.15;
    double sigma = 0.32;
    double mean = 0.0;
    double dt = 1.0;
    ActionVec state = ActionVec::Zero();

    ActionVec sample(Rng& rng);
    void reset() { state.setZero(); }
};

struct ActionScale {
    ActionVec bound{dynamics::kThrustLimit, dynamics::kRudderLimit};

    ActionVec to_physical(const ActionVec& normalized) const { return bound.cwiseProduct(normalized); }
    Matrix to_physical(const Matrix& normalized) const { return bound.asDiagonal() * normalized; }
    ActionVec saturate(const ActionVec& physical) const;
};

// ---------------------------------------------------------------------------
// Ensemble building blocks

/// Mean of the actor outputs (normalized).
ActionVec average_policy(std::span<const MlpNetwork> actors, const StateVec& s);

/// Physical actions of one actor on a batch of states (2 x N).
Matrix actor_actions(const MlpNetwork& actor, const Matrix& states, const ActionScale& scale);

RowVector q_values(const MlpNetwork& critic, const Matrix& states, const Matrix& actions);

/// Per-critic mean absolute Bellman residual on the batch, bootstrapping each
/// critic with the given actor. Throws UsageError on an empty batch.
std::vector<double> eabe(std::span<const MlpNetwork> critics, const MlpNetwork& actor, const Minibatch& batch,
                         double gamma, const ActionScale& scale);

/// argmax, lowest index on ties. Throws UsageError when empty.
int select_worst_critic(std::span<const double> eabe_values);

/// Per column of `next_states`: the actor proposal with the highest value
/// under `critic` (lowest actor index on ties). Returns 2 x N physical actions.
Matrix sub_greedy(const MlpNetwork& critic, std::span<const MlpNetwork> actors, const Matrix& next_states,
                  const ActionScale& scale);

/// Y = r + gamma/(m-1) sum_{j != c} Q_j(s', a'). Throws ConfigError when m < 2.
RowVector mpq_targets(std::span<const MlpNetwork> critics, int c, const RowVector& rewards,
                      const Matrix& next_states, const Matrix& next_actions, double gamma);

/// Mean squared error of `critic` against fixed targets.
double critic_loss(const MlpNetwork& critic, const Minibatch& batch, const RowVector& targets);

/// One Adam step on the squared-error loss; returns the loss before the step.
double update_critic(MlpNetwork& critic, const Minibatch& batch, const RowVector& targets, double l2);

/// (1/N) sum_l Q(s_l, scale(actor(s_l))).
double actor_objective(const MlpNetwork& actor, const MlpNetwork& critic, const Matrix& states,
                       const ActionScale& scale);

/// Gradient of actor_objective w.r.t. the actor parameters.
nn::ParamGrads actor_gradient(const MlpNetwork& actor, const MlpNetwork& critic, const Matrix& states,
                              const ActionScale& scale);

/// One Adam ascent step on actor_objective; returns the objective before the step.
double update_actor(MlpNetwork& actor, const MlpNetwork& critic, const Matrix& states, const ActionScale& scale);

// ---------------------------------------------------------------------------
// Learners

enum class Phase {
    act,
    env_step,
    store,
    sample,
    eabe,
    select_critic,
    sub_greedy,
    targets,
    critic_update,
    resample_actor,
    actor_update,
    soft_update,
};

std::string_view to_string(Phase p);

using TraceSink = std::function<void(Phase)>;

struct AgentConfig {
    int n_actors = 2;
    int m_critics = 2;
    std::vector<int> hidden{400, 300};
    double lr_actor = 1e-4;
    double lr_critic = 1e-3;
    double l2 = 1e-2;
    double gamma = 0.99;
    std::size_t buffer_capacity = 10000;
    std::size_t minibatch = 64;
    double ou_theta = 0.15;
    double ou_sigma = 0.32;
    double ou_dt = 1.0;
    double tau_soft = 0.001;
    ActionScale scale;

    void validate() const;
};

struct UpdateInfo {
    double critic_loss = 0.0;
    int critic = 0;
    int actor = 0;
};

class Agent {
public:
    Agent(const AgentConfig& config, std::uint64_t seed);
    virtual ~Agent() = default;

    /// Noise-free action is the (average) policy; exploring adds OU noise in
    /// normalized units before scaling and saturation.
    ActionVec act(const StateVec& s, bool explore);

    /// Resets the exploration process.
    void begin_episode() { noise_.reset(); }

    void observe(const Transition& t) { buffer_.store(t); }

    /// One learning iteration, or nullopt while the buffer holds fewer than
    /// `minibatch` transitions.
    virtual std::optional<UpdateInfo> update() = 0;

    /// Networks persisted in checkpoints: actors first, then critics.
    virtual std::vector<MlpNetwork> checkpoint_networks() const = 0;

    void set_trace(TraceSink sink) { trace_ = std::move(sink); }
    const ReplayBuffer& buffer() const { return buffer_; }
    const AgentConfig& config() const { return config_; }
    OuNoise& noise() { return noise_; }

protected:
    virtual std::span<const MlpNetwork> policy_actors() const = 0;
    void trace(Phase p) const {
        if (trace_) trace_(p);
    }

    AgentConfig config_;
    Rng init_rng_;
    Rng explore_rng_;
    Rng replay_rng_;
    Rng choice_rng_;
    ReplayBuffer buffer_;
    OuNoise noise_;
    TraceSink trace_;
};

class EnsembleAgent final : public Agent {
public:
    /// Throws ConfigError unless n >= 1 and m >= 2.
    EnsembleAgent(const AgentConfig& config, std::uint64_t seed);

    std::optional<UpdateInfo> update() override;
    std::vector<MlpNetwork> checkpoint_networks() const override;

    /// Draws a new actor index uniformly from [0, n).
    int resample_actor();
    int last_actor() const { return last_actor_; }

    std::vector<MlpNetwork>& actors() { return actors_; }
    std::vector<MlpNetwork>& critics() { return critics_; }
    const std::vector<MlpNetwork>& actors() const { return actors_; }
    const std::vector<MlpNetwork>& critics() const { return critics_; }

protected:
    std::span<const MlpNetwork> policy_actors() const override { return actors_; }

private:
    std::vector<MlpNetwork> critics_;
    std::vector<MlpNetwork> actors_;
    int last_actor_ = 0;
};

class DdpgAgent final : public Agent {
public:
    DdpgAgent(const AgentConfig& config, std::uint64_t seed);

    std::optional<UpdateInfo> update() override;
    std::vector<MlpNetwork> checkpoint_networks() const override;

    /// Soft-tracks both target networks toward the live ones.
    void soft_update(double tau);

    MlpNetwork& actor() { return actor_[0]; }
    MlpNetwork& critic() { return critic_; }
    const MlpNetwork& target_actor() const { return target_actor_; }
    const MlpNetwork& target_critic() const { return target_critic_; }

protected:
    std::span<const MlpNetwork> policy_actors() const override { return actor_; }

private:
    MlpNetwork critic_;
    std::vector<MlpNetwork> actor_;  // single element, kept as a range for policy_actors()
    MlpNetwork target_critic_;
    MlpNetwork target_actor_;
};

}  // namespace mpqdpg::agent
