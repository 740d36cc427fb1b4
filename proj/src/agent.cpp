#include "mpqdpg/agent.hpp"

#include "mpqdpg/errors.hpp"

#include <cmath>
#include <string>

namespace mpqdpg::agent {

Minibatch Minibatch::from(std::span<const Transition> transitions) {
    const auto n = static_cast<Eigen::Index>(transitions.size());
    Minibatch b{Matrix(env::kStateDim, n), Matrix(env::kActionDim, n), RowVector(n), Matrix(env::kStateDim, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Transition& t = transitions[static_cast<std::size_t>(i)];
        b.states.col(i) = t.s;
        b.actions.col(i) = t.a;
        b.rewards(i) = t.r;
        b.next_states.col(i) = t.s_next;
    }
    return b;
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
    data_.reserve(capacity);
}

void ReplayBuffer::store(const Transition& t) {
    if (data_.size() < capacity_) {
        data_.push_back(t);
        return;
    }
    data_[oldest_] = t;
    oldest_ = (oldest_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= data_.size()) throw UsageError("replay buffer index out of range");
    return data_[(oldest_ + i) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
    if (data_.empty()) throw UsageError("cannot sample from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

Minibatch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    const std::vector<std::size_t> idx = sample_indices(n, rng);
    const auto cols = static_cast<Eigen::Index>(n);
    Minibatch b{Matrix(env::kStateDim, cols), Matrix(env::kActionDim, cols), RowVector(cols),
                Matrix(env::kStateDim, cols)};
    for (Eigen::Index i = 0; i < cols; ++i) {
        const Transition& t = data_[idx[static_cast<std::size_t>(i)]];
        b.states.col(i) = t.s;
        b.actions.col(i) = t.a;
        b.rewards(i) = t.r;
        b.next_states.col(i) = t.s_next;
    }
    return b;
}

ActionVec OuNoise::sample(Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double diffusion = sigma * std::sqrt(dt);
    for (int i = 0; i < state.size(); ++i) {
        const double z = normal(rng);
        state(i) += theta * (mean - state(i)) * dt + diffusion * z;
    }
    return state;
}

ActionVec ActionScale::saturate(const ActionVec& physical) const {
    return {dynamics::saturate(physical(0), bound(0)), dynamics::saturate(physical(1), bound(1))};
}

// ---------------------------------------------------------------------------

ActionVec average_policy(std::span<const MlpNetwork> actors, const StateVec& s) {
    if (actors.empty()) throw ConfigError("average policy needs at least one actor");
    const Matrix input = s;
    ActionVec sum = ActionVec::Zero();
    for (const MlpNetwork& actor : actors) sum += actor.forward(input).col(0);
    return sum / static_cast<double>(actors.size());
}

Matrix actor_actions(const MlpNetwork& actor, const Matrix& states, const ActionScale& scale) {
    return scale.to_physical(actor.forward(states));
}

RowVector q_values(const MlpNetwork& critic, const Matrix& states, const Matrix& actions) {
    return critic.forward(states, actions).row(0);
}

std::vector<double> eabe(std::span<const MlpNetwork> critics, const MlpNetwork& actor, const Minibatch& batch,
                         double gamma, const ActionScale& scale) {
    if (batch.size() == 0) throw UsageError("EABE needs a non-empty minibatch");
    const Matrix next_actions = actor_actions(actor, batch.next_states, scale);
    std::vector<double> out;
    out.reserve(critics.size());
    for (const MlpNetwork& q : critics) {
        const RowVector residual =
            q_values(q, batch.states, batch.actions) - batch.rewards - gamma * q_values(q, batch.next_states, next_actions);
        out.push_back(residual.cwiseAbs().mean());
    }
    return out;
}

int select_worst_critic(std::span<const double> eabe_values) {
    if (eabe_values.empty()) throw UsageError("no critics to select from");
    int best = 0;
    for (std::size_t j = 1; j < eabe_values.size(); ++j) {
        if (eabe_values[j] > eabe_values[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
    }
    return best;
}

Matrix sub_greedy(const MlpNetwork& critic, std::span<const MlpNetwork> actors, const Matrix& next_states,
                  const ActionScale& scale) {
    if (actors.empty()) throw ConfigError("sub-greedy policy needs at least one actor");
    Matrix best = actor_actions(actors[0], next_states, scale);
    if (actors.size() == 1) return best;
    RowVector best_q = q_values(critic, next_states, best);
    for (std::size_t i = 1; i < actors.size(); ++i) {
        const Matrix candidate = actor_actions(actors[i], next_states, scale);
        const RowVector q = q_values(critic, next_states, candidate);
        for (Eigen::Index l = 0; l < q.size(); ++l) {
            if (q(l) > best_q(l)) {
                best_q(l) = q(l);
                best.col(l) = candidate.col(l);
            }
        }
    }
    return best;
}

RowVector mpq_targets(std::span<const MlpNetwork> critics, int c, const RowVector& rewards, const Matrix& next_states,
                      const Matrix& next_actions, double gamma) {
    const auto m = static_cast<int>(critics.size());
    if (m < 2) throw ConfigError("MPQ targets need at least two critics");
    if (c < 0 || c >= m) throw UsageError("critic index out of range");
    RowVector sum = RowVector::Zero(rewards.size());
    for (int j = 0; j < m; ++j) {
        if (j == c) continue;
        sum += q_values(critics[static_cast<std::size_t>(j)], next_states, next_actions);
    }
    return rewards + (gamma / static_cast<double>(m - 1)) * sum;
}

double critic_loss(const MlpNetwork& critic, const Minibatch& batch, const RowVector& targets) {
    return (q_values(critic, batch.states, batch.actions) - targets).squaredNorm() / static_cast<double>(batch.size());
}

double update_critic(MlpNetwork& critic, const Minibatch& batch, const RowVector& targets, double l2) {
    nn::ForwardCache cache;
    const RowVector q = critic.forward(batch.states, batch.actions, &cache).row(0);
    const RowVector diff = q - targets;
    const double n = static_cast<double>(batch.size());
    const Matrix upstream = (2.0 / n) * diff;
    critic.adam_step(critic.backward_params(cache, upstream), l2);
    return diff.squaredNorm() / n;
}

double actor_objective(const MlpNetwork& actor, const MlpNetwork& critic, const Matrix& states,
                       const ActionScale& scale) {
    return q_values(critic, states, actor_actions(actor, states, scale)).mean();
}

namespace {

// Gradient of the actor objective, optionally negated for descent.
nn::ParamGrads objective_gradient(const MlpNetwork& actor, const MlpNetwork& critic, const Matrix& states,
                                  const ActionScale& scale, double sign, double* objective) {
    nn::ForwardCache actor_cache;
    nn::ForwardCache critic_cache;
    const Matrix normalized = actor.forward(states, &actor_cache);
    const Matrix physical = scale.to_physical(normalized);
    const Matrix q = critic.forward(states, physical, &critic_cache);
    if (objective != nullptr) *objective = q.mean();

    const double n = static_cast<double>(states.cols());
    const Matrix upstream = Matrix::Constant(1, states.cols(), 1.0 / n);
    const nn::InputGrads dq = critic.backward_input(critic_cache, upstream);
    // Chain through the diagonal action scaling.
    const Matrix d_normalized = sign * (scale.bound.asDiagonal() * dq.side);
    return actor.backward_params(actor_cache, d_normalized);
}

}  // namespace

nn::ParamGrads actor_gradient(const MlpNetwork& actor, const MlpNetwork& critic, const Matrix& states,
                              const ActionScale& scale) {
    return objective_gradient(actor, critic, states, scale, 1.0, nullptr);
}

double update_actor(MlpNetwork& actor, const MlpNetwork& critic, const Matrix& states, const ActionScale& scale) {
    double objective = 0.0;
    const nn::ParamGrads descent = objective_gradient(actor, critic, states, scale, -1.0, &objective);
    actor.adam_step(descent, 0.0);
    return objective;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::act: return "act";
        case Phase::env_step: return "env_step";
        case Phase::store: return "store";
        case Phase::sample: return "sample";
        case Phase::eabe: return "eabe";
        case Phase::select_critic: return "select_critic";
        case Phase::sub_greedy: return "sub_greedy";
        case Phase::targets: return "targets";
        case Phase::critic_update: return "critic_update";
        case Phase::resample_actor: return "resample_actor";
        case Phase::actor_update: return "actor_update";
        case Phase::soft_update: return "soft_update";
    }
    return "?";
}

void AgentConfig::validate() const {
    if (n_actors < 1) throw ConfigError("n_actors must be at least 1");
    if (m_critics < 1) throw ConfigError("m_critics must be at least 1");
    if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
    for (int h : hidden) {
        if (h <= 0) throw ConfigError("hidden widths must be positive");
    }
    if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (buffer_capacity == 0) throw ConfigError("buffer capacity must be positive");
    if (minibatch == 0) throw ConfigError("minibatch must be positive");
    if (!(ou_theta >= 0.0) || !(ou_sigma >= 0.0) || !(ou_dt > 0.0)) throw ConfigError("invalid OU parameters");
    if (!(tau_soft >= 0.0 && tau_soft <= 1.0)) throw ConfigError("tau_soft must lie in [0, 1]");
    if (!(scale.bound.array() > 0.0).all()) throw ConfigError("action bounds must be positive");
}

Agent::Agent(const AgentConfig& config, std::uint64_t seed)
    : config_(config),
      init_rng_(make_rng(seed, Stream::network_init)),
      explore_rng_(make_rng(seed, Stream::exploration)),
      replay_rng_(make_rng(seed, Stream::replay)),
      choice_rng_(make_rng(seed, Stream::actor_choice)),
      buffer_(config.buffer_capacity) {
    config_.validate();
    noise_.theta = config_.ou_theta;
    noise_.sigma = config_.ou_sigma;
    noise_.dt = config_.ou_dt;
}

ActionVec Agent::act(const StateVec& s, bool explore) {
    trace(Phase::act);
    ActionVec normalized = average_policy(policy_actors(), s);
    if (explore) normalized += noise_.sample(explore_rng_);
    return config_.scale.saturate(config_.scale.to_physical(normalized));
}

// ---------------------------------------------------------------------------

EnsembleAgent::EnsembleAgent(const AgentConfig& config, std::uint64_t seed) : Agent(config, seed) {
    if (config_.m_critics < 2) throw ConfigError("mpq-dpg requires at least two critics");
    const auto critic_specs = nn::critic_layers(env::kStateDim, env::kActionDim, config_.hidden);
    const auto actor_specs = nn::actor_layers(env::kStateDim, config_.hidden, env::kActionDim);
    for (int j = 0; j < config_.m_critics; ++j) {
        critics_.push_back(MlpNetwork::init(critic_specs, init_rng_, {.learning_rate = config_.lr_critic}));
    }
    for (int i = 0; i < config_.n_actors; ++i) {
        actors_.push_back(MlpNetwork::init(actor_specs, init_rng_, {.learning_rate = config_.lr_actor}));
    }
    last_actor_ = resample_actor();
}

int EnsembleAgent::resample_actor() {
    return std::uniform_int_distribution<int>(0, config_.n_actors - 1)(choice_rng_);
}

std::optional<UpdateInfo> EnsembleAgent::update() {
    if (buffer_.size() < config_.minibatch) return std::nullopt;
    const ActionScale& scale = config_.scale;

    trace(Phase::sample);
    const Minibatch batch = buffer_.sample(config_.minibatch, replay_rng_);

    trace(Phase::eabe);
    const std::vector<double> errors =
        eabe(critics_, actors_[static_cast<std::size_t>(last_actor_)], batch, config_.gamma, scale);

    trace(Phase::select_critic);
    const int c = select_worst_critic(errors);
    MlpNetwork& worst = critics_[static_cast<std::size_t>(c)];

    trace(Phase::sub_greedy);
    const Matrix next_actions = sub_greedy(worst, actors_, batch.next_states, scale);

    trace(Phase::targets);
    const RowVector targets = mpq_targets(critics_, c, batch.rewards, batch.next_states, next_actions, config_.gamma);

    trace(Phase::critic_update);
    UpdateInfo info;
    info.critic = c;
    info.critic_loss = update_critic(worst, batch, targets, config_.l2);

    trace(Phase::resample_actor);
    last_actor_ = resample_actor();
    info.actor = last_actor_;

    trace(Phase::actor_update);
    update_actor(actors_[static_cast<std::size_t>(last_actor_)], worst, batch.states, scale);
    return info;
}

std::vector<MlpNetwork> EnsembleAgent::checkpoint_networks() const {
    std::vector<MlpNetwork> nets = actors_;
    nets.insert(nets.end(), critics_.begin(), critics_.end());
    return nets;
}

// ---------------------------------------------------------------------------

DdpgAgent::DdpgAgent(const AgentConfig& config, std::uint64_t seed) : Agent(config, seed) {
    critic_ = MlpNetwork::init(nn::critic_layers(env::kStateDim, env::kActionDim, config_.hidden), init_rng_,
                               {.learning_rate = config_.lr_critic});
    actor_.push_back(MlpNetwork::init(nn::actor_layers(env::kStateDim, config_.hidden, env::kActionDim), init_rng_,
                                      {.learning_rate = config_.lr_actor}));
    target_critic_ = critic_;
    target_actor_ = actor_[0];
}

void DdpgAgent::soft_update(double tau) {
    target_critic_.soft_update_from(critic_, tau);
    target_actor_.soft_update_from(actor_[0], tau);
}

std::optional<UpdateInfo> DdpgAgent::update() {
    if (buffer_.size() < config_.minibatch) return std::nullopt;
    const ActionScale& scale = config_.scale;

    trace(Phase::sample);
    const Minibatch batch = buffer_.sample(config_.minibatch, replay_rng_);

    trace(Phase::targets);
    const Matrix next_actions = actor_actions(target_actor_, batch.next_states, scale);
    const RowVector targets =
        batch.rewards + config_.gamma * q_values(target_critic_, batch.next_states, next_actions);

    trace(Phase::critic_update);
    UpdateInfo info;
    info.critic_loss = update_critic(critic_, batch, targets, config_.l2);

    trace(Phase::actor_update);
    update_actor(actor_[0], critic_, batch.states, scale);

    trace(Phase::soft_update);
    soft_update(config_.tau_soft);
    return info;
}

std::vector<MlpNetwork> DdpgAgent::checkpoint_networks() const { return {actor_[0], critic_}; }

}  // namespace mpqdpg::agent
