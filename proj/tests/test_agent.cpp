#include "gradcheck.hpp"
#include "oracles.hpp"

#include "mpqdpg/agent.hpp"
#include "mpqdpg/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

using namespace mpqdpg;
using namespace mpqdpg::agent;
using nn::Activation;

namespace {

/// Actor whose output is the constant `out` (one tanh layer, zero weights).
MlpNetwork constant_actor(double thrust, double rudder) {
    MlpNetwork net({{env::kStateDim, 2, Activation::tanh}});
    net.layers()[0].b << std::atanh(thrust), std::atanh(rudder);
    return net;
}

/// Critic with Q(s, a) = q0 + w_thrust * thrust + w_rudder * rudder.
MlpNetwork affine_critic(double q0, double w_thrust = 0.0, double w_rudder = 0.0) {
    MlpNetwork net({{env::kStateDim, 1, Activation::linear}, {3, 1, Activation::linear}});
    net.layers()[1].W << 0.0, w_thrust, w_rudder;
    net.layers()[1].b << q0;
    return net;
}

MlpNetwork small_critic(Rng& rng) {
    return MlpNetwork::init(nn::critic_layers(env::kStateDim, env::kActionDim, std::array{12, 8}), rng, {}, 0.5);
}

MlpNetwork small_actor(Rng& rng) {
    return MlpNetwork::init(nn::actor_layers(env::kStateDim, std::array{12, 8}, env::kActionDim), rng, {}, 0.8);
}

Minibatch random_batch(Rng& rng, int n, const ActionScale& scale = {}) {
    std::vector<Transition> ts;
    for (int i = 0; i < n; ++i) {
        Transition t;
        t.s = gradcheck::random_matrix(rng, env::kStateDim, 1);
        t.s_next = gradcheck::random_matrix(rng, env::kStateDim, 1);
        t.a = scale.bound.cwiseProduct(ActionVec(uniform(rng, -1, 1), uniform(rng, -1, 1)));
        t.r = -uniform(rng, 0, 5);
        ts.push_back(t);
    }
    return Minibatch::from(ts);
}

AgentConfig tiny_config() {
    AgentConfig cfg;
    cfg.hidden = {8, 8};
    cfg.minibatch = 4;
    cfg.buffer_capacity = 50;
    return cfg;
}

Transition dummy_transition(double r) {
    Transition t;
    t.r = r;
    t.s.setConstant(r);
    t.s_next.setConstant(-r);
    return t;
}

}  // namespace

TEST_CASE("average policy") {
    const MlpNetwork a = constant_actor(0.5, 0.5);
    const MlpNetwork b = constant_actor(-0.5, -0.5);
    const StateVec s = StateVec::Constant(0.3);

    const std::vector<MlpNetwork> one{a};
    CHECK(average_policy(one, s) == a.forward(s).col(0));

    const std::vector<MlpNetwork> pair{a, b};
    CHECK(average_policy(pair, s).cwiseAbs().maxCoeff() < 1e-15);

    Rng rng = make_rng(1, Stream::network_init);
    const MlpNetwork r = small_actor(rng);
    const std::vector<MlpNetwork> same{r, r, r};
    CHECK((average_policy(same, s) - r.forward(s).col(0)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(average_policy(same, s).cwiseAbs().maxCoeff() < 1.0);
    CHECK_THROWS_AS(average_policy(std::span<const MlpNetwork>{}, s), ConfigError);
}

TEST_CASE("action scaling and act") {
    const ActionScale scale;
    const ActionVec ends = scale.to_physical(ActionVec(1.0, -1.0));
    CHECK(ends(0) == 86.0);
    CHECK(ends(1) == doctest::Approx(-0.2374).epsilon(1e-4));
    const ActionVec clipped = scale.saturate(ActionVec(500.0, -3.0));
    CHECK(clipped(0) == 86.0);
    CHECK(clipped(1) == -dynamics::kRudderLimit);

    AgentConfig cfg = tiny_config();
    cfg.ou_sigma = 0.0;
    EnsembleAgent agent(cfg, 3);
    const StateVec s = StateVec::Constant(0.2);
    const ActionVec quiet = agent.act(s, false);
    CHECK(agent.act(s, true) == quiet);

    AgentConfig noisy = tiny_config();
    noisy.ou_sigma = 2.0;
    EnsembleAgent wild(noisy, 3);
    for (int i = 0; i < 500; ++i) {
        const ActionVec a = wild.act(s, true);
        CHECK(std::abs(a(0)) <= 86.0);
        CHECK(std::abs(a(1)) <= dynamics::kRudderLimit);
    }
}

TEST_CASE("eabe") {
    const ActionScale scale;
    const MlpNetwork actor = constant_actor(0.1, -0.1);

    std::vector<Transition> ts(2);
    ts[0].r = -0.2;
    ts[1].r = 0.4;
    const Minibatch batch = Minibatch::from(ts);
    const std::vector<MlpNetwork> zero{affine_critic(0.0)};
    CHECK(eabe(zero, actor, batch, 0.99, scale)[0] == doctest::Approx(0.3).epsilon(1e-15));

    // Constant reward r: Q = r / (1 - gamma) is a fixed point.
    std::vector<Transition> flat(3, dummy_transition(-2.0));
    const std::vector<MlpNetwork> exact{affine_critic(-2.0 / (1.0 - 0.5))};
    CHECK(eabe(exact, actor, Minibatch::from(flat), 0.5, scale)[0] == 0.0);

    Rng rng = make_rng(2, Stream::network_init);
    const MlpNetwork q = small_critic(rng);
    const std::vector<MlpNetwork> twins{q, q};
    const Minibatch rb = random_batch(rng, 16);
    const auto values = eabe(twins, small_actor(rng), rb, 0.99, scale);
    CHECK(values[0] == values[1]);

    CHECK_THROWS_AS(eabe(twins, actor, Minibatch::from({}), 0.99, scale), UsageError);
}

TEST_CASE("eabe matches a per-transition oracle") {
    Rng rng = make_rng(3, Stream::network_init);
    const ActionScale scale;
    const std::vector<MlpNetwork> critics{small_critic(rng), small_critic(rng), small_critic(rng)};
    const MlpNetwork actor = small_actor(rng);
    const Minibatch batch = random_batch(rng, 9);
    const auto got = eabe(critics, actor, batch, 0.97, scale);
    for (std::size_t j = 0; j < critics.size(); ++j) {
        double sum = 0.0;
        for (Eigen::Index l = 0; l < batch.size(); ++l) {
            std::vector<double> s(batch.states.col(l).data(), batch.states.col(l).data() + 10);
            std::vector<double> s2(batch.next_states.col(l).data(), batch.next_states.col(l).data() + 10);
            std::vector<double> a{batch.actions(0, l), batch.actions(1, l)};
            auto a2 = oracle::forward(actor, s2);
            a2[0] *= scale.bound(0);
            a2[1] *= scale.bound(1);
            sum += std::abs(oracle::forward(critics[j], s, a)[0] - batch.rewards(l) -
                            0.97 * oracle::forward(critics[j], s2, a2)[0]);
        }
        CHECK(got[j] == doctest::Approx(sum / 9.0).epsilon(1e-12));
    }
}

TEST_CASE("select worst critic") {
    CHECK(select_worst_critic(std::vector<double>{0.1, 0.5, 0.3}) == 1);
    CHECK(select_worst_critic(std::vector<double>{0.4, 0.4}) == 0);
    CHECK(select_worst_critic(std::vector<double>{7.0}) == 0);
    CHECK_THROWS_AS(select_worst_critic(std::vector<double>{}), UsageError);

    Rng rng = make_rng(4, Stream::replay);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> v(static_cast<std::size_t>(gradcheck::draw_int(rng, 1, 6)));
        for (auto& x : v) x = static_cast<double>(gradcheck::draw_int(rng, 0, 3));  // frequent ties
        const int c = select_worst_critic(v);
        for (auto& x : v) x += 12.5;
        CHECK(select_worst_critic(v) == c);
    }
}

TEST_CASE("sub-greedy") {
    const ActionScale scale;
    const std::vector<MlpNetwork> actors{constant_actor(1.0 / 86, 0.0), constant_actor(3.0 / 86, 0.0),
                                         constant_actor(2.0 / 86, 0.0)};
    const MlpNetwork critic = affine_critic(0.0, 1.0);
    const nn::Matrix states = nn::Matrix::Zero(env::kStateDim, 2);
    const nn::Matrix chosen = sub_greedy(critic, actors, states, scale);
    for (int l = 0; l < 2; ++l) CHECK(chosen(0, l) == doctest::Approx(3.0).epsilon(1e-12));

    // Ties go to the lowest actor index.
    const std::vector<MlpNetwork> tied{constant_actor(0.2, 0.1), constant_actor(0.2, -0.1)};
    const nn::Matrix first = sub_greedy(affine_critic(0.0, 1.0), tied, states, scale);
    CHECK(first(1, 0) > 0.0);

    Rng rng = make_rng(5, Stream::network_init);
    const std::vector<MlpNetwork> single{small_actor(rng)};
    const nn::Matrix s = gradcheck::random_matrix(rng, env::kStateDim, 5);
    CHECK(sub_greedy(small_critic(rng), single, s, scale) == actor_actions(single[0], s, scale));
}

TEST_CASE("mpq targets") {
    const std::vector<MlpNetwork> three{affine_critic(123.0), affine_critic(-10.0), affine_critic(-20.0)};
    const nn::Matrix s = nn::Matrix::Zero(env::kStateDim, 1);
    const nn::Matrix a = nn::Matrix::Zero(2, 1);
    const RowVector r = RowVector::Constant(1, -0.5);
    CHECK(mpq_targets(three, 0, r, s, a, 0.99)(0) == doctest::Approx(-15.35).epsilon(1e-14));

    const std::vector<MlpNetwork> two{affine_critic(4.0), affine_critic(-8.0)};
    CHECK(mpq_targets(two, 0, r, s, a, 0.9)(0) == doctest::Approx(-0.5 + 0.9 * -8.0).epsilon(1e-15));
    CHECK(mpq_targets(two, 1, r, s, a, 0.9)(0) == doctest::Approx(-0.5 + 0.9 * 4.0).epsilon(1e-15));

    const std::vector<MlpNetwork> one{affine_critic(1.0)};
    CHECK_THROWS_AS(mpq_targets(one, 0, r, s, a, 0.9), ConfigError);
    CHECK_THROWS_AS(mpq_targets(two, 2, r, s, a, 0.9), UsageError);

    Rng rng = make_rng(6, Stream::network_init);
    std::vector<MlpNetwork> critics{small_critic(rng), small_critic(rng), small_critic(rng)};
    const Minibatch batch = random_batch(rng, 8);
    const RowVector before = mpq_targets(critics, 1, batch.rewards, batch.next_states, batch.actions, 0.99);
    for (auto& layer : critics[1].layers()) layer.W += gradcheck::random_matrix(rng, layer.W.rows(), layer.W.cols());
    const RowVector after = mpq_targets(critics, 1, batch.rewards, batch.next_states, batch.actions, 0.99);
    CHECK(before == after);
}

TEST_CASE("critic update") {
    Rng rng = make_rng(7, Stream::network_init);
    MlpNetwork critic = small_critic(rng);
    const Minibatch batch = random_batch(rng, 6);

    // Targets equal to predictions: zero gradient, no movement without decay.
    const RowVector exact = q_values(critic, batch.states, batch.actions);
    const MlpNetwork frozen = critic;
    CHECK(update_critic(critic, batch, exact, 0.0) == 0.0);
    for (std::size_t l = 0; l < critic.layer_count(); ++l) CHECK(critic.layers()[l].W == frozen.layers()[l].W);

    // dL/dQ = (2/N)(Q - Y) on a single transition: check through the output bias,
    // whose derivative dQ/db is exactly 1.
    const Minibatch one = random_batch(rng, 1);
    const RowVector y = RowVector::Constant(1, -3.0);
    MlpNetwork probe = small_critic(rng);
    nn::ForwardCache cache;
    const double q = probe.forward(one.states, one.actions, &cache)(0);
    const auto grads = probe.backward_params(cache, nn::Matrix::Constant(1, 1, 2.0 * (q - y(0))));
    double& bias = probe.layers().back().b(0);
    const double fd = oracle::central_difference([&] { return critic_loss(probe, one, y); }, bias);
    CHECK(grads.db.back()(0) == doctest::Approx(fd).epsilon(1e-6));

    // One small step lowers the loss on a frozen batch.
    MlpNetwork learner = small_critic(rng);
    learner.set_learning_rate(1e-4);
    const RowVector targets = RowVector::Constant(batch.size(), -2.0);
    const double loss0 = update_critic(learner, batch, targets, 0.0);
    CHECK(critic_loss(learner, batch, targets) < loss0);
}

TEST_CASE("actor update") {
    Rng rng = make_rng(8, Stream::network_init);
    const ActionScale scale;
    MlpNetwork actor = small_actor(rng);
    const MlpNetwork before = actor;
    const nn::Matrix states = gradcheck::random_matrix(rng, env::kStateDim, 8);

    // Critic blind to the action: zero policy gradient, actor unchanged.
    MlpNetwork blind = small_critic(rng);
    blind.layers()[1].W.rightCols(2).setZero();
    update_actor(actor, blind, states, scale);
    for (std::size_t l = 0; l < actor.layer_count(); ++l) {
        CHECK(actor.layers()[l].W == before.layers()[l].W);
        CHECK(actor.layers()[l].b == before.layers()[l].b);
    }

    // Ascent: a small step raises the objective.
    const MlpNetwork critic = small_critic(rng);
    actor.set_learning_rate(1e-4);
    const double j0 = update_actor(actor, critic, states, scale);
    CHECK(actor_objective(actor, critic, states, scale) > j0);

    for (int trial = 0; trial < 5; ++trial) CHECK(gradcheck::check_actor_objective(rng).ok());
}

TEST_CASE("actor resampling is uniform") {
    for (int n : {2, 3, 5}) {
        AgentConfig cfg = tiny_config();
        cfg.n_actors = n;
        EnsembleAgent agent(cfg, 11);
        std::vector<int> counts(static_cast<std::size_t>(n), 0);
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(agent.resample_actor())];
        const double p = 1.0 / n;
        const double sigma = std::sqrt(draws * p * (1 - p));
        for (int c : counts) CHECK(std::abs(c - draws * p) <= 3.0 * sigma);
    }
}

TEST_CASE("replay buffer") {
    ReplayBuffer buffer(3);
    Rng rng = make_rng(9, Stream::replay);
    CHECK_THROWS_AS(buffer.sample(1, rng), UsageError);
    for (int i = 1; i <= 4; ++i) buffer.store(dummy_transition(-i));
    CHECK(buffer.size() == 3);
    CHECK(buffer.at(0).r == -2.0);
    CHECK(buffer.at(2).r == -4.0);
    for (int i = 0; i < 200; ++i) {
        const Minibatch b = buffer.sample(5, rng);
        CHECK(b.size() == 5);
        CHECK((b.rewards.array() != -1.0).all());
    }
    CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);

    ReplayBuffer ten(10);
    for (int i = 0; i < 10; ++i) ten.store(dummy_transition(-i));
    std::array<int, 10> counts{};
    for (std::size_t idx : ten.sample_indices(100000, rng)) ++counts[idx];
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    CHECK(oracle::chi_square_sf(chi2, 9) > 0.01);
}

TEST_CASE("chi-square tail oracle") {
    // Reference values of the chi-square survival function.
    CHECK(oracle::chi_square_sf(21.666, 9) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(oracle::chi_square_sf(8.343, 9) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(oracle::chi_square_sf(3.841, 1) == doctest::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("ou noise") {
    OuNoise ou;
    ou.sigma = 0.0;
    ou.state = ActionVec(1.0, -2.0);
    Rng rng = make_rng(10, Stream::exploration);
    CHECK(ou.sample(rng)(0) == doctest::Approx(0.85).epsilon(1e-15));
    for (int k = 2; k <= 30; ++k) {
        const ActionVec x = ou.sample(rng);
        CHECK(x(0) == doctest::Approx(std::pow(0.85, k)).epsilon(1e-12));
        CHECK(x(1) == doctest::Approx(-2.0 * std::pow(0.85, k)).epsilon(1e-12));
    }
    ou.reset();
    CHECK(ou.state.isZero(0.0));

    OuNoise live;
    double sum = 0.0, sq = 0.0;
    const int steps = 1000000;
    for (int i = 0; i < steps; ++i) {
        const double x = live.sample(rng)(0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / steps;
    const double var = sq / steps - mean * mean;
    const double expected = 0.32 * 0.32 / (0.15 * (2.0 - 0.15));
    CHECK(std::abs(var - expected) < 0.1 * expected);
}

TEST_CASE("ensemble agent construction and warm-up") {
    AgentConfig cfg = tiny_config();
    cfg.m_critics = 1;
    CHECK_THROWS_AS(EnsembleAgent(cfg, 1), ConfigError);
    cfg.m_critics = 3;
    cfg.n_actors = 0;
    CHECK_THROWS_AS(EnsembleAgent(cfg, 1), ConfigError);

    cfg = tiny_config();
    EnsembleAgent agent(cfg, 1);
    CHECK(agent.actors().size() == 2);
    CHECK(agent.critics().size() == 2);
    CHECK(agent.checkpoint_networks().size() == 4);
    for (std::size_t i = 0; i + 1 < cfg.minibatch; ++i) {
        agent.observe(dummy_transition(-1.0));
        CHECK_FALSE(agent.update().has_value());
    }
    agent.observe(dummy_transition(-1.0));
    const auto info = agent.update();
    REQUIRE(info.has_value());
    CHECK(info->critic >= 0);
    CHECK(info->critic < 2);
    CHECK(info->actor == agent.last_actor());

    EnsembleAgent twin(cfg, 1);
    const auto nets = twin.checkpoint_networks();
    EnsembleAgent same(cfg, 1);
    CHECK(same.checkpoint_networks()[0].layers()[0].W == nets[0].layers()[0].W);
}

TEST_CASE("ddpg soft updates") {
    AgentConfig cfg = tiny_config();
    DdpgAgent agent(cfg, 2);
    CHECK(agent.checkpoint_networks().size() == 2);
    CHECK(agent.target_actor().layers()[0].W == agent.actor().layers()[0].W);

    Rng rng = make_rng(12, Stream::network_init);
    for (auto& layer : agent.critic().layers()) layer.W += gradcheck::random_matrix(rng, layer.W.rows(), layer.W.cols());
    const MlpNetwork old_target = agent.target_critic();

    agent.soft_update(0.0);
    CHECK(agent.target_critic().layers()[0].W == old_target.layers()[0].W);

    agent.soft_update(0.25);
    for (std::size_t l = 0; l < old_target.layer_count(); ++l) {
        const auto& t = agent.target_critic().layers()[l].W;
        const auto& a = old_target.layers()[l].W;
        const auto& b = agent.critic().layers()[l].W;
        CHECK((t.array() >= a.cwiseMin(b).array()).all());
        CHECK((t.array() <= a.cwiseMax(b).array()).all());
    }

    agent.soft_update(1.0);
    CHECK(agent.target_critic().layers()[1].W == agent.critic().layers()[1].W);

    for (std::size_t i = 0; i < cfg.minibatch; ++i) agent.observe(dummy_transition(-0.5));
    const nn::Matrix before = agent.target_actor().layers()[0].W;
    REQUIRE(agent.update().has_value());
    // tau_soft = 0.001 moves the target by a fraction of the actor's step.
    const nn::Matrix moved = agent.target_actor().layers()[0].W - before;
    const nn::Matrix gap = agent.actor().layers()[0].W - before;
    CHECK((moved - 0.001 * gap).cwiseAbs().maxCoeff() < 1e-15);
}
