#include <doctest.h>

#include <cmath>

#include "ibcdmp/agent.hpp"
#include "ibcdmp/error.hpp"

using namespace ibcdmp;

namespace {

Network constant_critic(double value) {
    Rng rng(0);
    Network c = make_critic(rng);
    c.unflatten(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.param_count())));
    c.layers.back().bias(0) = value;
    return c;
}

Batch random_batch(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> n01;
    Batch b;
    b.s.resize(kObsDim, n);
    b.a.resize(kActDim, n);
    b.s2.resize(kObsDim, n);
    b.r.resize(n);
    b.d.resize(n);
    for (Eigen::Index i = 0; i < b.s.size(); ++i) b.s(i) = 0.2 * n01(rng);
    for (Eigen::Index i = 0; i < b.a.size(); ++i) b.a(i) = 2.0 * n01(rng);
    for (Eigen::Index i = 0; i < b.s2.size(); ++i) b.s2(i) = 0.2 * n01(rng);
    for (Eigen::Index j = 0; j < n; ++j) {
        b.r[j] = -std::abs(n01(rng));
        b.d[j] = j % 5 == 0 ? 1.0 : 0.0;
    }
    return b;
}

ReplayBuffer filled(std::size_t n, bool demo) {
    ReplayBuffer buf(n + 10);
    for (std::size_t i = 0; i < n; ++i) {
        Transition t;
        t.r = static_cast<double>(i);
        t.demo = demo;
        buf.push(t);
    }
    return buf;
}

struct Nets {
    Network actor;
    Network critic;
};

Nets random_nets(std::uint64_t seed) {
    Rng rng(seed);
    Nets n{make_actor(rng, -5.0, 5.0), make_critic(rng)};
    n.actor.layers.back().weight *= 30.0;
    n.critic.layers.back().weight *= 100.0;
    return n;
}

// Central-difference check of an actor-parameter gradient against a scalar loss.
double grad_rel_error(Network actor, const std::function<double(const Network&)>& loss,
                      const std::vector<Layer>& analytic_layers) {
    const Eigen::VectorXd analytic = flatten(analytic_layers);
    const Eigen::VectorXd theta = actor.flatten();
    Eigen::VectorXd numeric(theta.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd p = theta;
        p(i) += h;
        actor.unflatten(p);
        const double up = loss(actor);
        p(i) -= 2 * h;
        actor.unflatten(p);
        numeric(i) = (up - loss(actor)) / (2 * h);
    }
    return (analytic - numeric).norm() / std::max(1e-12, analytic.norm() + numeric.norm());
}

}  // namespace

TEST_CASE("bootstrap labels") {
    CHECK(bootstrap_label(-1.0, true, 5.0, 0.99) == -1.0);
    CHECK(bootstrap_label(-1.0, false, 2.0, 0.99) == doctest::Approx(0.98).epsilon(1e-12));
    CHECK(bootstrap_label(-0.5, false, 7.0, 0.0) == -0.5);

    Rng rng(1);
    const Batch b = random_batch(10, rng);
    const Network actor = make_actor(rng, -5, 5);
    const Eigen::VectorXd labels = critic_targets(b, actor, constant_critic(3.0), 0.9);
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        CHECK(labels[j] == doctest::Approx(b.d[j] != 0.0 ? b.r[j] : b.r[j] + 0.9 * 3.0).epsilon(1e-12));
    }
}

TEST_CASE("critic loss examples") {
    Eigen::VectorXd l(2), q(2);
    l << 1.0, 2.0;
    q << 1.0, 2.0;
    CHECK(mse(l, q) == 0.0);
    CHECK(mse(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)) == 1.0);
    q << 0.0, -1.0;  // errors 1 and 3
    CHECK(mse(l, q) == 5.0);
}

TEST_CASE("critic gradient matches central differences") {
    Rng rng(2);
    Network critic = make_critic(rng);
    critic.layers.back().weight *= 100.0;
    const Batch b = random_batch(6, rng);
    Eigen::VectorXd labels = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
    std::vector<Layer> g;
    critic_loss(critic, b, labels, &g);
    const Eigen::VectorXd analytic = flatten(g);
    const Eigen::VectorXd theta = critic.flatten();
    Eigen::VectorXd numeric(theta.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd p = theta;
        p(i) += h;
        critic.unflatten(p);
        const double up = critic_loss(critic, b, labels);
        p(i) -= 2 * h;
        critic.unflatten(p);
        numeric(i) = (up - critic_loss(critic, b, labels)) / (2 * h);
    }
    CHECK((analytic - numeric).norm() / (analytic.norm() + numeric.norm()) < 1e-5);
}

TEST_CASE("targets are held fixed during the critic step") {
    Rng rng(3);
    const Network critic = make_critic(rng);
    const Batch b = random_batch(8, rng);
    const Network actor_t = make_actor(rng, -5, 5);
    const Eigen::VectorXd labels = critic_targets(b, actor_t, make_critic(rng), 0.99);
    std::vector<Layer> g1, g2;
    critic_loss(critic, b, labels, &g1);
    // The same labels computed from a perturbed target network give a different label vector,
    // but the gradient only depends on the labels passed in, never on the target weights.
    critic_loss(critic, b, Eigen::VectorXd(labels), &g2);
    CHECK(flatten(g1) == flatten(g2));
    Network critic_t2 = make_critic(rng);
    const Eigen::VectorXd labels2 = critic_targets(b, actor_t, critic_t2, 0.99);
    std::vector<Layer> g3;
    critic_loss(critic, b, labels2, &g3);
    CHECK(flatten(g3) != flatten(g1));
}

TEST_CASE("implicit and explicit behaviour-cloning values") {
    CHECK(ibc_value(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.4)) ==
          doctest::Approx(0.6).epsilon(1e-12));
    Eigen::VectorXd qd(2), qp(2);
    qd << 1.0, 0.5;
    qp << 2.0, 0.5;
    CHECK(ibc_value(qd, qp) == 0.0);
    qp << 0.4, 0.7;  // gaps 0.6 and -0.2
    CHECK(ibc_value(qd, qp) == doctest::Approx(0.3).epsilon(1e-12));

    CHECK(ebc_value(Eigen::MatrixXd::Zero(3, 4)) == 0.0);
    Eigen::MatrixXd dev(3, 1);
    dev << 1.0, 0.0, 0.0;
    CHECK(ebc_value(dev) == 1.0);
    Eigen::MatrixXd dev2(3, 2);
    dev2 << 1.0, 0.0, 0.0, 2.0, 0.0, 0.0;  // columns (1,0,0) and (0,2,0)
    CHECK(ebc_value(dev2) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("actor loss combination") {
    CHECK(combine_actor_loss(2.0, 5.0, 0.0, BcMode::Implicit) == 2.0);
    CHECK(combine_actor_loss(2.0, 0.0, 2.0, BcMode::Implicit) == 2.0);
    CHECK(combine_actor_loss(2.0, 0.5, 2.0, BcMode::Explicit) == 3.0);
    CHECK(combine_actor_loss(2.0, 0.5, 2.0, BcMode::None) == 2.0);
}

TEST_CASE("implicit term is gated by the critic") {
    Rng rng(4);
    const Network actor = make_actor(rng, -5, 5);
    const Batch demo = random_batch(20, rng);
    std::vector<Layer> g;
    // A constant critic rates every action the same, so no sample is gated positive.
    const double loss = ibc_loss(actor, constant_critic(1.5), demo, &g);
    CHECK(loss == 0.0);
    CHECK(flatten(g).isZero(0.0));
}

TEST_CASE("actor gradients match central differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Nets n = random_nets(seed);
        Rng rng(seed + 50);
        const Batch inter = random_batch(5, rng);
        const Batch demo = random_batch(4, rng);
        for (BcMode mode : {BcMode::Implicit, BcMode::Explicit, BcMode::None}) {
            std::vector<Layer> g;
            actor_loss(n.actor, n.critic, inter, demo, 2.0, mode, &g);
            const double rel = grad_rel_error(
                n.actor, [&](const Network& a) { return actor_loss(a, n.critic, inter, demo, 2.0, mode).total; }, g);
            CHECK(rel < 1e-4);
        }
        std::vector<Layer> g;
        ibc_loss(n.actor, n.critic, demo, &g);
        CHECK(grad_rel_error(n.actor, [&](const Network& a) { return ibc_loss(a, n.critic, demo); }, g) < 1e-4);
        ebc_loss(n.actor, demo, &g);
        CHECK(grad_rel_error(n.actor, [&](const Network& a) { return ebc_loss(a, demo); }, g) < 1e-4);
    }
}

TEST_CASE("zero weight with an empty demonstration batch reduces to the plain actor loss") {
    const Nets n = random_nets(9);
    Rng rng(10);
    const Batch inter = random_batch(6, rng);
    const Batch empty = make_batch({});
    std::vector<Layer> g_plain, g_zero;
    const ActorLoss plain = actor_loss(n.actor, n.critic, inter, empty, 2.0, BcMode::None, &g_plain);
    const ActorLoss zero = actor_loss(n.actor, n.critic, inter, empty, 0.0, BcMode::Implicit, &g_zero);
    CHECK(plain.total == zero.total);
    CHECK(flatten(g_plain) == flatten(g_zero));
    CHECK(plain.total == plain.q_term);
}

TEST_CASE("batch sampling sizes") {
    const AgentConfig cfg;
    const ReplayBuffer demo = filled(600, true);
    const ReplayBuffer inter = filled(200, false);
    Rng rng(5);
    const BatchSet bs = sample_batches(demo, inter, cfg, rng);
    CHECK(bs.demo_actor.size() == 100);
    CHECK(bs.demo_critic.size() == 450);
    CHECK(bs.inter_actor.size() == 100);
    CHECK(bs.inter_critic.size() == 50);
    CHECK(bs.critic().size() == 500);
    CHECK(cfg.refining_factor() == 9.0);

    const ReplayBuffer small = filled(400, true);
    try {
        sample_batches(small, inter, cfg, rng);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientData);
    }

    AgentConfig none = cfg;
    none.bc_mode = BcMode::None;
    const ReplayBuffer big_inter = filled(600, false);
    const BatchSet bn = sample_batches(ReplayBuffer(1), big_inter, none, rng);
    CHECK(bn.demo_actor.size() == 0);
    CHECK(bn.demo_critic.size() == 450);
}

TEST_CASE("scene sampling boxes") {
    const EnvSampler s;
    Rng rng(6);
    for (int i = 0; i < 2000; ++i) {
        const EnvInstance tr = sample_env(EnvMode::Train, s, rng);
        REQUIRE(((tr.x_goal - s.goal_center).cwiseAbs().array() <= s.goal_half.array()).all());
        const Vec3 mid = 0.5 * (tr.x_init + tr.x_goal);
        REQUIRE(((tr.obst_top - mid).cwiseAbs().array() <= s.obst_half.array() + 1e-15).all());
        REQUIRE((tr.x_goal - tr.x_init).norm() >= s.min_goal_distance);

        const EnvInstance te = sample_env(EnvMode::Test, s, rng);
        REQUIRE(((te.x_goal - s.test_goal_center).cwiseAbs().array() <= s.test_goal_half.array()).all());
        REQUIRE((te.x_goal - te.x_init).norm() >= s.min_goal_distance);
        const Vec3 tmid = 0.5 * (te.x_init + s.test_goal_center);
        REQUIRE(((te.obst_top - tmid).cwiseAbs().array() <= s.obst_half.array() + 1e-15).all());
    }
}

TEST_CASE("agent configuration invariants") {
    AgentConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = [](auto mutate) {
        AgentConfig cfg;
        mutate(cfg);
        try {
            cfg.validate();
        } catch (const Error& e) {
            return e.kind() == ErrorKind::ConfigInvariant;
        }
        return false;
    };
    CHECK(bad([](AgentConfig& a) { a.gamma = 1.0; }));
    CHECK(bad([](AgentConfig& a) { a.polyak = 1.0; }));
    CHECK(bad([](AgentConfig& a) { a.n_inter_critic = 0; }));
    CHECK(bad([](AgentConfig& a) { a.lambda_bc = -1.0; }));
    CHECK(parse_bc_mode("explicit") == BcMode::Explicit);
    CHECK(to_string(BcMode::None) == "none");
    CHECK_THROWS_AS(parse_bc_mode("both"), Error);
}

TEST_CASE("one update moves each target by at most (1 - polyak) of the gap") {
    AgentConfig cfg;
    cfg.n_demo_critic = 20;
    cfg.n_inter_critic = 10;
    cfg.n_demo_actor = 10;
    cfg.n_inter_actor = 10;
    Rng init(7);
    Agent agent = make_agent(cfg, DmpConfig{}, init);
    // Separate the targets from the online nets first.
    Rng other(8);
    agent.actor_target = make_actor(other, -5, 5);
    agent.critic_target = make_critic(other);

    ReplayBuffer demo(100), inter(100);
    Rng data(9);
    for (const Transition& t : to_transitions(random_batch(60, data))) {
        demo.push(t);
        inter.push(t);
    }
    for (int k = 0; k < 5; ++k) {
        const Eigen::VectorXd at0 = agent.actor_target.flatten(), ct0 = agent.critic_target.flatten();
        const Eigen::VectorXd a0 = agent.actor.flatten(), c0 = agent.critic.flatten();
        Rng br(100 + k);
        update_agent(agent, sample_batches(demo, inter, cfg, br), cfg);
        const Eigen::VectorXd a1 = agent.actor.flatten(), c1 = agent.critic.flatten();
        CHECK(agent.actor_target.flatten().isApprox(cfg.polyak * at0 + (1 - cfg.polyak) * a1, 1e-12));
        CHECK(agent.critic_target.flatten().isApprox(cfg.polyak * ct0 + (1 - cfg.polyak) * c1, 1e-12));
        CHECK((agent.actor_target.flatten() - at0).norm() <= (1 - cfg.polyak) * (a1 - at0).norm() * (1 + 1e-9));
        CHECK(a1 != a0);
        CHECK(c1 != c0);
    }
}

TEST_CASE("act returns the actor output for one observation") {
    Rng rng(12);
    const Network actor = make_actor(rng, -5, 5);
    Observation s;
    s << 0.1, 0.2, 0.05, 0, 0, 0, -0.05, 0.02, -0.015, 1.0;
    const Vec3 a = act(actor, s);
    CHECK(a == Vec3(forward(actor, Eigen::MatrixXd(s)).col(0)));
    CHECK((a.array().abs() <= 5.0).all());
}
