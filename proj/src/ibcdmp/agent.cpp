#include "ibcdmp/agent.hpp"

#include <cmath>
#include <random>

#include "ibcdmp/error.hpp"

namespace ibcdmp {

std::string to_string(BcMode mode) {
    switch (mode) {
        case BcMode::Implicit: return "implicit";
        case BcMode::Explicit: return "explicit";
        case BcMode::None: return "none";
    }
    return "?";
}

BcMode parse_bc_mode(const std::string& text) {
    if (text == "implicit") return BcMode::Implicit;
    if (text == "explicit") return BcMode::Explicit;
    if (text == "none") return BcMode::None;
    fail(ErrorKind::InvalidArgument, "bc_mode must be implicit, explicit or none, got '" + text + "'");
}

void AgentConfig::validate() const {
    auto check = [](bool ok, const std::string& what) { require(ok, ErrorKind::ConfigInvariant, what); };
    check(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    check(sigma >= 0.0, "sigma must be >= 0");
    check(episodes >= 0, "episodes must be >= 0");
    check(polyak > 0.0 && polyak < 1.0, "polyak must lie in (0, 1)");
    check(lr_actor > 0.0 && lr_critic > 0.0, "learning rates must be > 0");
    check(n_demo_critic >= 0 && n_inter_critic > 0, "critic batch sizes must be n_demo_critic >= 0, n_inter_critic > 0");
    check(n_demo_actor >= 0 && n_inter_actor > 0, "actor batch sizes must be n_demo_actor >= 0, n_inter_actor > 0");
    check(lambda_bc >= 0.0, "lambda_bc must be >= 0");
    check(update_every >= 1, "update_every must be >= 1");
    check(warmup_steps >= 0, "warmup_steps must be >= 0");
    check(interaction_capacity > 0, "interaction_capacity must be > 0");
    check(static_cast<std::size_t>(n_inter_critic) <= interaction_capacity &&
              static_cast<std::size_t>(n_inter_actor) <= interaction_capacity,
          "batch sizes exceed the interaction buffer capacity");
}

void EnvSampler::validate() const {
    auto check = [](bool ok, const std::string& what) { require(ok, ErrorKind::ConfigInvariant, what); };
    check((goal_half.array() >= 0.0).all() && (test_goal_half.array() >= 0.0).all() &&
              (obst_half.array() >= 0.0).all(),
          "sampling half-extents must be >= 0");
    check(obst_radius > 0.0, "obstacle radius must be > 0");
    check(min_goal_distance >= 0.0, "min_goal_distance must be >= 0");
    // The gate must leave part of each goal box reachable.
    for (const auto& [c, h] : {std::pair{goal_center, goal_half}, std::pair{test_goal_center, test_goal_half}}) {
        const Vec3 far = (c - x_init).cwiseAbs() + h;
        check(far.norm() >= min_goal_distance, "goal box lies entirely inside the min_goal_distance gate");
    }
}

namespace {

Vec3 uniform_box(const Vec3& center, const Vec3& half, Rng& rng) {
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        std::uniform_real_distribution<double> u(center[i] - half[i], center[i] + half[i]);
        out[i] = half[i] > 0.0 ? u(rng) : center[i];
    }
    return out;
}

}  // namespace

EnvInstance sample_env(EnvMode mode, const EnvSampler& sampler, Rng& rng) {
    const bool train = mode == EnvMode::Train;
    const Vec3& gc = train ? sampler.goal_center : sampler.test_goal_center;
    const Vec3& gh = train ? sampler.goal_half : sampler.test_goal_half;
    EnvInstance env;
    env.x_init = sampler.x_init;
    env.obst_radius = sampler.obst_radius;
    constexpr int kMaxDraws = 100000;
    int draws = 0;
    do {
        require(++draws <= kMaxDraws, ErrorKind::ConfigInvariant, "goal sampling never cleared the distance gate");
        env.x_goal = uniform_box(gc, gh, rng);
    } while ((env.x_goal - env.x_init).norm() < sampler.min_goal_distance);
    const Vec3 mid = 0.5 * (env.x_init + (train ? env.x_goal : gc));
    env.obst_top = uniform_box(mid, sampler.obst_half, rng);
    return env;
}

Batch make_batch(const std::vector<Transition>& ts) {
    const auto n = static_cast<Eigen::Index>(ts.size());
    Batch b;
    b.s.resize(kObsDim, n);
    b.a.resize(kActDim, n);
    b.r.resize(n);
    b.s2.resize(kObsDim, n);
    b.d.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Transition& t = ts[static_cast<std::size_t>(j)];
        b.s.col(j) = t.s;
        b.a.col(j) = t.a;
        b.r[j] = t.r;
        b.s2.col(j) = t.s2;
        b.d[j] = t.d ? 1.0 : 0.0;
    }
    return b;
}

Batch gather(const ReplayBuffer& buf, const std::vector<std::size_t>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Batch b;
    b.s.resize(kObsDim, n);
    b.a.resize(kActDim, n);
    b.r.resize(n);
    b.s2.resize(kObsDim, n);
    b.d.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Transition& t = buf.at(idx[static_cast<std::size_t>(j)]);
        b.s.col(j) = t.s;
        b.a.col(j) = t.a;
        b.r[j] = t.r;
        b.s2.col(j) = t.s2;
        b.d[j] = t.d ? 1.0 : 0.0;
    }
    return b;
}

Batch concat(const Batch& x, const Batch& y) {
    const Eigen::Index n = x.size() + y.size();
    Batch b;
    b.s.resize(kObsDim, n);
    b.a.resize(kActDim, n);
    b.r.resize(n);
    b.s2.resize(kObsDim, n);
    b.d.resize(n);
    b.s << x.s, y.s;
    b.a << x.a, y.a;
    b.r << x.r, y.r;
    b.s2 << x.s2, y.s2;
    b.d << x.d, y.d;
    return b;
}

std::vector<Transition> to_transitions(const Batch& b) {
    std::vector<Transition> ts(static_cast<std::size_t>(b.size()));
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        Transition& t = ts[static_cast<std::size_t>(j)];
        t.s = b.s.col(j);
        t.a = b.a.col(j);
        t.r = b.r[j];
        t.s2 = b.s2.col(j);
        t.d = b.d[j] != 0.0;
    }
    return ts;
}

BatchSet sample_batches(const ReplayBuffer& demo, const ReplayBuffer& inter, const AgentConfig& cfg, Rng& rng) {
    const bool none = cfg.bc_mode == BcMode::None;
    const ReplayBuffer& demo_src = none ? inter : demo;
    const auto nda = none ? std::size_t{0} : static_cast<std::size_t>(cfg.n_demo_actor);
    BatchSet out;
    out.demo_actor = gather(demo_src, demo_src.sample_indices(nda, rng));
    out.demo_critic = gather(demo_src, demo_src.sample_indices(static_cast<std::size_t>(cfg.n_demo_critic), rng));
    out.inter_actor = gather(inter, inter.sample_indices(static_cast<std::size_t>(cfg.n_inter_actor), rng));
    out.inter_critic = gather(inter, inter.sample_indices(static_cast<std::size_t>(cfg.n_inter_critic), rng));
    return out;
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
    Eigen::MatrixXd x(s.rows() + a.rows(), s.cols());
    x << s, a;
    return x;
}

double bootstrap_label(double r, bool d, double q_next, double gamma) { return d ? r : r + gamma * q_next; }

Eigen::VectorXd critic_targets(const Batch& b, const Network& actor_target, const Network& critic_target,
                               double gamma) {
    const Eigen::MatrixXd a2 = forward(actor_target, b.s2);
    const Eigen::VectorXd q2 = forward(critic_target, critic_input(b.s2, a2)).row(0).transpose();
    Eigen::VectorXd labels(b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) labels[j] = bootstrap_label(b.r[j], b.d[j] != 0.0, q2[j], gamma);
    return labels;
}

double mse(const Eigen::VectorXd& labels, const Eigen::VectorXd& q) {
    require(labels.size() == q.size() && labels.size() > 0, ErrorKind::InvalidArgument, "mse needs equal, non-empty inputs");
    return (labels - q).squaredNorm() / static_cast<double>(labels.size());
}

double critic_loss(const Network& critic, const Batch& b, const Eigen::VectorXd& labels, std::vector<Layer>* grads) {
    ForwardCache cache;
    const Eigen::VectorXd q = forward(critic, critic_input(b.s, b.a), grads ? &cache : nullptr).row(0).transpose();
    const double loss = mse(labels, q);
    if (grads) {
        const Eigen::MatrixXd dq = (2.0 / static_cast<double>(q.size()) * (q - labels)).transpose();
        *grads = std::move(backward(critic, cache, dq).layers);
    }
    return loss;
}

double ibc_value(const Eigen::VectorXd& q_demo, const Eigen::VectorXd& q_policy) {
    require(q_demo.size() == q_policy.size() && q_demo.size() > 0, ErrorKind::InvalidArgument,
            "ibc needs equal, non-empty inputs");
    return (q_demo - q_policy).cwiseMax(0.0).sum() / static_cast<double>(q_demo.size());
}

double ebc_value(const Eigen::MatrixXd& deviation) {
    require(deviation.cols() > 0, ErrorKind::InvalidArgument, "ebc needs a non-empty batch");
    return deviation.colwise().squaredNorm().sum() / static_cast<double>(deviation.cols());
}

namespace {

// Pushes dL/dQ(s, pi(s)) back through the frozen critic and then through the actor.
std::vector<Layer> actor_grads_through_critic(const Network& actor, const ForwardCache& actor_cache,
                                              const Network& critic, const ForwardCache& critic_cache,
                                              const Eigen::MatrixXd& dq) {
    const Gradients gc = backward(critic, critic_cache, dq, false);
    const Eigen::MatrixXd da = gc.input.bottomRows(kActDim);
    return std::move(backward(actor, actor_cache, da).layers);
}

std::vector<Layer> zero_like(const Network& net) {
    std::vector<Layer> g(net.layers.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i].weight = Eigen::MatrixXd::Zero(net.layers[i].weight.rows(), net.layers[i].weight.cols());
        g[i].bias = Eigen::VectorXd::Zero(net.layers[i].bias.size());
    }
    return g;
}

}  // namespace

double ibc_loss(const Network& actor, const Network& critic, const Batch& demo, std::vector<Layer>* actor_grads) {
    const Eigen::Index n = demo.size();
    require(n > 0, ErrorKind::InvalidArgument, "ibc loss needs a non-empty demo batch");
    ForwardCache ac, cc;
    const Eigen::MatrixXd pi = forward(actor, demo.s, &ac);
    const Eigen::VectorXd q_pi = forward(critic, critic_input(demo.s, pi), &cc).row(0).transpose();
    const Eigen::VectorXd q_demo = forward(critic, critic_input(demo.s, demo.a)).row(0).transpose();
    const double loss = ibc_value(q_demo, q_pi);
    if (actor_grads) {
        Eigen::MatrixXd dq(1, n);
        for (Eigen::Index j = 0; j < n; ++j) dq(0, j) = q_demo[j] - q_pi[j] > 0.0 ? -1.0 / static_cast<double>(n) : 0.0;
        *actor_grads = dq.isZero(0.0) ? zero_like(actor) : actor_grads_through_critic(actor, ac, critic, cc, dq);
    }
    return loss;
}

double ebc_loss(const Network& actor, const Batch& demo, std::vector<Layer>* actor_grads) {
    ForwardCache ac;
    const Eigen::MatrixXd pi = forward(actor, demo.s, actor_grads ? &ac : nullptr);
    const Eigen::MatrixXd dev = demo.a - pi;
    const double loss = ebc_value(dev);
    if (actor_grads) {
        const Eigen::MatrixXd dpi = -2.0 / static_cast<double>(demo.size()) * dev;
        *actor_grads = std::move(backward(actor, ac, dpi).layers);
    }
    return loss;
}

double combine_actor_loss(double q_term, double bc_term, double lambda_bc, BcMode mode) {
    return mode == BcMode::None ? q_term : q_term + lambda_bc * bc_term;
}

ActorLoss actor_loss(const Network& actor, const Network& critic, const Batch& inter, const Batch& demo,
                     double lambda_bc, BcMode mode, std::vector<Layer>* actor_grads) {
    const Eigen::Index ni = inter.size();
    require(ni > 0, ErrorKind::InvalidArgument, "actor loss needs a non-empty interaction batch");
    const bool use_bc = mode != BcMode::None && demo.size() > 0;
    const Eigen::Index nd = use_bc ? demo.size() : 0;

    // One pass over [inter | demo] states so the whole loss shares a single backward.
    Eigen::MatrixXd s(kObsDim, ni + nd);
    s.leftCols(ni) = inter.s;
    if (nd > 0) s.rightCols(nd) = demo.s;
    ForwardCache ac, cc;
    const Eigen::MatrixXd pi = forward(actor, s, &ac);

    ActorLoss out;
    Eigen::MatrixXd dpi = Eigen::MatrixXd::Zero(kActDim, ni + nd);
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(1, ni + nd);

    const bool implicit = use_bc && mode == BcMode::Implicit;
    const Eigen::Index nq = implicit ? ni + nd : ni;
    const Eigen::VectorXd q_pi = forward(critic, critic_input(s.leftCols(nq), pi.leftCols(nq)), &cc).row(0).transpose();
    out.q_term = -q_pi.head(ni).mean();
    dq.leftCols(ni).setConstant(-1.0 / static_cast<double>(ni));

    if (implicit) {
        const Eigen::VectorXd q_demo = forward(critic, critic_input(demo.s, demo.a)).row(0).transpose();
        const Eigen::VectorXd q_pol = q_pi.tail(nd);
        out.bc_term = ibc_value(q_demo, q_pol);
        for (Eigen::Index j = 0; j < nd; ++j) {
            if (q_demo[j] - q_pol[j] > 0.0) dq(0, ni + j) = -lambda_bc / static_cast<double>(nd);
        }
    } else if (use_bc) {
        const Eigen::MatrixXd dev = demo.a - pi.rightCols(nd);
        out.bc_term = ebc_value(dev);
        dpi.rightCols(nd) = -2.0 * lambda_bc / static_cast<double>(nd) * dev;
    }
    out.total = combine_actor_loss(out.q_term, out.bc_term, lambda_bc, mode);

    if (actor_grads) {
        const Gradients gc = backward(critic, cc, dq.leftCols(nq), false);
        dpi.leftCols(nq) += gc.input.bottomRows(kActDim);
        *actor_grads = std::move(backward(actor, ac, dpi).layers);
    }
    return out;
}

Agent make_agent(const AgentConfig& cfg, const DmpConfig& dmp, Rng& init_rng) {
    Agent agent;
    agent.actor = make_actor(init_rng, dmp.f_min, dmp.f_max);
    agent.critic = make_critic(init_rng);
    agent.actor_target = agent.actor;
    agent.critic_target = agent.critic;
    agent.actor_opt = make_optim(agent.actor, cfg.lr_actor, cfg.optimizer);
    agent.critic_opt = make_optim(agent.critic, cfg.lr_critic, cfg.optimizer);
    return agent;
}

Vec3 act(const Network& actor, const Observation& s) {
    const Eigen::MatrixXd out = forward(actor, Eigen::MatrixXd(s));
    return out.col(0);
}

UpdateStats update_agent(Agent& agent, const BatchSet& batches, const AgentConfig& cfg) {
    UpdateStats st;
    const Batch critic_batch = batches.critic();
    const Eigen::VectorXd labels = critic_targets(critic_batch, agent.actor_target, agent.critic_target, cfg.gamma);
    std::vector<Layer> gc;
    st.critic_loss = critic_loss(agent.critic, critic_batch, labels, &gc);
    require(std::isfinite(st.critic_loss), ErrorKind::Numeric, "critic loss is not finite");
    optimizer_step(agent.critic, gc, agent.critic_opt);

    std::vector<Layer> ga;
    st.actor = actor_loss(agent.actor, agent.critic, batches.inter_actor, batches.demo_actor, cfg.lambda_bc,
                          cfg.bc_mode, &ga);
    require(std::isfinite(st.actor.total), ErrorKind::Numeric, "actor loss is not finite");
    optimizer_step(agent.actor, ga, agent.actor_opt);

    soft_update(agent.critic_target, agent.critic, cfg.polyak);
    soft_update(agent.actor_target, agent.actor, cfg.polyak);
    return st;
}

}  // namespace ibcdmp
