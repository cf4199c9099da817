#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ibcdmp/buffer.hpp"
#include "ibcdmp/dmp.hpp"
#include "ibcdmp/neural.hpp"
#include "ibcdmp/rng.hpp"

namespace ibcdmp {

enum class BcMode { Implicit, Explicit, None };

std::string to_string(BcMode mode);
BcMode parse_bc_mode(const std::string& text);

struct AgentConfig {
    double gamma = 0.99;
    double sigma = 0.1;
    int episodes = 500;
    double polyak = 0.995;
    double lr_actor = 1e-3;
    double lr_critic = 1e-3;
    int n_demo_critic = 450;
    int n_inter_critic = 50;
    int n_demo_actor = 100;
    int n_inter_actor = 100;
    double lambda_bc = 2.0;
    int update_every = 1;
    int warmup_steps = 1000;
    BcMode bc_mode = BcMode::Implicit;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::size_t interaction_capacity = 1000000;

    void validate() const;
    double refining_factor() const { return static_cast<double>(n_demo_critic) / n_inter_critic; }
};

enum class EnvMode { Train, Test };

struct EnvSampler {
    Vec3 x_init = Vec3(0.0, 0.0, 0.05);
    Vec3 goal_center = Vec3(0.30, 0.35, 0.08);
    Vec3 goal_half = Vec3(0.05, 0.05, 0.01);
    Vec3 test_goal_center = Vec3(0.32, 0.34, 0.09);
    Vec3 test_goal_half = Vec3(0.3, 0.25, 0.05);
    Vec3 obst_half = Vec3(0.05, 0.05, 0.02);
    double obst_radius = 0.035;
    double min_goal_distance = 0.15;

    void validate() const;
};

/// Goal uniform in the mode's box (re-drawn while closer than the distance gate), obstacle
/// top uniform around the start/box-centre midpoint: the sampled goal in training, the test
/// box centre in test mode.
EnvInstance sample_env(EnvMode mode, const EnvSampler& sampler, Rng& rng);

// Column-stacked transitions.
struct Batch {
    Eigen::MatrixXd s;   // 10 x n
    Eigen::MatrixXd a;   // 3 x n
    Eigen::VectorXd r;
    Eigen::MatrixXd s2;  // 10 x n
    Eigen::VectorXd d;   // 1.0 on terminal samples

    Eigen::Index size() const { return s.cols(); }
};

Batch make_batch(const std::vector<Transition>& ts);
Batch gather(const ReplayBuffer& buf, const std::vector<std::size_t>& idx);
Batch concat(const Batch& a, const Batch& b);
std::vector<Transition> to_transitions(const Batch& b);

struct BatchSet {
    Batch demo_actor;    // B_D^pi
    Batch demo_critic;   // B_D^Q
    Batch inter_actor;   // B_I^pi
    Batch inter_critic;  // B_I^Q
    Batch critic() const { return concat(demo_critic, inter_critic); }
};

/// Four independent uniform draws, in the order listed in BatchSet. With bc_mode none the
/// demonstration-side draws come from the interaction buffer and the actor demo batch is empty.
BatchSet sample_batches(const ReplayBuffer& demo, const ReplayBuffer& inter, const AgentConfig& cfg, Rng& rng);

/// Critic input [s; a].
Eigen::MatrixXd critic_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a);

/// l = r + gamma (1 - d) Q'(s2, pi'(s2)).
double bootstrap_label(double r, bool d, double q_next, double gamma);
Eigen::VectorXd critic_targets(const Batch& b, const Network& actor_target, const Network& critic_target,
                               double gamma);

/// Mean squared error of the labels against Q(s, a).
double mse(const Eigen::VectorXd& labels, const Eigen::VectorXd& q);
double critic_loss(const Network& critic, const Batch& b, const Eigen::VectorXd& labels,
                   std::vector<Layer>* grads = nullptr);

/// Mean of ReLU(q_demo - q_policy).
double ibc_value(const Eigen::VectorXd& q_demo, const Eigen::VectorXd& q_policy);
/// Mean squared Euclidean norm of the columns.
double ebc_value(const Eigen::MatrixXd& deviation);

double ibc_loss(const Network& actor, const Network& critic, const Batch& demo, std::vector<Layer>* actor_grads = nullptr);
double ebc_loss(const Network& actor, const Batch& demo, std::vector<Layer>* actor_grads = nullptr);

struct ActorLoss {
    double q_term = 0.0;   // -mean Q(s, pi(s)) over the interaction batch
    double bc_term = 0.0;  // unweighted
    double total = 0.0;
};

double combine_actor_loss(double q_term, double bc_term, double lambda_bc, BcMode mode);

ActorLoss actor_loss(const Network& actor, const Network& critic, const Batch& inter, const Batch& demo,
                     double lambda_bc, BcMode mode, std::vector<Layer>* actor_grads = nullptr);

struct Agent {
    Network actor;
    Network critic;
    Network actor_target;
    Network critic_target;
    OptimState actor_opt;
    OptimState critic_opt;
};

Agent make_agent(const AgentConfig& cfg, const DmpConfig& dmp, Rng& init_rng);

/// Deterministic policy action for a single observation.
Vec3 act(const Network& actor, const Observation& s);

struct UpdateStats {
    double critic_loss = 0.0;
    ActorLoss actor;
};

/// Critic step, actor step, then both target updates. Throws Error{Numeric} on a non-finite loss.
UpdateStats update_agent(Agent& agent, const BatchSet& batches, const AgentConfig& cfg);

}  // namespace ibcdmp
