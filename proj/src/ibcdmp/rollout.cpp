#include "ibcdmp/rollout.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>
#include <utility>

#include "ibcdmp/error.hpp"
#include "ibcdmp/rng.hpp"

namespace ibcdmp {

double l_arpe(double accumulated_reward) {
    require(!(accumulated_reward > 0.0), ErrorKind::InvalidArgument, "accumulated reward must be <= 0");
    return -std::log(1.0 - accumulated_reward);
}

DmpEnvironment::DmpEnvironment(DmpConfig dmp, CostConfig cost) : dmp_(std::move(dmp)), cost_(cost) {}

Observation DmpEnvironment::reset(const EnvInstance& env) {
    env.validate();
    env_ = env;
    state_ = initial_state(env_, dmp_);
    done_ = false;
    collided_ = collision_check(state_.x, env_);
    steps_ = 0;
    return observation();
}

StepOutcome DmpEnvironment::step(const Vec3& action) {
    require(!done_, ErrorKind::InvalidArgument, "step() after episode termination");
    StepOutcome out;
    const Vec3 a = clamp_action(action, dmp_);
    out.accel = dmp_accel(state_, env_, a, dmp_);

    const DmpState next = dmp_step(state_, env_, a, dmp_);
    if (!is_finite(next)) {
        fail(ErrorKind::Numeric, "non-finite state at t=" + std::to_string(next.t));
    }

    Transition& tr = out.transition;
    tr.s = assemble_observation(state_, env_);
    tr.a = a;
    tr.d = termination_flag(next.t, next.x, env_, dmp_, cost_);
    if (tr.d) {
        tr.r = -terminal_cost(next.x, env_, cost_);
    } else {
        out.cost = running_cost(state_, out.accel, env_, cost_);
        tr.r = -out.cost.total;
    }
    tr.s2 = assemble_observation(next, env_);

    out.collided = collision_check(next.x, env_);
    collided_ = collided_ || out.collided;
    state_ = next;
    done_ = tr.d;
    ++steps_;
    return out;
}

Policy zero_policy() {
    return [](const Observation&) -> Vec3 { return Vec3::Zero(); };
}

RolloutResult rollout(const Policy& policy, const EnvInstance& env, const DmpConfig& dmp, const CostConfig& cost,
                      double noise_sigma, std::uint64_t seed) {
    DmpEnvironment sim(dmp, cost);
    sim.reset(env);

    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);

    RolloutResult res;
    res.transitions.reserve(static_cast<std::size_t>(dmp.max_steps()) + 1);
    double total = 0.0;
    while (!sim.done()) {
        Vec3 a = policy(sim.observation());
        if (noise_sigma > 0.0) {
            for (int i = 0; i < 3; ++i) a(i) += noise(rng);
        }
        const DmpState before = sim.state();
        StepOutcome step = sim.step(a);
        total += step.transition.r;
        res.rows.push_back({before, step.transition.a, step.transition.r, step.transition.d, step.cost});
        res.transitions.push_back(std::move(step.transition));
    }
    res.final_state = sim.state();
    res.record.arpe = total;
    res.record.larpe = l_arpe(total);
    res.record.collided = sim.collided();
    res.record.final_error = (sim.state().x - env.x_goal).norm();
    res.record.steps = sim.steps();
    return res;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows, bool verbose_cost) {
    const auto old_prec = out.precision(9);
    out << "t,x,y,z,vx,vy,vz,zeta,ax_cmd,ay_cmd,az_cmd,reward,done";
    if (verbose_cost) out << ",J1,J2,J3,J4";
    out << '\n';
    for (const auto& row : rows) {
        const auto& s = row.state;
        out << s.t << ',' << s.x.x() << ',' << s.x.y() << ',' << s.x.z() << ',' << s.v.x() << ',' << s.v.y() << ','
            << s.v.z() << ',' << s.zeta << ',' << row.action.x() << ',' << row.action.y() << ',' << row.action.z()
            << ',' << row.reward << ',' << (row.done ? 1 : 0);
        if (verbose_cost) {
            out << ',' << row.cost.j1 << ',' << row.cost.j2 << ',' << row.cost.j3 << ',' << row.cost.j4;
        }
        out << '\n';
    }
    out.precision(old_prec);
}

}  // namespace ibcdmp
