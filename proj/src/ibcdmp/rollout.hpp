#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ibcdmp/dmp.hpp"
#include "ibcdmp/reward.hpp"
#include "ibcdmp/score.hpp"

namespace ibcdmp {

struct Transition {
    Observation s = Observation::Zero();
    Vec3 a = Vec3::Zero();
    double r = 0.0;
    Observation s2 = Observation::Zero();
    bool d = false;
    bool demo = false;  // provenance tag, not serialized
};

struct TrajectoryRow {
    DmpState state;  // state the command was applied to
    Vec3 action = Vec3::Zero();
    double reward = 0.0;
    bool done = false;
    CostBreakdown cost;
};

struct StepOutcome {
    Transition transition;
    Vec3 accel = Vec3::Zero();
    CostBreakdown cost;  // zero on the terminating step, which carries the terminal cost only
    bool collided = false;
};

// Episode stepper over the primitive; the MDP transition used by rollouts,
// demonstration labelling and training alike.
class DmpEnvironment {
public:
    DmpEnvironment(DmpConfig dmp, CostConfig cost);

    Observation reset(const EnvInstance& env);

    /// Clamps the action, advances one step and scores it. Throws Error{Numeric} if the
    /// state turns non-finite, Error{InvalidArgument} if called after termination.
    StepOutcome step(const Vec3& action);

    const DmpState& state() const { return state_; }
    const EnvInstance& env() const { return env_; }
    const DmpConfig& dmp_config() const { return dmp_; }
    const CostConfig& cost_config() const { return cost_; }
    Observation observation() const { return assemble_observation(state_, env_); }
    bool done() const { return done_; }
    int steps() const { return steps_; }
    bool collided() const { return collided_; }

private:
    DmpConfig dmp_;
    CostConfig cost_;
    EnvInstance env_;
    DmpState state_;
    bool done_ = true;
    bool collided_ = false;
    int steps_ = 0;
};

using Policy = std::function<Vec3(const Observation&)>;

struct RolloutResult {
    std::vector<Transition> transitions;
    std::vector<TrajectoryRow> rows;
    DmpState final_state;
    EvalRecord record;
};

/// Runs `policy` (+ N(0, noise_sigma^2) per component) from x_init until termination.
RolloutResult rollout(const Policy& policy, const EnvInstance& env, const DmpConfig& dmp, const CostConfig& cost,
                      double noise_sigma, std::uint64_t seed);

Policy zero_policy();

/// CSV `t,x,y,z,vx,vy,vz,zeta,ax_cmd,ay_cmd,az_cmd,reward,done[,J1,J2,J3,J4]`, 9 significant digits.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows, bool verbose_cost);

}  // namespace ibcdmp
