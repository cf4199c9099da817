#pragma once

#include <Eigen/Dense>

namespace ibcdmp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Observation = Eigen::Matrix<double, 10, 1>;

inline constexpr int kObsDim = 10;
inline constexpr int kActDim = 3;

// Constants of the coupled 3-D movement primitive.
struct DmpConfig {
    Mat3 k_alpha = 10.0 * Mat3::Identity();
    Mat3 k_beta = 1.2 * Mat3::Identity();
    double tau = 0.25;
    double omega = 6.0;
    double zeta0 = 1.0;
    double f_min = -5.0;
    double f_max = 5.0;
    double dt = 0.02;
    double horizon = 5.0;

    /// Throws Error{ConfigInvariant} when tau/dt/omega or the action bounds are inconsistent.
    void validate() const;

    /// Upper bound on transitions per episode, round(horizon / dt).
    int max_steps() const;
};

// One planning scenario. `obst_top` is the centre of the cylinder's top face;
// the cylinder stands on the z = 0 plane.
struct EnvInstance {
    Vec3 x_init = Vec3(0.0, 0.0, 0.05);
    Vec3 x_goal = Vec3(0.3, 0.35, 0.08);
    Vec3 obst_top = Vec3(0.15, 0.175, 0.065);
    double obst_radius = 0.035;

    void validate() const;
    double gain() const { return (x_goal - x_init).norm(); }
};

struct DmpState {
    Vec3 x = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    double zeta = 1.0;
    double t = 0.0;
};

DmpState initial_state(const EnvInstance& env, const DmpConfig& cfg);

/// [x, v, x - obst_top, zeta].
Observation assemble_observation(const DmpState& state, const EnvInstance& env);

double canonical_step(double zeta, const DmpConfig& cfg);

/// Saturates each component into [f_min, f_max].
Vec3 clamp_action(const Vec3& action, const DmpConfig& cfg);

/// Acceleration of the coupled primitive. The action is clamped first; the forcing
/// gain is the scalar start-goal distance. Throws Error{Numeric} on a non-finite action.
Vec3 dmp_accel(const DmpState& state, const EnvInstance& env, const Vec3& action, const DmpConfig& cfg);

/// One zero-order-hold step: position advances with the old velocity.
DmpState dmp_step(const DmpState& state, const EnvInstance& env, const Vec3& action, const DmpConfig& cfg);

bool is_finite(const DmpState& state);

// Classic single-axis primitive, kept as a reference for the element-wise gain.
struct ClassicDmpParams {
    double alpha = 10.0;
    double beta = 1.2;
    double tau = 0.25;
    double omega = 6.0;
    double dt = 0.02;
};

struct ClassicDmpState {
    double x = 0.0;
    double v = 0.0;
    double zeta = 1.0;
};

/// Acceleration (alpha(beta(xg - x) - v) + zeta (xg - x0) f) / tau.
double classic_dmp_accel(const ClassicDmpState& s, double x0, double xg, double f_value, const ClassicDmpParams& p);

ClassicDmpState classic_dmp_step_1d(const ClassicDmpState& s, double x0, double xg, double f_value,
                                    const ClassicDmpParams& p);

}  // namespace ibcdmp
