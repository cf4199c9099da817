#include "ibcdmp/dmp.hpp"

#include <cmath>
#include <string>

#include "ibcdmp/error.hpp"

namespace ibcdmp {

void DmpConfig::validate() const {
    require(std::isfinite(tau) && tau > 0.0, ErrorKind::ConfigInvariant, "tau must be > 0");
    require(std::isfinite(dt) && dt > 0.0, ErrorKind::ConfigInvariant, "dt must be > 0");
    require(std::isfinite(omega) && omega >= 0.0, ErrorKind::ConfigInvariant, "omega must be >= 0");
    require(dt * omega / tau < 1.0, ErrorKind::ConfigInvariant,
            "dt*omega/tau must be < 1 so the canonical variable stays positive");
    require(std::isfinite(zeta0) && zeta0 > 0.0, ErrorKind::ConfigInvariant, "zeta0 must be > 0");
    require(std::isfinite(f_min) && std::isfinite(f_max) && f_min < f_max, ErrorKind::ConfigInvariant,
            "f_min must be < f_max");
    require(std::isfinite(horizon) && horizon >= dt, ErrorKind::ConfigInvariant, "horizon must be >= dt");
    require(k_alpha.allFinite() && k_beta.allFinite(), ErrorKind::ConfigInvariant, "gain matrices must be finite");

    // Unforced per-axis dynamics  x'' = -(Ka Kb / tau) e - (Ka / tau) x'  must be Hurwitz.
    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
    a.topRightCorner<3, 3>() = Mat3::Identity();
    a.bottomLeftCorner<3, 3>() = -(k_alpha * k_beta) / tau;
    a.bottomRightCorner<3, 3>() = -k_alpha / tau;
    const Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(a, false);
    for (int i = 0; i < 6; ++i) {
        require(es.eigenvalues()(i).real() < 0.0, ErrorKind::ConfigInvariant,
                "unforced primitive is not asymptotically stable for the given k_alpha/k_beta");
    }
}

int DmpConfig::max_steps() const { return static_cast<int>(std::lround(horizon / dt)); }

void EnvInstance::validate() const {
    require(x_init.allFinite() && x_goal.allFinite() && obst_top.allFinite(), ErrorKind::InvalidArgument,
            "environment coordinates must be finite");
    require(obst_top.z() > 0.0, ErrorKind::InvalidArgument, "obstacle top must lie above the ground plane");
    require(obst_radius > 0.0, ErrorKind::InvalidArgument, "obstacle radius must be > 0");
    require(gain() > 0.0, ErrorKind::InvalidArgument, "goal must differ from the initial position");
}

DmpState initial_state(const EnvInstance& env, const DmpConfig& cfg) {
    DmpState s;
    s.x = env.x_init;
    s.v = Vec3::Zero();
    s.zeta = cfg.zeta0;
    s.t = 0.0;
    return s;
}

Observation assemble_observation(const DmpState& state, const EnvInstance& env) {
    Observation o;
    o.segment<3>(0) = state.x;
    o.segment<3>(3) = state.v;
    o.segment<3>(6) = state.x - env.obst_top;
    o(9) = state.zeta;
    return o;
}

double canonical_step(double zeta, const DmpConfig& cfg) { return zeta - (cfg.dt / cfg.tau) * cfg.omega * zeta; }

Vec3 clamp_action(const Vec3& action, const DmpConfig& cfg) {
    return action.cwiseMax(cfg.f_min).cwiseMin(cfg.f_max);
}

Vec3 dmp_accel(const DmpState& state, const EnvInstance& env, const Vec3& action, const DmpConfig& cfg) {
    require(action.allFinite(), ErrorKind::Numeric, "non-finite action component");
    const Vec3 f = clamp_action(action, cfg);
    const Vec3 spring = cfg.k_alpha * (cfg.k_beta * (env.x_goal - state.x) - state.v);
    return (spring + state.zeta * env.gain() * f) / cfg.tau;
}

DmpState dmp_step(const DmpState& state, const EnvInstance& env, const Vec3& action, const DmpConfig& cfg) {
    const Vec3 acc = dmp_accel(state, env, action, cfg);
    DmpState next;
    next.x = state.x + cfg.dt * state.v;
    next.v = state.v + cfg.dt * acc;
    next.zeta = canonical_step(state.zeta, cfg);
    next.t = state.t + cfg.dt;
    return next;
}

bool is_finite(const DmpState& state) {
    return state.x.allFinite() && state.v.allFinite() && std::isfinite(state.zeta) && std::isfinite(state.t);
}

double classic_dmp_accel(const ClassicDmpState& s, double x0, double xg, double f_value, const ClassicDmpParams& p) {
    return (p.alpha * (p.beta * (xg - s.x) - s.v) + s.zeta * (xg - x0) * f_value) / p.tau;
}

ClassicDmpState classic_dmp_step_1d(const ClassicDmpState& s, double x0, double xg, double f_value,
                                    const ClassicDmpParams& p) {
    const double acc = classic_dmp_accel(s, x0, xg, f_value, p);
    ClassicDmpState n;
    n.x = s.x + p.dt * s.v;
    n.v = s.v + p.dt * acc;
    n.zeta = s.zeta - (p.dt / p.tau) * p.omega * s.zeta;
    return n;
}

}  // namespace ibcdmp
