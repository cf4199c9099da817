#include "ibcdmp/reward.hpp"

#include <cmath>

#include "ibcdmp/error.hpp"

namespace ibcdmp {

void CostConfig::validate() const {
    for (double a : {alpha1, alpha2, alpha3, alpha4, alpha5}) {
        require(std::isfinite(a) && a >= 0.0, ErrorKind::ConfigInvariant, "cost weights must be >= 0");
    }
    require(eps0_b > 0.0 && eps0_b < eps1_b, ErrorKind::ConfigInvariant, "obstacle field needs 0 < eps0_b < eps1_b");
    require(eps0_d > 0.0 && eps0_d < eps1_d, ErrorKind::ConfigInvariant, "ground field needs 0 < eps0_d < eps1_d");
    require(eps_T > 0.0, ErrorKind::ConfigInvariant, "eps_T must be > 0");
    require(std::isfinite(eta_cap) && eta_cap >= 0.0, ErrorKind::ConfigInvariant, "eta_cap must be finite and >= 0");
}

double potential_field(double x, double eps0, double eps1, double cap) {
    if (x >= eps1) return 0.0;
    if (x <= eps0) return cap;
    const double near = x - eps0;
    const double span = eps1 - eps0;
    return 1.0 / (near * near) - 1.0 / (span * span);
}

double dead_zone(double x, double eps) { return x <= eps ? 0.0 : x - eps; }

double lateral_distance(const Vec3& x, const EnvInstance& env) {
    return (x.head<2>() - env.obst_top.head<2>()).norm();
}

CostBreakdown running_cost(const DmpState& state, const Vec3& accel, const EnvInstance& env, const CostConfig& cfg) {
    CostBreakdown c;
    c.j1 = accel.squaredNorm();
    c.j2 = (state.x - env.x_goal).squaredNorm();
    c.j3 = potential_field(state.x.z(), cfg.eps0_d, cfg.eps1_d, cfg.eta_cap);
    const double z = state.x.z();
    if (z > 0.0 && z < env.obst_top.z()) {
        c.j4 = potential_field(lateral_distance(state.x, env) - env.obst_radius, cfg.eps0_b, cfg.eps1_b, cfg.eta_cap);
    }
    c.total = cfg.alpha1 * c.j1 + cfg.alpha2 * c.j2 + cfg.alpha3 * c.j3 + cfg.alpha4 * c.j4;
    return c;
}

double terminal_cost(const Vec3& x, const EnvInstance& env, const CostConfig& cfg) {
    return cfg.alpha5 * dead_zone((x - env.x_goal).norm(), cfg.eps_T);
}

bool termination_flag(double t, const Vec3& x, const EnvInstance& env, const DmpConfig& dmp, const CostConfig& cost) {
    // t is accumulated by repeated += dt; allow for the rounding of that sum.
    const double slack = 1e-9 * dmp.dt;
    return t + slack >= dmp.horizon || (x - env.x_goal).norm() <= cost.eps_T;
}

bool collision_check(const Vec3& x, const EnvInstance& env) {
    if (x.z() < 0.0) return true;
    return lateral_distance(x, env) <= env.obst_radius && x.z() > 0.0 && x.z() < env.obst_top.z();
}

}  // namespace ibcdmp
