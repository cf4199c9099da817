#pragma once

#include "ibcdmp/dmp.hpp"

namespace ibcdmp {

// Weights and field bounds of the composite planning cost.
// Field bounds must satisfy eps0 < eps1; the obstacle pair defaults to (0.045, 0.05).
struct CostConfig {
    double alpha1 = 0.001;  // acceleration
    double alpha2 = 10.0;   // goal distance
    double alpha3 = 0.001;  // ground field
    double alpha4 = 0.001;  // obstacle field
    double alpha5 = 1e5;    // terminal dead-zone
    double eps0_b = 0.045;
    double eps1_b = 0.05;
    double eps0_d = 0.01;
    double eps1_d = 0.05;
    double eps_T = 0.01;
    double eta_cap = 1e6;

    void validate() const;
};

struct CostBreakdown {
    double j1 = 0.0;
    double j2 = 0.0;
    double j3 = 0.0;
    double j4 = 0.0;
    double total = 0.0;
};

/// Repulsive field: (x-eps0)^-2 - (eps1-eps0)^-2 on (eps0, eps1), 0 above eps1, `cap` at or below eps0.
double potential_field(double x, double eps0, double eps1, double cap);

/// 0 on [0, eps], x - eps beyond.
double dead_zone(double x, double eps);

/// Horizontal distance from x to the obstacle axis.
double lateral_distance(const Vec3& x, const EnvInstance& env);

CostBreakdown running_cost(const DmpState& state, const Vec3& accel, const EnvInstance& env, const CostConfig& cfg);

double terminal_cost(const Vec3& x, const EnvInstance& env, const CostConfig& cfg);

bool termination_flag(double t, const Vec3& x, const EnvInstance& env, const DmpConfig& dmp, const CostConfig& cost);

/// Inside the cylinder or below the ground plane.
bool collision_check(const Vec3& x, const EnvInstance& env);

}  // namespace ibcdmp
