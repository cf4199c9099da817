#pragma once

namespace ibcdmp {

struct EvalRecord {
    double arpe = 0.0;  // accumulated reward, <= 0
    double larpe = 0.0;
    bool collided = false;
    double final_error = 0.0;
    int steps = 0;
};

/// -ln(1 - R). Throws Error{InvalidArgument} for R > 0.
double l_arpe(double accumulated_reward);

}  // namespace ibcdmp
