#pragma once

#include <cstdint>
#include <vector>

#include "ibcdmp/agent.hpp"
#include "ibcdmp/demo.hpp"

namespace ibcdmp {

struct DemoPrepOptions {
    double v_target = 0.2;
    PidGains gains;
    double max_tracking_error = 0.3;
};

struct DemoPrepReport {
    std::vector<Transition> transitions;
    std::vector<double> tracking_errors;  // one per input trajectory
    std::size_t kept = 0;
    std::size_t dropped = 0;
};

/// Speed normalisation, resampling to dmp.dt and PID labelling; transitions of kept
/// trajectories are concatenated in input order.
DemoPrepReport prepare_demos(const std::vector<RawTrajectory>& dataset, const DmpConfig& dmp, const CostConfig& cost,
                             const DemoPrepOptions& opts);

/// `count` synthetic demonstrations on training scenes drawn from the "demo" stream of `seed`.
std::vector<RawTrajectory> synth_dataset(std::size_t count, const EnvSampler& sampler, std::uint64_t seed,
                                         const SynthOptions& opts = {});

}  // namespace ibcdmp
