#include "ibcdmp/pipeline.hpp"

#include "ibcdmp/error.hpp"

namespace ibcdmp {

DemoPrepReport prepare_demos(const std::vector<RawTrajectory>& dataset, const DmpConfig& dmp, const CostConfig& cost,
                             const DemoPrepOptions& opts) {
    require(opts.max_tracking_error > 0.0, ErrorKind::ConfigInvariant, "max_tracking_error must be > 0");
    DemoPrepReport rep;
    for (const auto& raw : dataset) {
        const RawTrajectory traj = resample(normalize_speed(raw, opts.v_target), dmp.dt);
        PidLabelResult lab = pid_label(traj, dmp, opts.gains, cost, opts.max_tracking_error);
        rep.tracking_errors.push_back(lab.max_tracking_error);
        if (!lab.accepted) {
            ++rep.dropped;
            continue;
        }
        ++rep.kept;
        rep.transitions.insert(rep.transitions.end(), lab.transitions.begin(), lab.transitions.end());
    }
    return rep;
}

std::vector<RawTrajectory> synth_dataset(std::size_t count, const EnvSampler& sampler, std::uint64_t seed,
                                         const SynthOptions& opts) {
    Rng rng = derive_stream(seed, "demo");
    std::vector<RawTrajectory> out;
    out.reserve(count);
    while (out.size() < count) {
        const EnvInstance env = sample_env(EnvMode::Train, sampler, rng);
        try {
            out.push_back(synth_demo(env, rng(), opts).traj);
        } catch (const Error& e) {
            // Scenes with no clear detour are skipped; the stream stays deterministic.
            if (e.kind() != ErrorKind::InvalidArgument) throw;
        }
    }
    return out;
}

}  // namespace ibcdmp
