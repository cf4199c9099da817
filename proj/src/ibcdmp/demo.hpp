#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ibcdmp/dmp.hpp"
#include "ibcdmp/reward.hpp"
#include "ibcdmp/rollout.hpp"

namespace ibcdmp {

// A recorded (or synthesised) hand trajectory with its scene.
struct RawTrajectory {
    std::vector<double> timestamps;
    std::vector<Vec3> positions;
    Vec3 goal = Vec3::Zero();
    Vec3 obst_top = Vec3::Zero();
    double obst_radius = 0.035;

    /// >= 2 samples, strictly increasing and uniformly spaced stamps (1e-9 relative).
    void validate() const;
    std::size_t size() const { return positions.size(); }
    double duration() const { return timestamps.back() - timestamps.front(); }
    double spacing() const { return timestamps[1] - timestamps[0]; }
};

double path_length(const RawTrajectory& traj);

/// Rescales the time axis so the average speed L / T equals `v_target`. Positions are untouched.
RawTrajectory normalize_speed(const RawTrajectory& traj, double v_target);

/// Linear interpolation onto t0, t0 + dt, ...; the last grid point reaches or passes the final
/// stamp and takes the final sample.
RawTrajectory resample(const RawTrajectory& traj, double dt);

/// Backward differences, v_0 = 0.
std::vector<Vec3> finite_diff_velocity(const RawTrajectory& traj);

struct PidGains {
    Mat3 kp = 1500.0 * Mat3::Identity();
    Mat3 kd = 40.0 * Mat3::Identity();
};

/// Unclamped tracking actuation kp (x_ref - x) + kd (v_ref - v).
Vec3 pid_action(const Vec3& x_ref, const Vec3& v_ref, const Vec3& x, const Vec3& v, const PidGains& gains);

struct PidLabelResult {
    std::vector<Transition> transitions;
    double max_tracking_error = 0.0;
    bool accepted = false;
};

/// Drives the primitive along a demonstration resampled to dmp.dt. The reference holds the
/// last sample (at rest) once the demonstration ends; the run stops when the termination
/// flag fires. Demonstrations whose tracking error exceeds `max_tracking_error` are
/// returned with accepted == false.
PidLabelResult pid_label(const RawTrajectory& traj, const DmpConfig& dmp, const PidGains& gains,
                         const CostConfig& cost, double max_tracking_error);

struct SynthOptions {
    double clearance = 0.08;
    double v_target = 0.2;
    double sample_dt = 0.01;
    Vec3 workspace_min = Vec3(-1.0, -1.0, 0.0);
    Vec3 workspace_max = Vec3(1.0, 1.0, 1.0);
};

enum class AvoidStyle { Around, Over };

struct SynthDemo {
    RawTrajectory traj;
    AvoidStyle style = AvoidStyle::Around;
    Vec3 via = Vec3::Zero();
};

/// Minimum-jerk motion along a smooth curve through start, a via point displaced past the
/// cylinder, and the goal. Throws Error{InvalidArgument} when no candidate stays
/// collision-free inside the workspace.
SynthDemo synth_demo(const EnvInstance& env, std::uint64_t seed, const SynthOptions& opts = {});

struct SummaryStat {
    double mean = 0.0;
    double std = 0.0;    // population
    double range = 0.0;  // max - min
};

struct KinematicStats {
    SummaryStat length;
    SummaryStat max_speed;
    SummaryStat avg_speed;
};

struct DemoStats {
    KinematicStats before;
    KinematicStats after;
    std::size_t count = 0;
};

DemoStats dataset_stats(const std::vector<RawTrajectory>& dataset, double v_target);

void write_demo_csv(std::ostream& out, const RawTrajectory& traj);
RawTrajectory read_demo_csv(std::istream& in, const std::string& source_name);
RawTrajectory load_demo_file(const std::filesystem::path& path);
/// Every *.csv in `dir`, sorted by file name.
std::vector<RawTrajectory> load_demo_dir(const std::filesystem::path& dir);

}  // namespace ibcdmp
