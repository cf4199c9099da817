#include "ibcdmp/demo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "ibcdmp/error.hpp"
#include "ibcdmp/rng.hpp"

namespace ibcdmp {

void RawTrajectory::validate() const {
    require(timestamps.size() == positions.size(), ErrorKind::InvalidArgument, "timestamp/position count mismatch");
    require(positions.size() >= 2, ErrorKind::InvalidArgument, "trajectory needs at least 2 samples");
    const double step = spacing();
    require(step > 0.0, ErrorKind::InvalidArgument, "timestamps must be strictly increasing");
    for (std::size_t k = 1; k < timestamps.size(); ++k) {
        const double d = timestamps[k] - timestamps[k - 1];
        require(d > 0.0, ErrorKind::InvalidArgument, "timestamps must be strictly increasing");
        // Stamps are compared against the ideal grid so that rounding does not accumulate.
        const double ideal = timestamps.front() + static_cast<double>(k) * step;
        require(std::abs(timestamps[k] - ideal) <= 1e-9 * std::max(std::abs(ideal), step) + 1e-12,
                ErrorKind::InvalidArgument, "timestamps must be uniformly spaced");
    }
}

double path_length(const RawTrajectory& traj) {
    double len = 0.0;
    for (std::size_t k = 1; k < traj.positions.size(); ++k) len += (traj.positions[k] - traj.positions[k - 1]).norm();
    return len;
}

RawTrajectory normalize_speed(const RawTrajectory& traj, double v_target) {
    traj.validate();
    require(v_target > 0.0, ErrorKind::InvalidArgument, "target speed must be > 0");
    const double len = path_length(traj);
    require(len > 0.0, ErrorKind::InvalidArgument, "cannot normalise a zero-length trajectory");
    const double scale = len / (v_target * traj.duration());
    RawTrajectory out = traj;
    const double t0 = traj.timestamps.front();
    const double new_step = scale * traj.spacing();
    for (std::size_t k = 0; k < out.timestamps.size(); ++k) {
        out.timestamps[k] = t0 + static_cast<double>(k) * new_step;
    }
    // The last stamp pins the duration to exactly L / v_target.
    out.timestamps.back() = t0 + len / v_target;
    return out;
}

RawTrajectory resample(const RawTrajectory& traj, double dt) {
    traj.validate();
    require(dt > 0.0, ErrorKind::InvalidArgument, "resample step must be > 0");
    const double t0 = traj.timestamps.front();
    const double span = traj.duration();
    const auto n_steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));

    RawTrajectory out = traj;
    out.timestamps.assign(n_steps + 1, 0.0);
    out.positions.assign(n_steps + 1, Vec3::Zero());
    std::size_t seg = 0;
    const std::size_t last = traj.size() - 1;
    for (std::size_t j = 0; j <= n_steps; ++j) {
        const double t = t0 + static_cast<double>(j) * dt;
        out.timestamps[j] = t;
        if (t >= traj.timestamps[last]) {
            out.positions[j] = traj.positions[last];
            continue;
        }
        while (seg + 1 < last && traj.timestamps[seg + 1] <= t) ++seg;
        const double ta = traj.timestamps[seg];
        const double tb = traj.timestamps[seg + 1];
        const double w = (t - ta) / (tb - ta);
        out.positions[j] = (1.0 - w) * traj.positions[seg] + w * traj.positions[seg + 1];
    }
    return out;
}

std::vector<Vec3> finite_diff_velocity(const RawTrajectory& traj) {
    require(traj.size() >= 2, ErrorKind::InvalidArgument, "trajectory needs at least 2 samples");
    std::vector<Vec3> v(traj.size(), Vec3::Zero());
    for (std::size_t k = 1; k < traj.size(); ++k) {
        v[k] = (traj.positions[k] - traj.positions[k - 1]) / (traj.timestamps[k] - traj.timestamps[k - 1]);
    }
    return v;
}

Vec3 pid_action(const Vec3& x_ref, const Vec3& v_ref, const Vec3& x, const Vec3& v, const PidGains& gains) {
    return gains.kp * (x_ref - x) + gains.kd * (v_ref - v);
}

PidLabelResult pid_label(const RawTrajectory& traj, const DmpConfig& dmp, const PidGains& gains,
                         const CostConfig& cost, double max_tracking_error) {
    traj.validate();
    require(std::abs(traj.spacing() - dmp.dt) <= 1e-9 * dmp.dt, ErrorKind::InvalidArgument,
            "demonstration must be resampled to the primitive step");
    const std::vector<Vec3> vel = finite_diff_velocity(traj);

    EnvInstance env;
    env.x_init = traj.positions.front();
    env.x_goal = traj.goal;
    env.obst_top = traj.obst_top;
    env.obst_radius = traj.obst_radius;
    env.validate();

    DmpEnvironment sim(dmp, cost);
    sim.reset(env);

    PidLabelResult res;
    res.transitions.reserve(static_cast<std::size_t>(dmp.max_steps()));
    const std::size_t last = traj.size() - 1;
    std::size_t k = 0;
    while (!sim.done()) {
        const bool holding = k > last;
        const Vec3& x_ref = traj.positions[std::min(k, last)];
        const Vec3 v_ref = holding ? Vec3::Zero() : vel[k];
        const DmpState& s = sim.state();
        res.max_tracking_error = std::max(res.max_tracking_error, (x_ref - s.x).norm());
        StepOutcome step = sim.step(pid_action(x_ref, v_ref, s.x, s.v, gains));
        step.transition.demo = true;
        res.transitions.push_back(step.transition);
        ++k;
    }
    res.max_tracking_error =
        std::max(res.max_tracking_error, (traj.positions[std::min(k, last)] - sim.state().x).norm());
    res.accepted = res.max_tracking_error <= max_tracking_error;
    return res;
}

namespace {

double min_jerk(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

// Quadratic through p0 (u=0), via (u=uv) and p1 (u=1).
Vec3 lagrange3(const Vec3& p0, const Vec3& via, const Vec3& p1, double uv, double u) {
    const double l0 = (u - uv) * (u - 1.0) / uv;
    const double l1 = u * (u - 1.0) / (uv * (uv - 1.0));
    const double l2 = u * (u - uv) / (1.0 - uv);
    return l0 * p0 + l1 * via + l2 * p1;
}

RawTrajectory trace_curve(const Vec3& p0, const Vec3& via, const Vec3& p1, const SynthOptions& opts) {
    const double d0 = (via - p0).norm();
    const double d1 = (p1 - via).norm();
    const double uv = d0 / (d0 + d1);

    constexpr int kTable = 4000;
    std::vector<double> arc(kTable + 1, 0.0);
    Vec3 prev = p0;
    for (int i = 1; i <= kTable; ++i) {
        const Vec3 p = lagrange3(p0, via, p1, uv, static_cast<double>(i) / kTable);
        arc[i] = arc[i - 1] + (p - prev).norm();
        prev = p;
    }
    const double total = arc.back();
    const double duration = total / opts.v_target;
    const auto n = static_cast<std::size_t>(std::ceil(duration / opts.sample_dt));
    const double step = duration / static_cast<double>(n);

    RawTrajectory traj;
    traj.timestamps.resize(n + 1);
    traj.positions.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * step;
        const double s = total * min_jerk(t / duration);
        const auto it = std::lower_bound(arc.begin(), arc.end(), s);
        double u = 1.0;
        if (it != arc.end()) {
            const auto i = static_cast<std::size_t>(std::distance(arc.begin(), it));
            if (i == 0) {
                u = 0.0;
            } else {
                const double w = (s - arc[i - 1]) / (arc[i] - arc[i - 1]);
                u = (static_cast<double>(i - 1) + w) / kTable;
            }
        }
        traj.timestamps[k] = t;
        traj.positions[k] = k == n ? p1 : lagrange3(p0, via, p1, uv, u);
    }
    traj.positions.front() = p0;
    return traj;
}

bool path_is_clear(const RawTrajectory& traj, const EnvInstance& env, const SynthOptions& opts) {
    for (const Vec3& p : traj.positions) {
        if (collision_check(p, env)) return false;
        if ((p.array() < opts.workspace_min.array()).any() || (p.array() > opts.workspace_max.array()).any()) {
            return false;
        }
    }
    return true;
}

}  // namespace

SynthDemo synth_demo(const EnvInstance& env, std::uint64_t seed, const SynthOptions& opts) {
    env.validate();
    for (const Vec3& p : {env.x_init, env.x_goal}) {
        require(!(lateral_distance(p, env) <= env.obst_radius && p.z() < env.obst_top.z()), ErrorKind::InvalidArgument,
                "start or goal lies inside the obstacle footprint");
    }
    Rng rng(seed);
    std::bernoulli_distribution coin(0.5);
    const bool prefer_over = coin(rng);
    const bool prefer_left = coin(rng);

    // Closest point of the horizontal chord to the obstacle axis.
    const Eigen::Vector2d a = env.x_init.head<2>();
    const Eigen::Vector2d b = env.x_goal.head<2>();
    const Eigen::Vector2d c = env.obst_top.head<2>();
    const Eigen::Vector2d ab = b - a;
    const double w = ab.squaredNorm() > 0.0 ? std::clamp((c - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0) : 0.5;
    const Eigen::Vector2d p = a + w * ab;
    const double chord_z = env.x_init.z() + w * (env.x_goal.z() - env.x_init.z());
    const Eigen::Vector2d off = p - c;
    const double dist = off.norm();

    Eigen::Vector2d side;
    if (dist > 1e-9) {
        side = off / dist;
    } else {
        const Eigen::Vector2d n(-ab.y(), ab.x());
        side = n.norm() > 0.0 ? Eigen::Vector2d(n.normalized()) : Eigen::Vector2d(1.0, 0.0);
        if (!prefer_left) side = -side;
    }
    const double lateral_shift = std::max(opts.clearance, env.obst_radius + opts.clearance - dist);

    struct Candidate {
        AvoidStyle style;
        Vec3 via;
    };
    std::vector<Candidate> candidates;
    const Vec3 around(p.x() + lateral_shift * side.x(), p.y() + lateral_shift * side.y(), chord_z);
    const Eigen::Vector2d far_side = c - side * (env.obst_radius + opts.clearance);
    const Vec3 around_far(far_side.x(), far_side.y(), chord_z);
    const double over_z = std::max(chord_z, env.obst_top.z() + opts.clearance);
    const Vec3 over(p.x(), p.y(), over_z);
    const bool obstacle_blocks = dist < env.obst_radius + opts.clearance;
    if (prefer_over && obstacle_blocks) candidates.push_back({AvoidStyle::Over, over});
    candidates.push_back({AvoidStyle::Around, around});
    if (!prefer_over && obstacle_blocks) candidates.push_back({AvoidStyle::Over, over});
    candidates.push_back({AvoidStyle::Around, around_far});

    for (const Candidate& cand : candidates) {
        RawTrajectory traj = trace_curve(env.x_init, cand.via, env.x_goal, opts);
        traj.goal = env.x_goal;
        traj.obst_top = env.obst_top;
        traj.obst_radius = env.obst_radius;
        if (!path_is_clear(traj, env, opts)) continue;
        SynthDemo demo;
        demo.traj = normalize_speed(traj, opts.v_target);
        demo.style = cand.style;
        demo.via = cand.via;
        return demo;
    }
    fail(ErrorKind::InvalidArgument, "no clearance direction keeps the demonstration collision-free in the workspace");
}

namespace {

SummaryStat summarize(const std::vector<double>& xs) {
    SummaryStat s;
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(xs.size()));
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    s.range = *hi - *lo;
    return s;
}

KinematicStats kinematics(const std::vector<RawTrajectory>& dataset) {
    std::vector<double> len, vmax, vavg;
    for (const auto& traj : dataset) {
        const double l = path_length(traj);
        len.push_back(l);
        vavg.push_back(l / traj.duration());
        double peak = 0.0;
        for (const Vec3& v : finite_diff_velocity(traj)) peak = std::max(peak, v.norm());
        vmax.push_back(peak);
    }
    return {summarize(len), summarize(vmax), summarize(vavg)};
}

}  // namespace

DemoStats dataset_stats(const std::vector<RawTrajectory>& dataset, double v_target) {
    require(!dataset.empty(), ErrorKind::InvalidArgument, "dataset is empty");
    std::vector<RawTrajectory> normalized;
    normalized.reserve(dataset.size());
    for (const auto& traj : dataset) normalized.push_back(normalize_speed(traj, v_target));
    DemoStats stats;
    stats.before = kinematics(dataset);
    stats.after = kinematics(normalized);
    stats.count = dataset.size();
    return stats;
}

void write_demo_csv(std::ostream& out, const RawTrajectory& traj) {
    const auto old_prec = out.precision(17);
    out << "# goal=" << traj.goal.x() << ',' << traj.goal.y() << ',' << traj.goal.z() << '\n';
    out << "# obstacle=" << traj.obst_top.x() << ',' << traj.obst_top.y() << ',' << traj.obst_top.z() << ','
        << traj.obst_radius << '\n';
    out << "t,x,y,z\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Vec3& p = traj.positions[k];
        out << traj.timestamps[k] << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
    }
    out.precision(old_prec);
}

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& where) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(tok, &used));
            const auto rest = tok.find_first_not_of(" \t\r", used);
            require(rest == std::string::npos, ErrorKind::Parse, where + ": bad number '" + tok + "'");
        } catch (const std::logic_error&) {
            fail(ErrorKind::Parse, where + ": bad number '" + tok + "'");
        }
    }
    return vals;
}

}  // namespace

RawTrajectory read_demo_csv(std::istream& in, const std::string& source_name) {
    RawTrajectory traj;
    bool have_goal = false;
    bool have_obstacle = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(" \t"));
            key.erase(key.find_last_not_of(" \t") + 1);
            const auto vals = parse_numbers(line.substr(eq + 1), where);
            if (key == "goal") {
                require(vals.size() == 3, ErrorKind::Parse, where + ": goal needs 3 values");
                traj.goal = Vec3(vals[0], vals[1], vals[2]);
                have_goal = true;
            } else if (key == "obstacle") {
                require(vals.size() == 3 || vals.size() == 4, ErrorKind::Parse, where + ": obstacle needs 3 or 4 values");
                traj.obst_top = Vec3(vals[0], vals[1], vals[2]);
                if (vals.size() == 4) traj.obst_radius = vals[3];
                have_obstacle = true;
            }
            continue;
        }
        if (line.rfind("t,", 0) == 0) continue;
        const auto vals = parse_numbers(line, where);
        require(vals.size() == 4, ErrorKind::Parse, where + ": expected t,x,y,z");
        traj.timestamps.push_back(vals[0]);
        traj.positions.emplace_back(vals[1], vals[2], vals[3]);
    }
    require(!traj.positions.empty(), ErrorKind::Parse, source_name + ": no samples");
    if (!have_goal) traj.goal = traj.positions.back();
    require(have_obstacle, ErrorKind::Parse, source_name + ": missing '# obstacle=' header");
    traj.validate();
    return traj;
}

RawTrajectory load_demo_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open demonstration file " + path.string());
    return read_demo_csv(in, path.string());
}

std::vector<RawTrajectory> load_demo_dir(const std::filesystem::path& dir) {
    require(std::filesystem::is_directory(dir), ErrorKind::Io, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RawTrajectory> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_demo_file(f));
    return out;
}

}  // namespace ibcdmp
