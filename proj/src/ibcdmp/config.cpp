#include "ibcdmp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "ibcdmp/error.hpp"

namespace ibcdmp {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string fmt(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& tok) {
    const std::string t = trim(tok);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    require(res.ec == std::errc() && res.ptr == t.data() + t.size() && !t.empty(), ErrorKind::Parse,
            key + ": '" + tok + "' is not a number");
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::string v = value;
    for (char& c : v) {
        if (c == ',') c = ' ';
    }
    std::stringstream ss(v);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(parse_double(key, tok));
    return out;
}

template <typename T>
T parse_int(const std::string& key, const std::string& value) {
    const std::string t = trim(value);
    T v{};
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    require(res.ec != std::errc::result_out_of_range, ErrorKind::Parse, key + ": value out of range");
    require(res.ec == std::errc() && res.ptr == t.data() + t.size() && !t.empty(), ErrorKind::Parse,
            key + ": '" + value + "' is not an integer");
    return v;
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

struct Section {
    std::string title;
    std::vector<Field> fields;
};

template <typename Member>
Field real(std::string key, Member m) {
    return {key, [m](const RunConfig& c) { return fmt(m(c)); },
            [m, key](RunConfig& c, const std::string& v) { m(c) = parse_double(key, v); }};
}

template <typename Member>
Field integer(std::string key, Member m) {
    return {key, [m](const RunConfig& c) { return std::to_string(m(c)); },
            [m, key](RunConfig& c, const std::string& v) {
                using T = std::remove_reference_t<decltype(m(c))>;
                m(c) = parse_int<T>(key, v);
            }};
}

template <typename Member>
Field vec3(std::string key, Member m) {
    return {key,
            [m](const RunConfig& c) {
                const Vec3& v = m(c);
                return fmt(v.x()) + "," + fmt(v.y()) + "," + fmt(v.z());
            },
            [m, key](RunConfig& c, const std::string& v) {
                const auto xs = parse_list(key, v);
                require(xs.size() == 3, ErrorKind::Parse, key + ": expected 3 values");
                m(c) = Vec3(xs[0], xs[1], xs[2]);
            }};
}

// 1 value: scalar * I, 3 values: diagonal, 9 values: row-major.
template <typename Member>
Field mat3(std::string key, Member m) {
    return {key,
            [m](const RunConfig& c) {
                const Mat3& a = m(c);
                const Mat3 diag = a.diagonal().asDiagonal();
                if (a == diag) {
                    if (a(0, 0) == a(1, 1) && a(1, 1) == a(2, 2)) return fmt(a(0, 0));
                    return fmt(a(0, 0)) + "," + fmt(a(1, 1)) + "," + fmt(a(2, 2));
                }
                std::string s;
                for (int i = 0; i < 3; ++i) {
                    for (int j = 0; j < 3; ++j) s += (s.empty() ? "" : ",") + fmt(a(i, j));
                }
                return s;
            },
            [m, key](RunConfig& c, const std::string& v) {
                const auto xs = parse_list(key, v);
                Mat3 a = Mat3::Zero();
                if (xs.size() == 1) {
                    a = xs[0] * Mat3::Identity();
                } else if (xs.size() == 3) {
                    a = Vec3(xs[0], xs[1], xs[2]).asDiagonal();
                } else if (xs.size() == 9) {
                    for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = xs[static_cast<std::size_t>(i)];
                } else {
                    fail(ErrorKind::Parse, key + ": expected 1, 3 or 9 values");
                }
                m(c) = a;
            }};
}

#define IBC_REF(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Section>& schema() {
    static const std::vector<Section> sections = {
        {"movement primitive",
         {mat3("k_alpha", IBC_REF(dmp.k_alpha)), mat3("k_beta", IBC_REF(dmp.k_beta)), real("tau", IBC_REF(dmp.tau)),
          real("omega", IBC_REF(dmp.omega)), real("zeta0", IBC_REF(dmp.zeta0)), real("f_min", IBC_REF(dmp.f_min)),
          real("f_max", IBC_REF(dmp.f_max)), real("dt", IBC_REF(dmp.dt)), real("horizon", IBC_REF(dmp.horizon))}},
        {"cost",
         {real("alpha1", IBC_REF(cost.alpha1)), real("alpha2", IBC_REF(cost.alpha2)),
          real("alpha3", IBC_REF(cost.alpha3)), real("alpha4", IBC_REF(cost.alpha4)),
          real("alpha5", IBC_REF(cost.alpha5)), real("eps0_b", IBC_REF(cost.eps0_b)),
          real("eps1_b", IBC_REF(cost.eps1_b)), real("eps0_d", IBC_REF(cost.eps0_d)),
          real("eps1_d", IBC_REF(cost.eps1_d)), real("eps_T", IBC_REF(cost.eps_T)),
          real("eta_cap", IBC_REF(cost.eta_cap))}},
        {"agent",
         {real("gamma", IBC_REF(agent.gamma)), real("sigma", IBC_REF(agent.sigma)),
          integer("episodes", IBC_REF(agent.episodes)), real("polyak", IBC_REF(agent.polyak)),
          real("lr_actor", IBC_REF(agent.lr_actor)), real("lr_critic", IBC_REF(agent.lr_critic)),
          integer("n_demo_critic", IBC_REF(agent.n_demo_critic)),
          integer("n_inter_critic", IBC_REF(agent.n_inter_critic)),
          integer("n_demo_actor", IBC_REF(agent.n_demo_actor)),
          integer("n_inter_actor", IBC_REF(agent.n_inter_actor)), real("lambda_bc", IBC_REF(agent.lambda_bc)),
          integer("update_every", IBC_REF(agent.update_every)),
          integer("warmup_steps", IBC_REF(agent.warmup_steps)),
          {"bc_mode", [](const RunConfig& c) { return to_string(c.agent.bc_mode); },
           [](RunConfig& c, const std::string& v) {
               try {
                   c.agent.bc_mode = parse_bc_mode(trim(v));
               } catch (const Error& e) {
                   fail(ErrorKind::Parse, std::string("bc_mode: ") + e.what());
               }
           }},
          {"optimizer", [](const RunConfig& c) { return std::string(c.agent.optimizer == OptimizerKind::Adam ? "adam" : "sgd"); },
           [](RunConfig& c, const std::string& v) {
               const std::string t = trim(v);
               require(t == "adam" || t == "sgd", ErrorKind::Parse, "optimizer: expected adam or sgd, got '" + t + "'");
               c.agent.optimizer = t == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
           }},
          integer("interaction_capacity", IBC_REF(agent.interaction_capacity))}},
        {"scene sampling",
         {vec3("x_init", IBC_REF(sampler.x_init)), vec3("goal_center", IBC_REF(sampler.goal_center)),
          vec3("goal_half", IBC_REF(sampler.goal_half)), vec3("test_goal_center", IBC_REF(sampler.test_goal_center)),
          vec3("test_goal_half", IBC_REF(sampler.test_goal_half)), vec3("obst_half", IBC_REF(sampler.obst_half)),
          real("obst_radius", IBC_REF(sampler.obst_radius)),
          real("min_goal_distance", IBC_REF(sampler.min_goal_distance))}},
        {"demonstrations",
         {real("v_target", IBC_REF(demo.v_target)), mat3("kp", IBC_REF(demo.gains.kp)),
          mat3("kd", IBC_REF(demo.gains.kd)), real("max_tracking_error", IBC_REF(demo.max_tracking_error)),
          real("synth_clearance", IBC_REF(synth.clearance)), real("synth_sample_dt", IBC_REF(synth.sample_dt)),
          vec3("workspace_min", IBC_REF(synth.workspace_min)), vec3("workspace_max", IBC_REF(synth.workspace_max))}},
        {"evaluation",
         {integer("test_runs", IBC_REF(eval.test_runs)),
          real("performance_standard", IBC_REF(eval.performance_standard)),
          integer("smooth_window", IBC_REF(eval.smooth_window))}},
        {"run", {integer("seed", IBC_REF(seed))}},
    };
    return sections;
}

#undef IBC_REF

}  // namespace

void RunConfig::validate() const {
    dmp.validate();
    cost.validate();
    agent.validate();
    sampler.validate();
    auto check = [](bool ok, const std::string& what) { require(ok, ErrorKind::ConfigInvariant, what); };
    check(demo.v_target > 0.0, "v_target must be > 0");
    check(demo.max_tracking_error > 0.0, "max_tracking_error must be > 0");
    check(synth.clearance > 0.0, "synth_clearance must be > 0");
    check(synth.sample_dt > 0.0, "synth_sample_dt must be > 0");
    check((synth.workspace_min.array() < synth.workspace_max.array()).all(), "workspace_min must lie below workspace_max");
    check(eval.test_runs >= 1, "test_runs must be >= 1");
    check(eval.smooth_window >= 1, "smooth_window must be >= 1");
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& sec : schema()) {
        for (const auto& f : sec.fields) {
            if (f.key == key) {
                f.set(cfg, value);
                return;
            }
        }
    }
    fail(ErrorKind::UnknownKey, "unknown config key '" + key + "'");
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
    for (const auto& sec : schema()) {
        for (const auto& f : sec.fields) {
            if (f.key == key) return f.get(cfg);
        }
    }
    fail(ErrorKind::UnknownKey, "unknown config key '" + key + "'");
}

void apply_assignment(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos, ErrorKind::Parse, "expected key=value, got '" + assignment + "'");
    set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig parse_config(const std::string& text, const std::string& source_name, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        try {
            apply_assignment(base, line);
        } catch (const Error& e) {
            throw Error(e.kind(), source_name + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path) {
    if (path == "defaults") return RunConfig{};
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string format_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& sec : schema()) {
        if (!out.empty()) out += '\n';
        out += "# " + sec.title + "\n";
        for (const auto& f : sec.fields) out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

}  // namespace ibcdmp
