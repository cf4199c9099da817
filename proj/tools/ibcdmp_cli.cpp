#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ibcdmp/ibcdmp.h"

namespace {

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kIo = 3, kConfig = 4, kNumeric = 5, kData = 6 };

int exit_code(ibcdmp_status st) {
    switch (st) {
        case IBCDMP_OK: return kOk;
        case IBCDMP_ERR_UNKNOWN_KEY:
        case IBCDMP_ERR_INVALID_ARGUMENT: return kUsage;
        case IBCDMP_ERR_IO: return kIo;
        case IBCDMP_ERR_CONFIG: return kConfig;
        case IBCDMP_ERR_NUMERIC: return kNumeric;
        case IBCDMP_ERR_PARSE:
        case IBCDMP_ERR_FORMAT:
        case IBCDMP_ERR_INSUFFICIENT_DATA: return kData;
        default: return kOther;
    }
}

// One line on stderr: error kind=<kind> exit=<code> msg=<text>
int report_error(const std::string& kind, int code, std::string msg) {
    for (char& c : msg) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::fprintf(stderr, "error kind=%s exit=%d msg=%s\n", kind.c_str(), code, msg.c_str());
    return code;
}

struct Failure {
    ibcdmp_status status;
};

void check(ibcdmp_status st) {
    if (st != IBCDMP_OK) throw Failure{st};
}

struct Text {
    char* p = nullptr;
    ~Text() { ibcdmp_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

struct Config {
    ibcdmp_config* h = nullptr;
    ~Config() { ibcdmp_config_free(h); }
};

struct PolicyHandle {
    ibcdmp_policy* h = nullptr;
    ~PolicyHandle() { ibcdmp_policy_free(h); }
};

struct Triple {
    double v[3] = {0.0, 0.0, 0.0};
};

Triple parse_triple(const std::string& flag, const std::string& text) {
    Triple t;
    std::string s = text;
    for (char& c : s) {
        if (c == ',') c = ' ';
    }
    std::istringstream in(s);
    std::string extra;
    if (!(in >> t.v[0] >> t.v[1] >> t.v[2]) || (in >> extra)) {
        throw CLI::ValidationError(flag, "expected three comma-separated numbers, got '" + text + "'");
    }
    return t;
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out || !(out << text)) {
        throw CLI::Error("io", "cannot write " + path, kIo);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Demonstration-guided movement primitive planner"};
    app.set_version_flag("--version", std::string(ibcdmp_version()));
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path = "defaults";
    std::vector<std::string> overrides;
    bool print_config = false;
    bool verbose_cost = false;
    std::optional<long long> seed;
    app.add_option("--config", config_path, "key=value configuration file, or 'defaults'");
    app.add_option("--set", overrides, "Override one configuration key (key=value); repeatable");
    app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");
    app.add_flag("--verbose-cost", verbose_cost, "Add J1..J4 columns to trajectory dumps");
    app.add_option("--seed", seed, "Master seed (overrides the config key)");

    std::string dp_in, dp_out;
    int dp_synth = 0;
    auto* demo_prep = app.add_subcommand("demo-prep", "Label demonstrations into a transition buffer");
    demo_prep->add_option("--in", dp_in, "Directory of trajectory CSV files");
    demo_prep->add_option("--out", dp_out, "Output buffer (JSON lines)")->required();
    demo_prep->add_option("--synthetic", dp_synth, "Number of synthetic demonstrations to add")->check(CLI::NonNegativeNumber);

    std::string tr_demos, tr_out, tr_log;
    bool tr_progress = false;
    auto* train = app.add_subcommand("train", "Train an agent from a demonstration buffer");
    train->add_option("--demos", tr_demos, "Demonstration buffer (JSON lines)")->required();
    train->add_option("--out", tr_out, "Checkpoint path")->required();
    train->add_option("--log", tr_log, "Training log CSV (default: <out>.log.csv)");
    train->add_flag("--progress", tr_progress, "Print one line per episode to stderr");

    std::string te_dir, te_out;
    int te_runs = 0;
    auto* test = app.add_subcommand("test", "Score every checkpoint under a directory");
    test->add_option("--ckpt-dir", te_dir, "Directory searched recursively for *.ckpt")->required();
    test->add_option("--runs", te_runs, "Test scenes per policy (default: config test_runs)")->check(CLI::PositiveNumber);
    test->add_option("--out", te_out, "Raw per-trial scores CSV")->required();

    std::string ro_ckpt, ro_goal, ro_obst, ro_start, ro_out;
    double ro_radius = 0.035;
    auto* rollout = app.add_subcommand("rollout", "Roll out one scene and dump the trajectory");
    rollout->add_option("--ckpt", ro_ckpt, "Checkpoint; omitted means the unforced primitive");
    rollout->add_option("--goal", ro_goal, "Goal x,y,z")->required();
    rollout->add_option("--obstacle", ro_obst, "Obstacle top centre x,y,z")->required();
    rollout->add_option("--radius", ro_radius, "Obstacle radius")->check(CLI::PositiveNumber);
    rollout->add_option("--start", ro_start, "Start x,y,z (default: config x_init)");
    rollout->add_option("--out", ro_out, "Trajectory CSV (default: stdout)");

    std::string sq_ckpt, sq_via, sq_obst, sq_home, sq_out;
    double sq_radius = 0.035;
    auto* sequence = app.add_subcommand("sequence", "Chain rollouts through a list of via points");
    sequence->add_option("--ckpt", sq_ckpt, "Checkpoint; omitted means the unforced primitive");
    sequence->add_option("--via", sq_via, "Via point file, one x,y,z per line")->required();
    sequence->add_option("--obstacle", sq_obst, "Obstacle top centre x,y,z")->required();
    sequence->add_option("--radius", sq_radius, "Obstacle radius")->check(CLI::PositiveNumber);
    sequence->add_option("--home", sq_home, "Start x,y,z (default: config x_init)");
    sequence->add_option("--out", sq_out, "Trajectory CSV (default: stdout)");

    std::string rp_in, rp_format = "md";
    std::optional<double> rp_standard;
    auto* report = app.add_subcommand("report", "Summarise a scores CSV");
    report->add_option("--in", rp_in, "Scores CSV from 'test'")->required();
    report->add_option("--format", rp_format, "md or csv")->check(CLI::IsMember({"md", "csv"}));
    report->add_option("--standard", rp_standard, "Pass line for mean L-ARPE (default: config)");

    std::string st_in;
    auto* stats = app.add_subcommand("stats", "Kinematic statistics of a trajectory directory");
    stats->add_option("--in", st_in, "Directory of trajectory CSV files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", kUsage, e.what());
    }

    try {
        Config cfg;
        check(ibcdmp_config_load(config_path.c_str(), &cfg.h));
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) return report_error("usage", kUsage, "--set expects key=value, got '" + kv + "'");
            check(ibcdmp_config_set(cfg.h, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
        }
        if (seed) check(ibcdmp_config_set(cfg.h, "seed", std::to_string(*seed).c_str()));
        check(ibcdmp_config_validate(cfg.h));

        if (print_config) {
            Text t;
            check(ibcdmp_config_format(cfg.h, &t.p));
            std::cout << t.str();
            return kOk;
        }
        if (app.get_subcommands().empty()) {
            return report_error("usage", kUsage, "a subcommand is required (see --help)");
        }

        auto load_policy = [](const std::string& path, PolicyHandle& ph) {
            if (!path.empty()) check(ibcdmp_policy_load(path.c_str(), &ph.h));
        };
        auto config_value = [&](const char* key) {
            Text t;
            check(ibcdmp_config_get(cfg.h, key, &t.p));
            return t.str();
        };
        // Trajectory dumps get the same "<path>.config" record as the library's artifacts.
        auto write_sidecar = [&](const std::string& path) {
            if (path.empty() || path == "-") return;
            Text t;
            check(ibcdmp_config_format(cfg.h, &t.p));
            write_out(path + ".config", t.str());
        };
        auto config_triple = [&](const char* key) { return parse_triple(key, config_value(key)); };

        if (*demo_prep) {
            Text summary;
            check(ibcdmp_demo_prep(cfg.h, dp_in.empty() ? nullptr : dp_in.c_str(), dp_synth, dp_out.c_str(), &summary.p));
            std::cout << summary.str() << '\n';
        } else if (*train) {
            if (tr_log.empty()) tr_log = tr_out + ".log.csv";
            ibcdmp_episode_fn cb = nullptr;
            if (tr_progress) {
                cb = [](void*, int ep, double, double larpe, int steps, int collisions, double err) {
                    std::fprintf(stderr, "episode %d larpe %.4f steps %d collisions %d final_err %.4g\n", ep, larpe,
                                 steps, collisions, err);
                };
            }
            check(ibcdmp_train(cfg.h, tr_demos.c_str(), tr_out.c_str(), tr_log.c_str(), cb, nullptr));
        } else if (*test) {
            const int runs = te_runs > 0 ? te_runs : std::stoi(config_value("test_runs"));
            check(ibcdmp_test(cfg.h, te_dir.c_str(), runs, te_out.c_str()));
        } else if (*rollout) {
            PolicyHandle ph;
            load_policy(ro_ckpt, ph);
            const Triple goal = parse_triple("--goal", ro_goal);
            const Triple obst = parse_triple("--obstacle", ro_obst);
            const Triple start = ro_start.empty() ? config_triple("x_init") : parse_triple("--start", ro_start);
            Text csv;
            ibcdmp_record rec{};
            check(ibcdmp_rollout(cfg.h, ph.h, start.v, goal.v, obst.v, ro_radius, verbose_cost ? 1 : 0, &csv.p, &rec));
            write_out(ro_out, csv.str());
            write_sidecar(ro_out);
            std::fprintf(stderr, "arpe %.9g larpe %.9g collided %d final_error %.6g steps %d\n", rec.arpe, rec.larpe,
                         rec.collided, rec.final_error, rec.steps);
        } else if (*sequence) {
            PolicyHandle ph;
            load_policy(sq_ckpt, ph);
            const Triple obst = parse_triple("--obstacle", sq_obst);
            const Triple home = sq_home.empty() ? config_triple("x_init") : parse_triple("--home", sq_home);
            Text csv, summary;
            check(ibcdmp_sequence(cfg.h, ph.h, home.v, sq_via.c_str(), obst.v, sq_radius, verbose_cost ? 1 : 0, &csv.p,
                                  &summary.p));
            write_out(sq_out, csv.str());
            write_sidecar(sq_out);
            std::cerr << summary.str();
        } else if (*report) {
            const double standard = rp_standard ? *rp_standard : std::stod(config_value("performance_standard"));
            Text out;
            check(ibcdmp_report(rp_in.c_str(), rp_format.c_str(), standard, &out.p));
            std::cout << out.str();
        } else if (*stats) {
            Text out;
            check(ibcdmp_stats(cfg.h, st_in.c_str(), &out.p));
            std::cout << out.str();
        }
    } catch (const Failure& f) {
        return report_error(ibcdmp_status_name(f.status), exit_code(f.status), ibcdmp_last_error());
    } catch (const CLI::Error& e) {
        return report_error(e.get_exit_code() == kIo ? "io" : "usage", e.get_exit_code() == kIo ? kIo : kUsage, e.what());
    }
    return kOk;
}
