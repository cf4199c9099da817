#include "ibcdmp/ibcdmp.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "ibcdmp/buffer.hpp"
#include "ibcdmp/config.hpp"
#include "ibcdmp/error.hpp"
#include "ibcdmp/eval.hpp"
#include "ibcdmp/pipeline.hpp"
#include "ibcdmp/trainer.hpp"

struct ibcdmp_config {
    ibcdmp::RunConfig cfg;
};

struct ibcdmp_policy {
    ibcdmp::Network actor;
};

namespace {

using namespace ibcdmp;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

ibcdmp_status to_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return IBCDMP_ERR_INVALID_ARGUMENT;
        case ErrorKind::UnknownKey: return IBCDMP_ERR_UNKNOWN_KEY;
        case ErrorKind::Parse: return IBCDMP_ERR_PARSE;
        case ErrorKind::Io: return IBCDMP_ERR_IO;
        case ErrorKind::ConfigInvariant: return IBCDMP_ERR_CONFIG;
        case ErrorKind::Numeric: return IBCDMP_ERR_NUMERIC;
        case ErrorKind::InsufficientData: return IBCDMP_ERR_INSUFFICIENT_DATA;
        case ErrorKind::Format: return IBCDMP_ERR_FORMAT;
    }
    return IBCDMP_ERR_INTERNAL;
}

template <typename F>
ibcdmp_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return IBCDMP_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
    } catch (const std::exception& e) {
        g_last_error = e.what();
    } catch (...) {
        g_last_error = "unknown failure";
    }
    return IBCDMP_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
    require(p != nullptr, ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    require(out != nullptr, ErrorKind::InvalidArgument, "allocation failed");
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void emit(char** out, const std::string& s) {
    if (out) *out = dup(s);
}

void write_sidecar(const fs::path& artifact, const RunConfig& cfg) {
    fs::path side = artifact;
    side += ".config";
    std::ofstream out(side);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + side.string());
    out << format_config(cfg);
}

Vec3 vec(const double* p) { return Vec3(p[0], p[1], p[2]); }

Policy policy_of(const ibcdmp_policy* p) {
    if (!p) return zero_policy();
    const Network actor = p->actor;
    return [actor](const Observation& s) { return act(actor, s); };
}

std::string stats_text(const DemoStats& st) {
    std::ostringstream s;
    s << std::setprecision(6);
    s << "trajectories," << st.count << "\n";
    s << "phase,quantity,mean,std,range\n";
    auto row = [&](const char* phase, const char* q, const SummaryStat& x) {
        s << phase << ',' << q << ',' << x.mean << ',' << x.std << ',' << x.range << '\n';
    };
    for (const auto& [phase, k] : {std::pair<const char*, const KinematicStats*>{"before", &st.before},
                                   std::pair<const char*, const KinematicStats*>{"after", &st.after}}) {
        row(phase, "length", k->length);
        row(phase, "max_speed", k->max_speed);
        row(phase, "avg_speed", k->avg_speed);
    }
    return s.str();
}

}  // namespace

extern "C" {

const char* ibcdmp_version(void) { return "0.1.0"; }

const char* ibcdmp_last_error(void) { return g_last_error.c_str(); }

const char* ibcdmp_status_name(ibcdmp_status status) {
    switch (status) {
        case IBCDMP_OK: return "ok";
        case IBCDMP_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case IBCDMP_ERR_UNKNOWN_KEY: return "unknown_key";
        case IBCDMP_ERR_PARSE: return "parse";
        case IBCDMP_ERR_IO: return "io";
        case IBCDMP_ERR_CONFIG: return "config_invariant";
        case IBCDMP_ERR_NUMERIC: return "numeric";
        case IBCDMP_ERR_INSUFFICIENT_DATA: return "insufficient_data";
        case IBCDMP_ERR_FORMAT: return "format";
        case IBCDMP_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

void ibcdmp_string_free(char* text) { std::free(text); }

ibcdmp_status ibcdmp_config_new(ibcdmp_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new ibcdmp_config{};
    });
}

ibcdmp_status ibcdmp_config_load(const char* path, ibcdmp_config** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new ibcdmp_config{load_config(path)};
    });
}

void ibcdmp_config_free(ibcdmp_config* cfg) { delete cfg; }

ibcdmp_status ibcdmp_config_set(ibcdmp_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        set_config_value(cfg->cfg, key, value);
    });
}

ibcdmp_status ibcdmp_config_get(const ibcdmp_config* cfg, const char* key, char** out_value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(out_value, "out_value");
        *out_value = dup(get_config_value(cfg->cfg, key));
    });
}

ibcdmp_status ibcdmp_config_validate(const ibcdmp_config* cfg) {
    return guarded([&] {
        need(cfg, "cfg");
        cfg->cfg.validate();
    });
}

ibcdmp_status ibcdmp_config_format(const ibcdmp_config* cfg, char** out_text) {
    return guarded([&] {
        need(cfg, "cfg");
        need(out_text, "out_text");
        *out_text = dup(format_config(cfg->cfg));
    });
}

ibcdmp_status ibcdmp_demo_prep(const ibcdmp_config* cfg, const char* in_dir, int synthetic, const char* out_buffer,
                               char** out_summary) {
    return guarded([&] {
        need(cfg, "cfg");
        need(out_buffer, "out_buffer");
        require(synthetic >= 0, ErrorKind::InvalidArgument, "synthetic count must be >= 0");
        const RunConfig& c = cfg->cfg;
        c.validate();
        std::vector<RawTrajectory> data;
        if (in_dir) data = load_demo_dir(in_dir);
        if (synthetic > 0) {
            auto synth = synth_dataset(static_cast<std::size_t>(synthetic), c.sampler, c.seed, c.synth);
            data.insert(data.end(), synth.begin(), synth.end());
        }
        require(!data.empty(), ErrorKind::InsufficientData, "no demonstrations: give an input directory or a synthetic count");
        const DemoPrepReport rep = prepare_demos(data, c.dmp, c.cost, c.demo);
        save_transitions(out_buffer, rep.transitions);
        write_sidecar(out_buffer, c);
        const double worst = *std::max_element(rep.tracking_errors.begin(), rep.tracking_errors.end());
        std::ostringstream s;
        s << "trajectories=" << data.size() << " kept=" << rep.kept << " dropped=" << rep.dropped
          << " transitions=" << rep.transitions.size() << " max_tracking_error=" << worst;
        emit(out_summary, s.str());
    });
}

ibcdmp_status ibcdmp_train(const ibcdmp_config* cfg, const char* demos, const char* out_ckpt, const char* log_path,
                           ibcdmp_episode_fn on_episode, void* user) {
    return guarded([&] {
        need(cfg, "cfg");
        need(demos, "demos");
        need(out_ckpt, "out_ckpt");
        const RunConfig& c = cfg->cfg;
        c.validate();
        TrainOptions opt{c.agent, c.dmp, c.cost, c.sampler, c.seed, {}};
        opt.dump_path = fs::path(out_ckpt).concat(".nonfinite.jsonl");
        const auto transitions = load_transitions(demos);
        EpisodeCallback cb;
        if (on_episode) {
            cb = [&](const TrainLogRow& r) {
                on_episode(user, r.episode, r.arpe, r.larpe, r.steps, r.collisions, r.final_err);
            };
        }
        const TrainResult res = train(transitions, opt, cb);
        const std::string text = format_config(c);
        save_checkpoint(out_ckpt, make_checkpoint(res.state, text));
        write_sidecar(out_ckpt, c);
        if (log_path) {
            std::ofstream out(log_path);
            require(static_cast<bool>(out), ErrorKind::Io, std::string("cannot write ") + log_path);
            write_train_log(out, res.log);
            write_sidecar(log_path, c);
        }
    });
}

ibcdmp_status ibcdmp_test(const ibcdmp_config* cfg, const char* ckpt_dir, int runs, const char* out_scores) {
    return guarded([&] {
        need(cfg, "cfg");
        need(ckpt_dir, "ckpt_dir");
        need(out_scores, "out_scores");
        require(runs >= 1, ErrorKind::InvalidArgument, "runs must be >= 1");
        const RunConfig& c = cfg->cfg;
        c.validate();
        const fs::path root(ckpt_dir);
        require(fs::is_directory(root), ErrorKind::Io, "not a directory: " + root.string());
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file() && e.path().extension() == ".ckpt") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        require(!files.empty(), ErrorKind::Io, "no *.ckpt files under " + root.string());
        std::vector<NamedPolicy> policies;
        for (const auto& f : files) {
            Network actor = load_checkpoint(f).agent.actor;
            std::string name = fs::relative(f, root).replace_extension().generic_string();
            policies.push_back({name, [actor](const Observation& s) { return act(actor, s); }});
        }
        const ScoreTable t = test_policies(policies, static_cast<std::size_t>(runs), c.sampler, c.dmp, c.cost, c.seed);
        std::ofstream out(out_scores);
        require(static_cast<bool>(out), ErrorKind::Io, std::string("cannot write ") + out_scores);
        write_scores_csv(out, t);
        write_sidecar(out_scores, c);
    });
}

ibcdmp_status ibcdmp_report(const char* scores, const char* format, double standard, char** out_text) {
    return guarded([&] {
        need(scores, "scores");
        need(format, "format");
        need(out_text, "out_text");
        const ReportFormat f = parse_report_format(format);
        std::ifstream in(scores);
        require(static_cast<bool>(in), ErrorKind::Io, std::string("cannot open ") + scores);
        const ScoreTable t = read_scores_csv(in, scores);
        std::ostringstream s;
        write_report(s, t, f, standard);
        *out_text = dup(s.str());
    });
}

ibcdmp_status ibcdmp_stats(const ibcdmp_config* cfg, const char* demo_dir, char** out_text) {
    return guarded([&] {
        need(cfg, "cfg");
        need(demo_dir, "demo_dir");
        need(out_text, "out_text");
        const auto data = load_demo_dir(demo_dir);
        require(!data.empty(), ErrorKind::InsufficientData, std::string("no *.csv trajectories in ") + demo_dir);
        *out_text = dup(stats_text(dataset_stats(data, cfg->cfg.demo.v_target)));
    });
}

ibcdmp_status ibcdmp_policy_load(const char* ckpt, ibcdmp_policy** out) {
    return guarded([&] {
        need(ckpt, "ckpt");
        need(out, "out");
        *out = new ibcdmp_policy{load_checkpoint(ckpt).agent.actor};
    });
}

void ibcdmp_policy_free(ibcdmp_policy* policy) { delete policy; }

ibcdmp_status ibcdmp_policy_act(const ibcdmp_policy* policy, const double obs[10], double action[3]) {
    return guarded([&] {
        need(policy, "policy");
        need(obs, "obs");
        need(action, "action");
        const Vec3 a = act(policy->actor, Eigen::Map<const Observation>(obs));
        for (int i = 0; i < 3; ++i) action[i] = a[i];
    });
}

ibcdmp_status ibcdmp_rollout(const ibcdmp_config* cfg, const ibcdmp_policy* policy, const double x_init[3],
                             const double x_goal[3], const double obst_top[3], double obst_radius, int verbose_cost,
                             char** out_csv, ibcdmp_record* out_record) {
    return guarded([&] {
        need(cfg, "cfg");
        need(x_init, "x_init");
        need(x_goal, "x_goal");
        need(obst_top, "obst_top");
        const RunConfig& c = cfg->cfg;
        c.validate();
        EnvInstance env{vec(x_init), vec(x_goal), vec(obst_top), obst_radius};
        const RolloutResult r = rollout(policy_of(policy), env, c.dmp, c.cost, 0.0, 0);
        if (out_csv) {
            std::ostringstream s;
            write_trajectory_csv(s, r.rows, verbose_cost != 0);
            *out_csv = dup(s.str());
        }
        if (out_record) {
            *out_record = {r.record.arpe, r.record.larpe, r.record.collided ? 1 : 0, r.record.final_error, r.record.steps};
        }
    });
}

ibcdmp_status ibcdmp_sequence(const ibcdmp_config* cfg, const ibcdmp_policy* policy, const double home[3],
                              const char* via_file, const double obst_top[3], double obst_radius, int verbose_cost,
                              char** out_csv, char** out_summary) {
    return guarded([&] {
        need(cfg, "cfg");
        need(home, "home");
        need(via_file, "via_file");
        need(obst_top, "obst_top");
        const RunConfig& c = cfg->cfg;
        c.validate();
        std::ifstream in(via_file);
        require(static_cast<bool>(in), ErrorKind::Io, std::string("cannot open ") + via_file);
        const auto via = read_via_points(in, via_file);
        const SequenceResult r = task_sequence(policy_of(policy), vec(home), via, vec(obst_top), obst_radius, c.dmp, c.cost);
        if (out_csv) {
            std::ostringstream s;
            write_trajectory_csv(s, r.rows, verbose_cost != 0);
            *out_csv = dup(s.str());
        }
        if (out_summary) {
            std::ostringstream s;
            s << std::setprecision(9) << "segment,reached,final_error,steps,collided,larpe\n";
            for (std::size_t i = 0; i < r.segments.size(); ++i) {
                const auto& rec = r.segments[i];
                s << i + 1 << ',' << (r.reached[i] ? 1 : 0) << ',' << rec.final_error << ',' << rec.steps << ','
                  << (rec.collided ? 1 : 0) << ',' << rec.larpe << '\n';
            }
            *out_summary = dup(s.str());
        }
    });
}

}  // extern "C"
