#include "ibcdmp/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "ibcdmp/error.hpp"
#include "ibcdmp/rollout.hpp"

namespace ibcdmp {

std::vector<Transition> random_prefill(std::size_t count, const DmpConfig& dmp, const CostConfig& cost,
                                       const EnvSampler& sampler, Rng& rng) {
    std::vector<Transition> out;
    out.reserve(count);
    std::uniform_real_distribution<double> u(dmp.f_min, dmp.f_max);
    DmpEnvironment sim(dmp, cost);
    while (out.size() < count) {
        sim.reset(sample_env(EnvMode::Train, sampler, rng));
        while (!sim.done() && out.size() < count) {
            const Vec3 a(u(rng), u(rng), u(rng));
            out.push_back(sim.step(a).transition);
        }
    }
    return out;
}

namespace {

void dump_batch(const std::filesystem::path& path, const BatchSet& b) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) return;
    for (const Batch* part : {&b.demo_actor, &b.demo_critic, &b.inter_actor, &b.inter_critic}) {
        write_transitions(out, to_transitions(*part));
    }
}

}  // namespace

TrainResult train(const std::vector<Transition>& demos, const TrainOptions& opt, const EpisodeCallback& on_episode) {
    const AgentConfig& cfg = opt.agent;
    cfg.validate();
    opt.dmp.validate();
    opt.cost.validate();
    opt.sampler.validate();
    const bool none = cfg.bc_mode == BcMode::None;
    require(!demos.empty(), ErrorKind::InsufficientData, "training needs a non-empty demonstration set");
    if (!none) {
        require(demos.size() >= static_cast<std::size_t>(std::max(cfg.n_demo_critic, cfg.n_demo_actor)),
                ErrorKind::InsufficientData, "demonstration set is smaller than a demonstration batch");
    }

    Rng init_rng = derive_stream(opt.seed, "init");
    TrainResult res{TrainState{make_agent(cfg, opt.dmp, init_rng), derive_stream(opt.seed, "env"),
                               derive_stream(opt.seed, "noise"), derive_stream(opt.seed, "batch")},
                    {}};
    TrainState& st = res.state;

    ReplayBuffer demo_buf(demos.size());
    ReplayBuffer inter_buf(cfg.interaction_capacity);
    if (none) {
        Rng prefill_rng = derive_stream(opt.seed, "prefill");
        for (const auto& t : random_prefill(demos.size(), opt.dmp, opt.cost, opt.sampler, prefill_rng)) inter_buf.push(t);
    } else {
        for (auto t : demos) {
            t.demo = true;
            demo_buf.push(t);
            inter_buf.push(t);
        }
    }
    const std::size_t need_inter = static_cast<std::size_t>(
        std::max(cfg.n_inter_actor, cfg.n_inter_critic) + (none ? cfg.n_demo_critic : 0));

    DmpEnvironment sim(opt.dmp, opt.cost);
    std::normal_distribution<double> noise(0.0, cfg.sigma);
    res.log.reserve(static_cast<std::size_t>(cfg.episodes));
    for (int ep = 1; ep <= cfg.episodes; ++ep) {
        Observation s = sim.reset(sample_env(EnvMode::Train, opt.sampler, st.env_rng));
        double arpe = 0.0;
        int collisions = sim.collided() ? 1 : 0;
        while (!sim.done()) {
            Vec3 a = act(st.agent.actor, s);
            if (cfg.sigma > 0.0) {
                for (int i = 0; i < 3; ++i) a[i] += noise(st.noise_rng);
            }
            a = clamp_action(a, opt.dmp);
            const StepOutcome out = sim.step(a);
            inter_buf.push(out.transition);
            arpe += out.transition.r;
            if (collision_check(sim.state().x, sim.env())) ++collisions;
            s = out.transition.s2;
            ++st.env_steps;

            if (st.env_steps >= cfg.warmup_steps && st.env_steps % cfg.update_every == 0 &&
                inter_buf.size() >= need_inter) {
                const BatchSet batches = sample_batches(demo_buf, inter_buf, cfg, st.batch_rng);
                try {
                    update_agent(st.agent, batches, cfg);
                } catch (const Error& e) {
                    if (e.kind() == ErrorKind::Numeric) {
                        dump_batch(opt.dump_path, batches);
                        fail(ErrorKind::Numeric, std::string(e.what()) + " at episode " + std::to_string(ep) +
                                                     ", update " + std::to_string(st.updates + 1) +
                                                     (opt.dump_path.empty() ? "" : "; batch written to " + opt.dump_path.string()));
                    }
                    throw;
                }
                ++st.updates;
            }
        }
        TrainLogRow row;
        row.episode = ep;
        row.arpe = arpe;
        row.larpe = l_arpe(arpe);
        row.steps = sim.steps();
        row.collisions = collisions;
        row.final_err = (sim.state().x - sim.env().x_goal).norm();
        res.log.push_back(row);
        if (on_episode) on_episode(row);
    }
    return res;
}

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log) {
    const auto old_prec = out.precision(12);
    out << "episode,arpe,larpe,steps,collisions,final_err\n";
    for (const auto& r : log) {
        out << r.episode << ',' << r.arpe << ',' << r.larpe << ',' << r.steps << ',' << r.collisions << ','
            << r.final_err << '\n';
    }
    out.precision(old_prec);
}

std::vector<TrainLogRow> read_train_log(std::istream& in, const std::string& source_name) {
    std::vector<TrainLogRow> log;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("episode", 0) == 0) continue;
        std::stringstream ss(line);
        TrainLogRow r;
        char c1, c2, c3, c4, c5;
        ss >> r.episode >> c1 >> r.arpe >> c2 >> r.larpe >> c3 >> r.steps >> c4 >> r.collisions >> c5 >> r.final_err;
        require(ss && c1 == ',' && c2 == ',' && c3 == ',' && c4 == ',' && c5 == ',', ErrorKind::Parse,
                source_name + ":" + std::to_string(line_no) + ": malformed training log row");
        log.push_back(r);
    }
    return log;
}

// Checkpoint layout (little-endian):
//   "IBCDMPCK" u32 version, u64+bytes config text, i64 env_steps, i64 updates,
//   4 x network {u32 layers, i32 sizes[layers+1], u8 hidden, u8 output, f64 lo, f64 hi, f64 params[]},
//   2 x optimizer {u8 kind, f64 lr, b1, b2, eps, i64 step, u64 n, f64 m[n], f64 v[n]},
//   u32 streams {u64+bytes label, u64+bytes engine state}, "END!"
namespace {

constexpr char kMagic[8] = {'I', 'B', 'C', 'D', 'M', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    template <typename T>
    void pod(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void text(const std::string& s) {
        pod<std::uint64_t>(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void doubles(const Eigen::VectorXd& v) {
        out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}
    template <typename T>
    T pod() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        check();
        return v;
    }
    std::string text(std::uint64_t limit = 1u << 26) {
        const auto n = pod<std::uint64_t>();
        require(n <= limit, ErrorKind::Format, name_ + ": implausible string length in checkpoint");
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }
    Eigen::VectorXd doubles(std::size_t n) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        check();
        return v;
    }
    const std::string& name() const { return name_; }

private:
    void check() { require(static_cast<bool>(in_), ErrorKind::Format, name_ + ": truncated checkpoint"); }
    std::istream& in_;
    std::string name_;
};

void write_network(Writer& w, const Network& net) {
    const auto sizes = net.sizes();
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(net.layers.size()));
    for (int s : sizes) w.pod<std::int32_t>(s);
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(net.hidden));
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(net.output));
    w.pod(net.out_low);
    w.pod(net.out_high);
    w.doubles(net.flatten());
}

Activation read_activation(Reader& r) {
    const auto a = r.pod<std::uint8_t>();
    require(a <= static_cast<std::uint8_t>(Activation::ScaledTanh), ErrorKind::Format, r.name() + ": unknown activation");
    return static_cast<Activation>(a);
}

Network read_network(Reader& r) {
    const auto n = r.pod<std::uint32_t>();
    require(n >= 1 && n <= 64, ErrorKind::Format, r.name() + ": implausible layer count");
    std::vector<int> sizes(n + 1);
    for (auto& s : sizes) {
        s = r.pod<std::int32_t>();
        require(s > 0 && s <= 1 << 16, ErrorKind::Format, r.name() + ": implausible layer size");
    }
    Network net;
    net.hidden = read_activation(r);
    net.output = read_activation(r);
    net.out_low = r.pod<double>();
    net.out_high = r.pod<double>();
    for (std::uint32_t i = 0; i < n; ++i) {
        net.layers.push_back({Eigen::MatrixXd::Zero(sizes[i + 1], sizes[i]), Eigen::VectorXd::Zero(sizes[i + 1])});
    }
    net.unflatten(r.doubles(net.param_count()));
    require(net.finite(), ErrorKind::Format, r.name() + ": checkpoint holds non-finite parameters");
    return net;
}

void write_optim(Writer& w, const OptimState& o) {
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(o.kind));
    w.pod(o.lr);
    w.pod(o.beta1);
    w.pod(o.beta2);
    w.pod(o.eps);
    w.pod<std::int64_t>(o.step);
    w.pod<std::uint64_t>(static_cast<std::uint64_t>(o.m.size()));
    w.doubles(o.m);
    w.doubles(o.v);
}

OptimState read_optim(Reader& r, const Network& net) {
    OptimState o;
    const auto kind = r.pod<std::uint8_t>();
    require(kind <= 1, ErrorKind::Format, r.name() + ": unknown optimizer kind");
    o.kind = static_cast<OptimizerKind>(kind);
    o.lr = r.pod<double>();
    o.beta1 = r.pod<double>();
    o.beta2 = r.pod<double>();
    o.eps = r.pod<double>();
    o.step = r.pod<std::int64_t>();
    const auto n = r.pod<std::uint64_t>();
    require(n == 0 || n == net.param_count(), ErrorKind::Format, r.name() + ": optimizer state does not match network");
    o.m = r.doubles(n);
    o.v = r.doubles(n);
    return o;
}

}  // namespace

Checkpoint make_checkpoint(const TrainState& st, const std::string& config_text) {
    Checkpoint ck;
    ck.agent = st.agent;
    ck.config_text = config_text;
    ck.streams = {{"env", st.env_rng}, {"noise", st.noise_rng}, {"batch", st.batch_rng}};
    ck.env_steps = st.env_steps;
    ck.updates = st.updates;
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write checkpoint " + path.string());
    Writer w(out);
    out.write(kMagic, sizeof(kMagic));
    w.pod(kVersion);
    w.text(ck.config_text);
    w.pod<std::int64_t>(ck.env_steps);
    w.pod<std::int64_t>(ck.updates);
    for (const Network* net : {&ck.agent.actor, &ck.agent.critic, &ck.agent.actor_target, &ck.agent.critic_target}) {
        write_network(w, *net);
    }
    write_optim(w, ck.agent.actor_opt);
    write_optim(w, ck.agent.critic_opt);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(ck.streams.size()));
    for (const auto& [label, rng] : ck.streams) {
        std::ostringstream ss;
        ss << rng;
        w.text(label);
        w.text(ss.str());
    }
    out.write("END!", 4);
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open checkpoint " + path.string());
    Reader r(in, path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    require(in && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, ErrorKind::Format,
            path.string() + ": not a checkpoint (bad magic)");
    const auto version = r.pod<std::uint32_t>();
    require(version == kVersion, ErrorKind::Format,
            path.string() + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    ck.config_text = r.text();
    ck.env_steps = r.pod<std::int64_t>();
    ck.updates = r.pod<std::int64_t>();
    ck.agent.actor = read_network(r);
    ck.agent.critic = read_network(r);
    ck.agent.actor_target = read_network(r);
    ck.agent.critic_target = read_network(r);
    require(ck.agent.actor.sizes() == ck.agent.actor_target.sizes() &&
                ck.agent.critic.sizes() == ck.agent.critic_target.sizes(),
            ErrorKind::Format, path.string() + ": target networks do not match their sources");
    require(ck.agent.actor.output_size() == kActDim && ck.agent.actor.input_size() == kObsDim &&
                ck.agent.critic.input_size() == kObsDim + kActDim && ck.agent.critic.output_size() == 1,
            ErrorKind::Format, path.string() + ": network shapes do not fit the task");
    ck.agent.actor_opt = read_optim(r, ck.agent.actor);
    ck.agent.critic_opt = read_optim(r, ck.agent.critic);
    const auto n_streams = r.pod<std::uint32_t>();
    require(n_streams <= 64, ErrorKind::Format, path.string() + ": implausible stream count");
    for (std::uint32_t i = 0; i < n_streams; ++i) {
        std::string label = r.text(256);
        std::istringstream ss(r.text());
        Rng rng;
        ss >> rng;
        require(static_cast<bool>(ss), ErrorKind::Format, path.string() + ": corrupt RNG state for '" + label + "'");
        ck.streams.emplace_back(std::move(label), rng);
    }
    char tail[4];
    in.read(tail, 4);
    require(in && std::memcmp(tail, "END!", 4) == 0, ErrorKind::Format, path.string() + ": truncated checkpoint");
    return ck;
}

}  // namespace ibcdmp
