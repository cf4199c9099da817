#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ibcdmp/error.hpp"
#include "ibcdmp/pipeline.hpp"
#include "ibcdmp/trainer.hpp"

using namespace ibcdmp;

// Returned by the error probes below when nothing was thrown.
constexpr auto kNoError = static_cast<ErrorKind>(-1);
namespace fs = std::filesystem;

namespace {

const std::vector<Transition>& small_demos() {
    static const std::vector<Transition> demos = [] {
        const EnvSampler sampler;
        const DmpConfig dmp;
        return prepare_demos(synth_dataset(4, sampler, 3), dmp, CostConfig{}, DemoPrepOptions{}).transitions;
    }();
    return demos;
}

TrainOptions small_options(int episodes) {
    TrainOptions o;
    o.agent.episodes = episodes;
    o.agent.n_demo_critic = 36;
    o.agent.n_inter_critic = 4;
    o.agent.n_demo_actor = 8;
    o.agent.n_inter_actor = 8;
    o.agent.warmup_steps = 20;
    o.seed = 5;
    return o;
}

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "ibcdmp_unit";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("no updates before the warm-up threshold") {
    TrainOptions o = small_options(1);
    o.agent.warmup_steps = 100000;
    const TrainResult r = train(small_demos(), o);
    REQUIRE(r.log.size() == 1);
    CHECK(r.state.updates == 0);
    CHECK(r.state.env_steps == r.log[0].steps);
    Rng init = derive_stream(o.seed, "init");
    const Agent fresh = make_agent(o.agent, o.dmp, init);
    CHECK(r.state.agent.actor.flatten() == fresh.actor.flatten());
    CHECK(r.state.agent.critic.flatten() == fresh.critic.flatten());
}

TEST_CASE("updates start once the warm-up is reached") {
    const TrainOptions o = small_options(3);
    const TrainResult r = train(small_demos(), o);
    long long steps = 0;
    for (const auto& row : r.log) steps += row.steps;
    CHECK(r.state.env_steps == steps);
    CHECK(r.state.updates == steps - o.agent.warmup_steps + 1);
    for (const auto& row : r.log) {
        CHECK(row.larpe == doctest::Approx(-std::log(1.0 - row.arpe)).epsilon(1e-12));
        CHECK(row.arpe <= 0.0);
        CHECK(row.steps <= o.dmp.max_steps());
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    for (BcMode mode : {BcMode::Implicit, BcMode::Explicit, BcMode::None}) {
        TrainOptions o = small_options(3);
        o.agent.bc_mode = mode;
        const TrainResult a = train(small_demos(), o);
        const TrainResult b = train(small_demos(), o);
        std::ostringstream la, lb;
        write_train_log(la, a.log);
        write_train_log(lb, b.log);
        CHECK(la.str() == lb.str());
        CHECK(a.state.agent.actor.flatten() == b.state.agent.actor.flatten());
        CHECK(a.state.agent.critic_target.flatten() == b.state.agent.critic_target.flatten());

        o.seed = 6;
        const TrainResult c = train(small_demos(), o);
        CHECK(c.state.agent.actor.flatten() != a.state.agent.actor.flatten());
    }
}

TEST_CASE("training rejects demonstration sets smaller than a batch") {
    TrainOptions o = small_options(1);
    o.agent.n_demo_critic = static_cast<int>(small_demos().size()) + 1;
    try {
        train(small_demos(), o);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientData);
    }
    o.agent.gamma = 1.5;
    CHECK_THROWS_AS(train(small_demos(), o), Error);
}

TEST_CASE("training log CSV round trip") {
    const TrainResult r = train(small_demos(), small_options(2));
    std::stringstream ss;
    write_train_log(ss, r.log);
    const auto back = read_train_log(ss, "mem");
    REQUIRE(back.size() == r.log.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].episode == r.log[i].episode);
        CHECK(back[i].larpe == doctest::Approx(r.log[i].larpe).epsilon(1e-11));
        CHECK(back[i].steps == r.log[i].steps);
    }
    std::istringstream bad("episode,arpe,larpe,steps,collisions,final_err\n1,2,3\n");
    CHECK_THROWS_AS(read_train_log(bad, "bad"), Error);
}

TEST_CASE("checkpoint round trip") {
    const TrainResult r = train(small_demos(), small_options(2));
    const Checkpoint ck = make_checkpoint(r.state, "seed=5\n");
    const fs::path p = temp_path("round.ckpt");
    save_checkpoint(p, ck);
    const Checkpoint back = load_checkpoint(p);
    CHECK(back.config_text == "seed=5\n");
    CHECK(back.env_steps == r.state.env_steps);
    CHECK(back.updates == r.state.updates);
    CHECK(back.agent.actor.flatten() == r.state.agent.actor.flatten());
    CHECK(back.agent.critic.flatten() == r.state.agent.critic.flatten());
    CHECK(back.agent.actor_target.flatten() == r.state.agent.actor_target.flatten());
    CHECK(back.agent.critic_target.flatten() == r.state.agent.critic_target.flatten());
    CHECK(back.agent.actor_opt.m == r.state.agent.actor_opt.m);
    CHECK(back.agent.critic_opt.step == r.state.agent.critic_opt.step);
    REQUIRE(back.streams.size() == ck.streams.size());
    for (std::size_t i = 0; i < ck.streams.size(); ++i) {
        CHECK(back.streams[i].first == ck.streams[i].first);
        CHECK(back.streams[i].second == ck.streams[i].second);
    }
    save_checkpoint(temp_path("again.ckpt"), back);
    CHECK(slurp(temp_path("again.ckpt")) == slurp(p));
}

TEST_CASE("corrupt checkpoints are rejected") {
    const TrainResult r = train(small_demos(), small_options(1));
    const fs::path good = temp_path("good.ckpt");
    save_checkpoint(good, make_checkpoint(r.state, ""));
    const std::string bytes = slurp(good);

    auto kind_of = [](const std::string& content) {
        const fs::path p = temp_path("bad.ckpt");
        std::ofstream(p, std::ios::binary) << content;
        try {
            load_checkpoint(p);
        } catch (const Error& e) {
            return e.kind();
        }
        return kNoError;
    };
    std::string magic = bytes;
    magic[0] = 'X';
    CHECK(kind_of(magic) == ErrorKind::Format);
    std::string version = bytes;
    version[8] = 9;
    CHECK(kind_of(version) == ErrorKind::Format);
    CHECK(kind_of(bytes.substr(0, bytes.size() / 2)) == ErrorKind::Format);
    CHECK(kind_of(bytes.substr(0, bytes.size() - 1)) == ErrorKind::Format);
    CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), Error);
}

TEST_CASE("a diverging update dumps its batch") {
    TrainOptions o = small_options(2);
    o.agent.lr_critic = 1e300;
    o.agent.lr_actor = 1e300;
    o.dump_path = temp_path("nonfinite.jsonl");
    fs::remove(o.dump_path);
    try {
        train(small_demos(), o);
        FAIL("expected a numeric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Numeric);
        CHECK(std::string(e.what()).find("episode") != std::string::npos);
    }
    REQUIRE(fs::exists(o.dump_path));
    const auto dumped = load_transitions(o.dump_path);
    CHECK(dumped.size() == 36 + 4 + 8 + 8);
}

TEST_CASE("random pre-fill produces valid transitions") {
    Rng rng(2);
    const auto ts = random_prefill(300, DmpConfig{}, CostConfig{}, EnvSampler{}, rng);
    CHECK(ts.size() == 300);
    for (const auto& t : ts) {
        REQUIRE((t.a.array().abs() <= 5.0).all());
        REQUIRE(t.r <= 0.0);
    }
}
