#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ibcdmp/agent.hpp"
#include "ibcdmp/reward.hpp"

namespace ibcdmp {

struct TrainOptions {
    AgentConfig agent;
    DmpConfig dmp;
    CostConfig cost;
    EnvSampler sampler;
    std::uint64_t seed = 1;
    // Where the offending batch goes when a loss turns non-finite; empty disables the dump.
    std::filesystem::path dump_path;
};

struct TrainLogRow {
    int episode = 0;
    double arpe = 0.0;
    double larpe = 0.0;
    int steps = 0;
    int collisions = 0;  // samples inside the obstacle or below ground
    double final_err = 0.0;
};

struct TrainState {
    Agent agent;
    Rng env_rng;
    Rng noise_rng;
    Rng batch_rng;
    long long env_steps = 0;
    long long updates = 0;
};

struct TrainResult {
    TrainState state;
    std::vector<TrainLogRow> log;
};

using EpisodeCallback = std::function<void(const TrainLogRow&)>;

/// Random-action pre-fill for the no-demonstration baseline: `count` transitions from
/// uniform actions on freshly sampled training scenes.
std::vector<Transition> random_prefill(std::size_t count, const DmpConfig& dmp, const CostConfig& cost,
                                       const EnvSampler& sampler, Rng& rng);

TrainResult train(const std::vector<Transition>& demos, const TrainOptions& opt, const EpisodeCallback& on_episode = {});

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log);
std::vector<TrainLogRow> read_train_log(std::istream& in, const std::string& source_name);

struct Checkpoint {
    Agent agent;
    std::string config_text;
    std::vector<std::pair<std::string, Rng>> streams;
    long long env_steps = 0;
    long long updates = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
/// Throws Error{Format} on a bad magic, version or truncated payload.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint make_checkpoint(const TrainState& st, const std::string& config_text);

}  // namespace ibcdmp
