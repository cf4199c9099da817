#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ibcdmp/agent.hpp"
#include "ibcdmp/demo.hpp"
#include "ibcdmp/pipeline.hpp"
#include "ibcdmp/reward.hpp"

namespace ibcdmp {

struct EvalConfig {
    int test_runs = 400;
    double performance_standard = -6.0;
    int smooth_window = 10;
};

// Everything a run depends on, as one flat key=value file.
struct RunConfig {
    DmpConfig dmp;
    CostConfig cost;
    AgentConfig agent;
    EnvSampler sampler;
    DemoPrepOptions demo;
    SynthOptions synth;
    EvalConfig eval;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Applies one "key=value" assignment. Throws Error{UnknownKey} or Error{Parse}.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
/// Current value in the same text form format_config prints.
std::string get_config_value(const RunConfig& cfg, const std::string& key);
void apply_assignment(RunConfig& cfg, const std::string& assignment);

/// Parses key=value lines ('#' comments) on top of `base`; does not validate.
RunConfig parse_config(const std::string& text, const std::string& source_name, RunConfig base = {});
/// "defaults" names the built-in configuration.
RunConfig load_config(const std::filesystem::path& path);

/// Every key, grouped with section comments, in a form parse_config reads back exactly.
std::string format_config(const RunConfig& cfg);

}  // namespace ibcdmp
