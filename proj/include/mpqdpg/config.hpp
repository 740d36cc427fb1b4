// Run configuration: flat `key = value` text, '#' starts a comment.
// Every key has a default; see RunConfig::to_text() for the full list.
#pragma once

#include "mpqdpg/agent.hpp"
#include "mpqdpg/dynamics.hpp"
#include "mpqdpg/env.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mpqdpg::harness {

enum class Algorithm { mpq_dpg, ddpg };

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm algo);

struct RunConfig {
    Algorithm algorithm = Algorithm::mpq_dpg;
    env::Trajectory trajectory = env::Trajectory::rt1;
    int episodes = 1500;
    std::uint64_t seed = 1;
    agent::AgentConfig agent;
    env::EpisodeConfig episode;
    dynamics::ModelCoefficients model;
    std::filesystem::path out_dir = "run";
    /// When false the `seconds` column of the training CSV is written as 0
    /// so repeated runs produce identical bytes.
    bool record_wall_time = true;

    /// Assigns one key. Throws ConfigError on unknown keys or bad values.
    void set(std::string_view key, std::string_view value);

    /// Throws ConfigError. Run before any work is started.
    void validate() const;

    /// Every key with its current value, parseable by apply_config_text.
    std::string to_text() const;
};

/// Applies `key = value` lines; `source` names the origin in error messages.
void apply_config_text(RunConfig& config, std::string_view text, std::string_view source = "<config>");

/// Throws IoError if the file cannot be read, ConfigError on bad content.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace mpqdpg::harness
