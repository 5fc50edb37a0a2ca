#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ddpgfd/agent/ddpgfd_agent.hpp"
#include "ddpgfd/demo/behavioral_cloning.hpp"
#include "ddpgfd/demo/scripted_expert.hpp"
#include "ddpgfd/env/insertion.hpp"
#include "ddpgfd/replay/replay_buffer.hpp"

namespace ddpgfd::harness {

enum class Algorithm { ddpgfd, ddpg, bc };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

struct ExperimentConfig {
  env::EnvConfig env;
  agent::AgentConfig agent;
  replay::ReplayConfig replay;
  demo::BcConfig bc;
  demo::ExpertConfig expert;  // used by demo-record

  std::optional<std::string> demos;  // demo file path, relative to the config file
  std::size_t demo_count = 0;        // use only the first k episodes (0 = all)
  Algorithm algorithm = Algorithm::ddpgfd;
  env::RewardMode reward_mode = env::RewardMode::sparse;
  std::uint64_t total_env_steps = 150'000;
  std::uint64_t eval_every = 2'500;
  int eval_episodes = 64;
  std::uint64_t seed = 0;

  // Copies the top-level reward mode into the env config (and bootstraps
  // through success under the shaped reward), ties the replay horizon to the
  // agent's, zeroes the demo bonus for ddpg, then validates.
  void resolve();
  void validate() const;
  // Training with ddpgfd or bc needs a demos file; recording does not.
  void require_demos() const;
};

// Missing keys keep their defaults; unknown keys are rejected so typos fail
// loudly.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Reads a config file. A relative demo path is resolved against the file's
// directory.
ExperimentConfig load_config(const std::filesystem::path& path);

// Stable 64-bit FNV-1a hash of the canonical resolved config, as hex.
std::string config_hash(const ExperimentConfig& config);

// Seed blocks: training episodes, evaluation episodes and recorded
// demonstrations never share an environment seed.
std::uint64_t training_episode_seed(std::uint64_t run_seed, std::uint64_t episode);
std::uint64_t evaluation_seed(std::uint64_t episode);
std::uint64_t demonstration_seed(std::uint64_t episode);

}  // namespace ddpgfd::harness
