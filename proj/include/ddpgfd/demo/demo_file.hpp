#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "ddpgfd/env/insertion.hpp"
#include "ddpgfd/replay/transition.hpp"

namespace ddpgfd::demo {

inline constexpr int kDemoFormatVersion = 1;

struct DemoHeader {
  int format_version = kDemoFormatVersion;
  env::Variant variant = env::Variant::peg;
  env::RewardMode reward_mode = env::RewardMode::sparse;
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
};

struct DemoEpisode {
  env::Variant variant = env::Variant::peg;
  std::vector<replay::EpisodeStep> steps;
  std::uint64_t seed = 0;
  std::string source = "scripted";  // scripted | teleop
  std::string timestamp;

  bool succeeded() const { return !steps.empty() && steps.back().terminal; }
};

struct DemoFile {
  DemoHeader header;
  std::vector<DemoEpisode> episodes;
};

DemoHeader header_for(const env::InsertionTask& task);

// Newline-delimited JSON: the header object, then one object per step
// {ep, t, obs, act, r, next_obs, done}. The first step of an episode also
// carries seed, source and timestamp.
std::string header_line(const DemoHeader& header);
std::vector<std::string> episode_lines(const DemoEpisode& episode, std::size_t episode_index);

void write_demo_file(const std::filesystem::path& path, const DemoFile& file);
void append_episode(const std::filesystem::path& path, const DemoEpisode& episode, std::size_t episode_index);
std::string serialize(const DemoFile& file);

// Parses and schema-checks a demo file without consulting an environment.
DemoFile read_demo_file(const std::filesystem::path& path);
DemoFile parse_demo_stream(std::istream& in, const std::string& source_name);

// Reads and validates demonstrations against a task: dimensions, episode
// continuity, and rewards recomputed from the site entries of next_obs. When
// the task's reward mode differs from the recorded one, rewards are relabelled.
std::vector<DemoEpisode> load_demos(const std::filesystem::path& path, const env::InsertionTask& task);
void validate_episodes(DemoFile& file, const env::InsertionTask& task, const std::string& source_name);

// Reward implied by the site entries of an observation.
double reward_from_observation(const env::InsertionTask& task, const env::Observation& obs);
bool success_from_observation(const env::InsertionTask& task, const env::Observation& obs);

using Policy = std::function<env::Action(const env::EnvState&, const env::Observation&, std::mt19937_64&)>;

struct RecordOptions {
  std::uint64_t base_seed = 0;
  bool keep_successes_only = false;
  std::string source = "scripted";
  std::string timestamp;
};

// Rolls `count` episodes with `policy` on seeds base_seed, base_seed+1, ...
// and writes them to `out`. With keep_successes_only, failures are skipped
// and more seeds are drawn until `count` episodes are kept.
std::vector<DemoEpisode> record_episodes(const env::InsertionTask& task, const Policy& policy, std::size_t count,
                                         const std::filesystem::path& out, const RecordOptions& options,
                                         std::mt19937_64& rng);

DemoEpisode rollout_episode(const env::InsertionTask& task, const Policy& policy, std::uint64_t seed,
                            std::mt19937_64& rng);

// 1-step transitions of every episode followed, when n > 1, by their n-step
// transitions. With bootstrap_on_success, successful final steps are not
// treated as terminal (see AgentConfig::bootstrap_on_success).
std::vector<replay::Transition> demo_transitions(const std::vector<DemoEpisode>& episodes, int n, double gamma,
                                                 bool bootstrap_on_success = false);

}  // namespace ddpgfd::demo
