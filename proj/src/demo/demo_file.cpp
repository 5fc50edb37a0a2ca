#include "ddpgfd/demo/demo_file.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ddpgfd/replay/nstep.hpp"

namespace ddpgfd::demo {

using nlohmann::json;

namespace {

constexpr std::size_t kSiteEntries = 8;  // tip-opening and tip-goal, two sites
constexpr std::size_t kForceEntries = 2;

std::size_t goal_entries_offset(const env::InsertionTask& task) {
  return task.observation_dim() - kForceEntries - kSiteEntries / 2;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw std::runtime_error(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

DemoHeader header_for(const env::InsertionTask& task) {
  DemoHeader h;
  h.variant = task.config().variant;
  h.reward_mode = task.config().reward_mode;
  h.obs_dim = task.observation_dim();
  h.act_dim = task.action_dim();
  return h;
}

std::string header_line(const DemoHeader& header) {
  return json{{"format_version", header.format_version},
              {"variant", env::to_string(header.variant)},
              {"reward_mode", env::to_string(header.reward_mode)},
              {"obs_dim", header.obs_dim},
              {"act_dim", header.act_dim}}
      .dump();
}

std::vector<std::string> episode_lines(const DemoEpisode& episode, std::size_t episode_index) {
  std::vector<std::string> lines;
  lines.reserve(episode.steps.size());
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    const auto& s = episode.steps[t];
    json j{{"ep", episode_index}, {"t", t},       {"obs", s.obs},           {"act", s.action},
           {"r", s.reward},       {"next_obs", s.next_obs}, {"done", s.terminal}};
    if (t == 0) {
      j["seed"] = episode.seed;
      j["source"] = episode.source;
      j["timestamp"] = episode.timestamp;
    }
    lines.push_back(j.dump());
  }
  return lines;
}

std::string serialize(const DemoFile& file) {
  std::string out = header_line(file.header) + "\n";
  for (std::size_t e = 0; e < file.episodes.size(); ++e) {
    for (const auto& line : episode_lines(file.episodes[e], e)) out += line + "\n";
  }
  return out;
}

void write_demo_file(const std::filesystem::path& path, const DemoFile& file) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open demo file for writing: " + path.string());
  out << serialize(file);
  out.flush();
  if (!out) throw std::runtime_error("failed writing demo file: " + path.string());
}

void append_episode(const std::filesystem::path& path, const DemoEpisode& episode, std::size_t episode_index) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open demo file for appending: " + path.string());
  std::string block;
  for (const auto& line : episode_lines(episode, episode_index)) block += line + "\n";
  // One write per episode so a reader never sees a partial episode.
  out << block;
  out.flush();
  if (!out) throw std::runtime_error("failed appending to demo file: " + path.string());
}

DemoFile parse_demo_stream(std::istream& in, const std::string& source_name) {
  DemoFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  long current_ep = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(source_name, line_no, std::string("malformed record: ") + e.what());
    }
    if (j.contains("format_version")) {
      DemoHeader h;
      try {
        h.format_version = j.at("format_version").get<int>();
        h.variant = env::variant_from_string(j.at("variant").get<std::string>());
        h.reward_mode = env::reward_mode_from_string(j.value("reward_mode", std::string("sparse")));
        h.obs_dim = j.at("obs_dim").get<std::size_t>();
        h.act_dim = j.at("act_dim").get<std::size_t>();
      } catch (const std::exception& e) {
        fail(source_name, line_no, std::string("bad header: ") + e.what());
      }
      if (have_header) {
        if (h.variant != file.header.variant) {
          fail(source_name, line_no, "mixed task variants in one file (" + env::to_string(file.header.variant) +
                                         " and " + env::to_string(h.variant) + ")");
        }
        fail(source_name, line_no, "duplicate header record");
      }
      if (h.format_version != kDemoFormatVersion) {
        fail(source_name, line_no, "unsupported format_version " + std::to_string(h.format_version));
      }
      file.header = h;
      have_header = true;
      continue;
    }
    if (!have_header) fail(source_name, line_no, "missing header record");
    long ep = 0;
    long t = 0;
    replay::EpisodeStep step;
    try {
      ep = j.at("ep").get<long>();
      t = j.at("t").get<long>();
      step.obs = j.at("obs").get<std::vector<double>>();
      step.action = j.at("act").get<std::vector<double>>();
      step.reward = j.at("r").get<double>();
      step.next_obs = j.at("next_obs").get<std::vector<double>>();
      step.terminal = j.at("done").get<bool>();
    } catch (const std::exception& e) {
      fail(source_name, line_no, std::string("bad step record: ") + e.what());
    }
    if (ep != current_ep) {
      if (ep != current_ep + 1) fail(source_name, line_no, "episode index " + std::to_string(ep) + " out of sequence");
      if (t != 0) fail(source_name, line_no, "episode " + std::to_string(ep) + " does not start at t=0");
      DemoEpisode e;
      e.variant = file.header.variant;
      e.seed = j.value("seed", std::uint64_t{0});
      e.source = j.value("source", std::string("scripted"));
      e.timestamp = j.value("timestamp", std::string());
      file.episodes.push_back(std::move(e));
      current_ep = ep;
    } else if (t != static_cast<long>(file.episodes.back().steps.size())) {
      fail(source_name, line_no, "episode " + std::to_string(ep) + " step " + std::to_string(t) + " out of sequence");
    }
    file.episodes.back().steps.push_back(std::move(step));
  }
  if (!have_header) throw std::runtime_error(source_name + ": empty demo file (no header record)");
  return file;
}

DemoFile read_demo_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open demo file: " + path.string());
  return parse_demo_stream(in, path.string());
}

double reward_from_observation(const env::InsertionTask& task, const env::Observation& obs) {
  const std::size_t off = goal_entries_offset(task);
  const double ps = task.config().obs_position_scale;
  env::SiteSet sites;
  sites.goals = task.goal_sites();
  sites.openings = task.opening_sites();
  sites.goal_weight = task.config().goal_weight;
  sites.opening_weight = task.config().opening_weight;
  for (std::size_t i = 0; i < sites.goals.size(); ++i) {
    sites.tips.push_back(sites.goals[i] + env::Vec2{obs[off + 2 * i] / ps, obs[off + 2 * i + 1] / ps});
  }
  return task.reward(sites);
}

bool success_from_observation(const env::InsertionTask& task, const env::Observation& obs) {
  const std::size_t off = goal_entries_offset(task);
  const double ps = task.config().obs_position_scale;
  const env::Vec2 w = task.config().goal_weight;
  double d = 0.0;
  for (std::size_t i = 0; i < task.goal_sites().size(); ++i) {
    d += std::hypot(w.x * obs[off + 2 * i] / ps, w.y * obs[off + 2 * i + 1] / ps);
  }
  return d < task.config().eps_tol;
}

void validate_episodes(DemoFile& file, const env::InsertionTask& task, const std::string& source_name) {
  const auto expected = header_for(task);
  if (file.header.variant != expected.variant) {
    throw std::runtime_error(source_name + ": demonstrations are for the " + env::to_string(file.header.variant) +
                             " task, configured task is " + env::to_string(expected.variant));
  }
  if (file.header.obs_dim != expected.obs_dim || file.header.act_dim != expected.act_dim) {
    throw std::runtime_error(source_name + ": header dimensions (obs " + std::to_string(file.header.obs_dim) +
                             ", act " + std::to_string(file.header.act_dim) + ") do not match the task");
  }
  const bool relabel = file.header.reward_mode != expected.reward_mode;
  std::size_t line = 1;
  for (std::size_t e = 0; e < file.episodes.size(); ++e) {
    auto& steps = file.episodes[e].steps;
    auto where = [&](std::size_t t) {
      return "episode " + std::to_string(e) + " step " + std::to_string(t);
    };
    for (std::size_t t = 0; t < steps.size(); ++t) {
      ++line;
      auto& s = steps[t];
      if (s.obs.size() != expected.obs_dim || s.next_obs.size() != expected.obs_dim) {
        fail(source_name, line, where(t) + ": observation dimension " + std::to_string(s.obs.size()) + ", expected " +
                                    std::to_string(expected.obs_dim));
      }
      if (s.action.size() != expected.act_dim) {
        fail(source_name, line, where(t) + ": action dimension " + std::to_string(s.action.size()) + ", expected " +
                                    std::to_string(expected.act_dim));
      }
      for (double v : s.action) {
        if (!std::isfinite(v)) fail(source_name, line, where(t) + ": non-finite action");
      }
      if (t + 1 < steps.size() && steps[t + 1].obs != s.next_obs) {
        fail(source_name, line, where(t) + ": next_obs does not match the following step's obs");
      }
      if (s.terminal && t + 1 != steps.size()) fail(source_name, line, where(t) + ": steps recorded after a terminal step");
      if (s.terminal != success_from_observation(task, s.next_obs)) {
        fail(source_name, line, where(t) + ": done flag disagrees with the goal-site distance");
      }
      const double r = reward_from_observation(task, s.next_obs);
      if (relabel) {
        s.reward = r;
      } else if (std::abs(r - s.reward) > 1e-9) {
        fail(source_name, line, where(t) + ": stored reward " + std::to_string(s.reward) +
                                    " differs from recomputed " + std::to_string(r));
      }
    }
  }
  if (relabel) file.header.reward_mode = expected.reward_mode;
}

std::vector<DemoEpisode> load_demos(const std::filesystem::path& path, const env::InsertionTask& task) {
  DemoFile file = read_demo_file(path);
  validate_episodes(file, task, path.string());
  return std::move(file.episodes);
}

DemoEpisode rollout_episode(const env::InsertionTask& task, const Policy& policy, std::uint64_t seed,
                            std::mt19937_64& rng) {
  DemoEpisode ep;
  ep.variant = task.config().variant;
  ep.seed = seed;
  env::EnvState state = task.reset(seed);
  env::Observation obs = task.observe(state);
  while (!state.done) {
    const env::Action a = policy(state, obs, rng);
    auto r = task.step(state, a);
    ep.steps.push_back({obs, a, r.reward, r.observation, r.success});
    state = std::move(r.state);
    obs = std::move(r.observation);
  }
  return ep;
}

std::vector<DemoEpisode> record_episodes(const env::InsertionTask& task, const Policy& policy, std::size_t count,
                                         const std::filesystem::path& out, const RecordOptions& options,
                                         std::mt19937_64& rng) {
  DemoFile file;
  file.header = header_for(task);
  std::uint64_t seed = options.base_seed;
  const std::uint64_t seed_limit = options.base_seed + 100 * (count + 1);
  while (file.episodes.size() < count) {
    if (seed >= seed_limit) {
      throw std::runtime_error("record_episodes: policy produced too few successful episodes");
    }
    DemoEpisode ep = rollout_episode(task, policy, seed++, rng);
    if (options.keep_successes_only && !ep.succeeded()) continue;
    ep.source = options.source;
    ep.timestamp = options.timestamp;
    file.episodes.push_back(std::move(ep));
  }
  write_demo_file(out, file);
  return std::move(file.episodes);
}

std::vector<replay::Transition> demo_transitions(const std::vector<DemoEpisode>& episodes, int n, double gamma,
                                                 bool bootstrap_on_success) {
  std::vector<replay::Transition> out;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    auto steps = episodes[e].steps;
    if (bootstrap_on_success) {
      for (auto& s : steps) s.terminal = false;
    }
    if (steps.empty()) {
      std::cerr << "warning: skipping empty demonstration episode " << e << "\n";
      continue;
    }
    for (const auto& s : steps) out.push_back(replay::one_step_transition(s, gamma, true));
    if (n > 1) {
      for (auto& t : replay::assemble_nstep(steps, n, gamma, true)) out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace ddpgfd::demo
