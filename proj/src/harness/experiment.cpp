#include "ddpgfd/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "ddpgfd/demo/demo_file.hpp"
#include "ddpgfd/nn/checkpoint.hpp"

namespace ddpgfd::harness {

using nlohmann::json;

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

EvalPolicy actor_policy(const nn::MLPParams& actor, std::vector<double> action_bounds) {
  if (actor.output_dim() != action_bounds.size()) {
    throw std::invalid_argument("actor output dimension does not match the task's action dimension");
  }
  return [&actor, bounds = std::move(action_bounds)](const env::EnvState&, const env::Observation& obs) {
    const nn::Tensor out = nn::mlp_predict(actor, nn::Tensor::vector(obs));
    env::Action a(bounds.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(out[i], -1.0, 1.0) * bounds[i];
    return a;
  };
}

EvalResult evaluate(const env::InsertionTask& task, const EvalPolicy& policy, int episodes) {
  EvalResult r;
  int successes = 0;
  double success_steps = 0.0;
  for (int e = 0; e < episodes; ++e) {
    env::EnvState s = task.reset(evaluation_seed(static_cast<std::uint64_t>(e)));
    env::Observation obs = task.observe(s);
    double ret = 0.0;
    while (!s.done) {
      auto step = task.step(s, policy(s, obs));
      ret += step.reward;
      s = std::move(step.state);
      obs = std::move(step.observation);
    }
    r.returns.push_back(ret);
    r.lengths.push_back(s.step_index);
    r.successes.push_back(s.success);
    if (s.success) {
      ++successes;
      success_steps += s.step_index;
    }
  }
  if (episodes <= 0) return r;
  double sum = 0.0, len = 0.0;
  for (int e = 0; e < episodes; ++e) {
    sum += r.returns[e];
    len += r.lengths[e];
  }
  r.return_mean = sum / episodes;
  r.return_p10 = percentile(r.returns, 0.1);
  r.return_p90 = percentile(r.returns, 0.9);
  r.success_rate = static_cast<double>(successes) / episodes;
  r.mean_length = len / episodes;
  r.mean_success_length = successes ? success_steps / successes : 0.0;
  return r;
}

EvalResult evaluate(const env::InsertionTask& task, const nn::MLPParams& actor, int episodes) {
  if (actor.input_dim() != task.observation_dim()) {
    throw std::invalid_argument("actor input dimension " + std::to_string(actor.input_dim()) +
                                " does not match the observation dimension " +
                                std::to_string(task.observation_dim()));
  }
  return evaluate(task, actor_policy(actor, task.action_bounds()), episodes);
}

std::string format_row(const MetricsRow& row) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%.3f,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<unsigned long long>(row.env_steps), row.wall_seconds, row.train_return_mean,
                row.eval_return_mean, row.eval_return_p10, row.eval_return_p90, row.eval_success_rate,
                row.mean_episode_length, row.critic_loss_mean, row.actor_loss_mean, row.demo_fraction);
  return buf;
}

MetricsRow parse_row(const std::string& line) {
  std::vector<double> v;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw std::runtime_error("malformed metrics row: " + line);
    }
    if (used != cell.size()) throw std::runtime_error("malformed metrics row: " + line);
    v.push_back(x);
  }
  if (v.size() != 11) throw std::runtime_error("metrics row has " + std::to_string(v.size()) + " fields: " + line);
  MetricsRow r;
  r.env_steps = static_cast<std::uint64_t>(v[0]);
  r.wall_seconds = v[1];
  r.train_return_mean = v[2];
  r.eval_return_mean = v[3];
  r.eval_return_p10 = v[4];
  r.eval_return_p90 = v[5];
  r.eval_success_rate = v[6];
  r.mean_episode_length = v[7];
  r.critic_loss_mean = v[8];
  r.actor_loss_mean = v[9];
  r.demo_fraction = v[10];
  return r;
}

MetricsFile read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  // Drop a trailing partial line left by an interrupted writer.
  const auto last_nl = text.rfind('\n');
  text.resize(last_nl == std::string::npos ? 0 : last_nl + 1);
  MetricsFile f;
  std::stringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      f.header.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    f.rows.push_back(parse_row(line));
  }
  return f;
}

namespace {

// Sparse rewards drive many network values towards zero; denormal arithmetic
// is then ~100x slower on x86. Flushed for the duration of a run.
class FlushDenormals {
 public:
  FlushDenormals() {
#if defined(__SSE2__)
    saved_ = _mm_getcsr();
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
#endif
  }
  ~FlushDenormals() {
#if defined(__SSE2__)
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned saved_ = 0;
};

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out.flush()) throw std::runtime_error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open metrics file: " + path.string());
    for (const auto& h : header) out_ << "# " << h << "\n";
    out_ << "# " << kMetricsColumns << "\n";
    out_.flush();
  }
  void write(const MetricsRow& row) {
    out_ << format_row(row) << "\n";
    out_.flush();
    if (!out_) throw std::runtime_error("failed writing metrics row");
  }

 private:
  std::ofstream out_;
};

std::vector<demo::DemoEpisode> configured_demos(const ExperimentConfig& c, const env::InsertionTask& task) {
  auto episodes = demo::load_demos(*c.demos, task);
  if (c.demo_count > 0) {
    if (episodes.size() < c.demo_count) {
      throw std::runtime_error("demo file " + *c.demos + " holds " + std::to_string(episodes.size()) +
                               " episodes, " + std::to_string(c.demo_count) + " requested");
    }
    episodes.resize(c.demo_count);
  }
  return episodes;
}

}  // namespace

RunResult run(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream* log) {
  ExperimentConfig c = config;
  c.resolve();
  c.require_demos();
  const FlushDenormals flush;
  std::filesystem::create_directories(out_dir);
  const env::InsertionTask task(c.env);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  RunResult result;
  result.metrics_path = out_dir / "metrics.csv";
  result.checkpoint_path = out_dir / "checkpoint.json";
  const json resolved = config_to_json(c);
  write_atomically(out_dir / "resolved_config.json", resolved.dump(2) + "\n");

  std::vector<demo::DemoEpisode> demos;
  if (c.algorithm != Algorithm::ddpg) demos = configured_demos(c, task);
  const auto demo_rows = demo::demo_transitions(demos, c.agent.n, c.agent.gamma, c.agent.bootstrap_on_success);
  const bool preload = c.algorithm == Algorithm::ddpgfd;

  std::vector<std::string> header{
      "ddpgfd metrics",
      "config_hash " + config_hash(c),
      "algorithm " + to_string(c.algorithm) + " reward_mode " + env::to_string(c.reward_mode) + " variant " +
          env::to_string(c.env.variant) + " seed " + std::to_string(c.seed),
      "audit preload_transitions " + std::to_string(preload ? demo_rows.size() : 0) + " demo_episodes " +
          std::to_string(demos.size()) + " eps_demo " + std::to_string(c.replay.eps_demo),
  };
  MetricsWriter writer(result.metrics_path, header);

  auto emit = [&](MetricsRow row, const EvalResult& ev) {
    row.wall_seconds = elapsed();
    row.eval_return_mean = ev.return_mean;
    row.eval_return_p10 = ev.return_p10;
    row.eval_return_p90 = ev.return_p90;
    row.eval_success_rate = ev.success_rate;
    row.mean_episode_length = ev.mean_length;
    writer.write(row);
    result.rows.push_back(row);
    if (log) {
      *log << "[" << to_string(c.algorithm) << " seed " << c.seed << "] steps " << row.env_steps << " success "
           << ev.success_rate << " eval_return " << ev.return_mean << " len " << ev.mean_length << "\n";
    }
  };

  if (c.algorithm == Algorithm::bc) {
    auto rng = stream_rng(c.seed, 3);
    auto bc = demo::behavioral_cloning(demos, task.action_bounds(), c.bc, rng);
    result.actor = std::move(bc.policy);
    result.final_eval = evaluate(task, result.actor, c.eval_episodes);
    MetricsRow row;
    row.critic_loss_mean = bc.validation_loss.empty() ? bc.train_loss.back() : bc.validation_loss.back();
    emit(row, result.final_eval);
    write_atomically(result.checkpoint_path,
                     json{{"config_hash", config_hash(c)},
                          {"env_steps", 0},
                          {"actor", nn::params_to_json(result.actor)},
                          {"bc_train_loss", bc.train_loss},
                          {"bc_validation_loss", bc.validation_loss}}
                             .dump() + "\n");
    return result;
  }

  auto init_rng = stream_rng(c.seed, 1);
  auto rng = stream_rng(c.seed, 2);
  agent::DdpgfdAgent agent(c.agent, task.observation_dim(), task.action_bounds(), init_rng);
  replay::ReplayBuffer buffer(c.replay);
  if (preload) buffer.preload_demos(demo_rows);

  agent::LossTotals last_totals;
  double train_return_sum = 0.0;
  int train_episodes = 0;
  auto checkpoint = [&](std::uint64_t steps) {
    write_atomically(result.checkpoint_path, json{{"config_hash", config_hash(c)},
                                                  {"env_steps", steps},
                                                  {"actor", nn::params_to_json(agent.nets().actor)},
                                                  {"critic", nn::params_to_json(agent.nets().critic)},
                                                  {"agent_state", agent.state_to_json()}}
                                                 .dump() + "\n");
  };
  auto evaluation_row = [&](std::uint64_t steps) {
    const auto& totals = agent.loss_totals();
    MetricsRow row;
    row.env_steps = steps;
    row.train_return_mean = train_episodes ? train_return_sum / train_episodes : 0.0;
    if (const auto n = totals.updates - last_totals.updates; n > 0) {
      row.critic_loss_mean = (totals.critic_loss - last_totals.critic_loss) / static_cast<double>(n);
      row.actor_loss_mean = (totals.actor_loss - last_totals.actor_loss) / static_cast<double>(n);
      row.demo_fraction = (totals.demo_fraction - last_totals.demo_fraction) / static_cast<double>(n);
    }
    last_totals = totals;
    train_return_sum = 0.0;
    train_episodes = 0;
    result.final_eval = evaluate(task, agent.nets().actor, c.eval_episodes);
    emit(row, result.final_eval);
    checkpoint(steps);
  };

  evaluation_row(0);
  std::uint64_t steps = 0;
  std::uint64_t episode_index = 0;
  std::optional<agent::ActiveEpisode> episode;
  while (steps < c.total_env_steps) {
    if (!episode) episode = agent.begin_episode(task, training_episode_seed(c.seed, episode_index++));
    const bool ended = agent.step_and_learn(task, *episode, buffer, rng);
    ++steps;
    if (ended) {
      train_return_sum += episode->metrics.episode_return;
      ++train_episodes;
      episode.reset();
    }
    if (steps % c.eval_every == 0 || steps == c.total_env_steps) evaluation_row(steps);
  }
  result.actor = agent.nets().actor;
  return result;
}

nn::MLPParams load_checkpoint_actor(const std::filesystem::path& checkpoint) {
  std::ifstream in(checkpoint);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + checkpoint.string());
  try {
    return nn::params_from_json(json::parse(in).at("actor"));
  } catch (const json::exception& e) {
    throw std::runtime_error(checkpoint.string() + ": " + e.what());
  }
}

std::vector<AblationEntry> ablation_demo_count(const ExperimentConfig& base, const std::vector<std::size_t>& counts,
                                              const std::filesystem::path& out_dir, std::ostream* log) {
  if (counts.empty()) throw std::invalid_argument("ablation needs at least one demo count");
  if (base.algorithm != Algorithm::ddpgfd) throw std::invalid_argument("ablation runs the ddpgfd algorithm");
  if (!base.demos) throw std::invalid_argument("ablation requires a demos file");
  const auto available = demo::read_demo_file(*base.demos).episodes.size();
  const auto largest = *std::max_element(counts.begin(), counts.end());
  if (largest > available) {
    throw std::invalid_argument("demo file holds " + std::to_string(available) + " episodes, ablation needs " +
                                std::to_string(largest));
  }
  for (auto k : counts) {
    if (k == 0) throw std::invalid_argument("ablation demo counts must be positive");
  }
  std::filesystem::create_directories(out_dir);
  std::vector<AblationEntry> entries;
  for (auto k : counts) {
    ExperimentConfig c = base;
    c.demo_count = k;
    const auto dir = out_dir / ("demos_" + std::to_string(k));
    auto r = run(c, dir, log);
    entries.push_back({k, r.rows.back().eval_success_rate, r.rows.back().eval_return_mean, r.metrics_path});
  }
  std::string table = "demo_count,final_success,final_return_mean\n";
  for (const auto& e : entries) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g\n", e.count, e.final_success, e.final_return_mean);
    table += buf;
  }
  write_atomically(out_dir / "ablation.csv", table);
  return entries;
}

std::vector<CurveRow> export_curves(const std::vector<std::filesystem::path>& metrics_files) {
  if (metrics_files.empty()) throw std::invalid_argument("export needs at least one metrics file");
  std::vector<MetricsFile> files;
  for (const auto& p : metrics_files) {
    files.push_back(read_metrics(p));
    if (files.back().rows.empty()) throw std::invalid_argument("metrics file has no rows: " + p.string());
  }
  const auto& grid = files.front().rows;
  for (std::size_t f = 1; f < files.size(); ++f) {
    const auto& rows = files[f].rows;
    bool same = rows.size() == grid.size();
    for (std::size_t i = 0; same && i < rows.size(); ++i) same = rows[i].env_steps == grid[i].env_steps;
    if (!same) {
      throw std::invalid_argument("evaluation grid of " + metrics_files[f].string() + " differs from " +
                                  metrics_files.front().string());
    }
  }
  std::vector<CurveRow> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> succ, ret;
    for (const auto& f : files) {
      succ.push_back(f.rows[i].eval_success_rate);
      ret.push_back(f.rows[i].eval_return_mean);
    }
    CurveRow r;
    r.env_steps = grid[i].env_steps;
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    r.success_mean = mean(succ);
    r.success_p10 = percentile(succ, 0.1);
    r.success_p90 = percentile(succ, 0.9);
    r.return_mean = mean(ret);
    r.return_p10 = percentile(ret, 0.1);
    r.return_p90 = percentile(ret, 0.9);
    out.push_back(r);
  }
  return out;
}

void write_curves(const std::vector<CurveRow>& rows, const std::filesystem::path& out) {
  std::string text = "env_steps,success_mean,success_p10,success_p90,return_mean,return_p10,return_p90\n";
  for (const auto& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%llu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<unsigned long long>(r.env_steps), r.success_mean, r.success_p10, r.success_p90,
                  r.return_mean, r.return_p10, r.return_p90);
    text += buf;
  }
  write_atomically(out, text);
}

std::vector<demo::DemoEpisode> record_expert_demos(const ExperimentConfig& config, std::size_t count,
                                                   const std::filesystem::path& out) {
  ExperimentConfig c = config;
  c.resolve();
  const env::InsertionTask task(c.env);
  const auto expert = c.expert;
  demo::Policy policy = [&task, expert](const env::EnvState& s, const env::Observation&, std::mt19937_64& rng) {
    return demo::scripted_expert(task, s, expert, rng);
  };
  demo::RecordOptions options;
  options.base_seed = demonstration_seed(0);
  auto rng = stream_rng(c.seed, 4);
  return demo::record_episodes(task, policy, count, out, options, rng);
}

}  // namespace ddpgfd::harness
