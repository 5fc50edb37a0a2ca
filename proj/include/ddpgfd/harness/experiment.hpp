#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddpgfd/harness/config.hpp"
#include "ddpgfd/nn/mlp.hpp"

namespace ddpgfd::harness {

// Deterministic policy used for evaluation.
using EvalPolicy = std::function<env::Action(const env::EnvState&, const env::Observation&)>;

struct EvalResult {
  double return_mean = 0.0;
  double return_p10 = 0.0;
  double return_p90 = 0.0;
  double success_rate = 0.0;
  double mean_length = 0.0;
  double mean_success_length = 0.0;  // 0 when nothing succeeded
  std::vector<double> returns;
  std::vector<int> lengths;
  std::vector<bool> successes;
};

// Rollouts on seeds evaluation_seed(0) .. evaluation_seed(episodes - 1).
EvalResult evaluate(const env::InsertionTask& task, const EvalPolicy& policy, int episodes);
// Noise-free actor (tanh output scaled by the action bounds).
EvalResult evaluate(const env::InsertionTask& task, const nn::MLPParams& actor, int episodes);
EvalPolicy actor_policy(const nn::MLPParams& actor, std::vector<double> action_bounds);

// Linear-interpolation percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

struct MetricsRow {
  std::uint64_t env_steps = 0;
  double wall_seconds = 0.0;
  double train_return_mean = 0.0;
  double eval_return_mean = 0.0;
  double eval_return_p10 = 0.0;
  double eval_return_p90 = 0.0;
  double eval_success_rate = 0.0;
  double mean_episode_length = 0.0;
  double critic_loss_mean = 0.0;
  double actor_loss_mean = 0.0;
  double demo_fraction = 0.0;
};

inline constexpr const char* kMetricsColumns =
    "env_steps,wall_seconds,train_return_mean,eval_return_mean,eval_return_p10,eval_return_p90,"
    "eval_success_rate,mean_episode_length,critic_loss_mean,actor_loss_mean,demo_fraction";

std::string format_row(const MetricsRow& row);
MetricsRow parse_row(const std::string& line);

struct MetricsFile {
  std::vector<std::string> header;  // comment lines without the leading "# "
  std::vector<MetricsRow> rows;
};

// Rows are read up to the last complete line, so a file cut off mid-run is
// still usable.
MetricsFile read_metrics(const std::filesystem::path& path);

struct RunResult {
  std::vector<MetricsRow> rows;
  nn::MLPParams actor;
  EvalResult final_eval;
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_path;
};

// Runs one experiment into out_dir: metrics.csv, resolved_config.json and
// checkpoint.json (overwritten at every evaluation). Progress lines go to
// `log` when given.
RunResult run(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

// Loads the actor from a checkpoint written by run().
nn::MLPParams load_checkpoint_actor(const std::filesystem::path& checkpoint);

struct AblationEntry {
  std::size_t count = 0;
  double final_success = 0.0;
  double final_return_mean = 0.0;
  std::filesystem::path metrics_path;
};

// One run per demonstration count, each using the first k episodes of the
// config's demo file, in out_dir/demos_<k>. Writes out_dir/ablation.csv.
std::vector<AblationEntry> ablation_demo_count(const ExperimentConfig& base, const std::vector<std::size_t>& counts,
                                              const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct CurveRow {
  std::uint64_t env_steps = 0;
  double success_mean = 0.0, success_p10 = 0.0, success_p90 = 0.0;
  double return_mean = 0.0, return_p10 = 0.0, return_p90 = 0.0;
};

// Aligns metrics files on env_steps and computes cross-file statistics of
// the eval success rate and eval mean return.
std::vector<CurveRow> export_curves(const std::vector<std::filesystem::path>& metrics_files);
void write_curves(const std::vector<CurveRow>& rows, const std::filesystem::path& out);

// Records `count` scripted-expert episodes for the config's environment.
std::vector<demo::DemoEpisode> record_expert_demos(const ExperimentConfig& config, std::size_t count,
                                                   const std::filesystem::path& out);

}  // namespace ddpgfd::harness
