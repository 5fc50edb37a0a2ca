#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddpgfd/env/insertion.hpp"
#include "ddpgfd/nn/adam.hpp"
#include "ddpgfd/nn/mlp.hpp"
#include "ddpgfd/replay/nstep.hpp"
#include "ddpgfd/replay/replay_buffer.hpp"

namespace ddpgfd::agent {

struct AgentConfig {
  double gamma = 0.99;
  int n = 5;
  double lambda1 = 0.5;   // n-step loss weight
  double lambda2 = 1e-5;  // L2 weight
  double lambda3 = 1.0;   // actor-gradient priority weight
  // Weight of the batch mean of ||a||^2 (normalised actions) in the actor
  // loss. Keeps the tanh output off its bounds, where its gradient vanishes.
  double action_l2 = 0.0;
  double noise_sigma = 0.2;  // Gaussian exploration std in normalised action units
  int target_period = 500;   // learn steps between hard target syncs
  int updates_per_env_step = 40;
  int batch_size = 64;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  double final_layer_scale = 1e-3;
  // Reaching the goal ends the episode but targets still bootstrap from the
  // goal state. For rewards without a success bonus (shaped), where an
  // absorbing zero-value goal would make hovering beside it optimal.
  bool bootstrap_on_success = false;

  void validate() const;
};

struct AgentNets {
  nn::MLPParams actor;
  nn::MLPParams critic;
  nn::MLPParams target_actor;
  nn::MLPParams target_critic;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  std::uint64_t env_step_counter = 0;
  std::uint64_t learn_step_counter = 0;
};

// Rows of a training batch in network units (actions normalised by the
// action bounds).
struct TrainingBatch {
  std::vector<const replay::Transition*> rows;
  std::vector<double> weights;
};

struct LossAndGrad {
  double loss = 0.0;
  nn::Gradients grads;
  std::vector<double> td_errors;  // critic loss only
};

struct TrainStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double demo_fraction = 0.0;
  std::vector<double> priorities;
  std::vector<std::size_t> slots;
};

struct EpisodeMetrics {
  double episode_return = 0.0;
  int length = 0;
  bool success = false;
  double critic_loss = 0.0;  // means over this episode's learning updates
  double actor_loss = 0.0;
  double demo_fraction = 0.0;
  int updates = 0;
};

// Running sums over every learning update since construction.
struct LossTotals {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double demo_fraction = 0.0;
  std::uint64_t updates = 0;
};

// An exploring episode in progress.
struct ActiveEpisode {
  env::EnvState state;
  env::Observation obs;
  replay::NStepAssembler nstep;
  EpisodeMetrics metrics;
  std::uint64_t seed = 0;
};

class DdpgfdAgent {
 public:
  DdpgfdAgent(AgentConfig config, std::size_t obs_dim, std::vector<double> action_bounds,
              std::mt19937_64& init_rng);

  const AgentConfig& config() const { return config_; }
  AgentNets& nets() { return nets_; }
  const AgentNets& nets() const { return nets_; }
  const std::vector<double>& action_bounds() const { return action_bounds_; }
  std::size_t obs_dim() const { return obs_dim_; }
  const LossTotals& loss_totals() const { return totals_; }

  // pi(obs) (+ Gaussian noise when exploring), clipped and scaled to the
  // physical action bounds.
  env::Action act(const env::Observation& obs, bool explore, std::mt19937_64& rng) const;

  // y = reward_sum + discount_pow * Q'(s', pi'(s')).
  std::vector<double> critic_targets(const std::vector<const replay::Transition*>& rows) const;

  // Weighted critic loss: mean_i w_i c_i (y_i - Q(s_i, a_i))^2 + lambda2 * 0.5 ||theta_Q||^2
  // where c_i = lambda1 for n-step rows and 1 otherwise. Targets are held fixed.
  LossAndGrad critic_loss(const nn::MLPParams& critic, const TrainingBatch& batch,
                          const std::vector<double>& targets) const;
  // Actor loss: -mean_i w_i Q(s_i, pi(s_i)) + lambda2 * 0.5 ||theta_pi||^2.
  LossAndGrad actor_loss(const nn::MLPParams& actor, const nn::MLPParams& critic,
                         const TrainingBatch& batch) const;
  // Per-row ||grad_a Q(s_i, a_i)||^2 at the stored actions.
  std::vector<double> action_grad_sq(const std::vector<const replay::Transition*>& rows) const;

  TrainStats train_minibatch(replay::ReplayBuffer& buffer, std::mt19937_64& rng);

  ActiveEpisode begin_episode(const env::InsertionTask& task, std::uint64_t episode_seed) const;
  // One exploring env step into the buffer followed by updates_per_env_step
  // learning updates. Returns true once the episode has ended; its metrics
  // then hold the loss means over the episode's updates.
  bool step_and_learn(const env::InsertionTask& task, ActiveEpisode& episode, replay::ReplayBuffer& buffer,
                      std::mt19937_64& rng);
  // Whole episode of step_and_learn.
  EpisodeMetrics run_episode_and_learn(const env::InsertionTask& task, std::uint64_t episode_seed,
                                       replay::ReplayBuffer& buffer, std::mt19937_64& rng);

  // Counters and optimizer moments; network weights go through nn checkpoints.
  nlohmann::json state_to_json() const;
  void state_from_json(const nlohmann::json& doc);

 private:
  nn::Tensor stack_states(const std::vector<const replay::Transition*>& rows, bool next) const;
  nn::Tensor critic_input(const nn::Tensor& states, const nn::Tensor& actions) const;

  AgentConfig config_;
  std::size_t obs_dim_;
  std::vector<double> action_bounds_;
  AgentNets nets_;
  LossTotals totals_;
};

}  // namespace ddpgfd::agent
