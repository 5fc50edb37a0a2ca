#include "ddpgfd/agent/ddpgfd_agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ddpgfd/nn/checkpoint.hpp"

namespace ddpgfd::agent {

using nn::Tensor;

void AgentConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid agent config: ") + what);
  };
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(n >= 1, "n must be at least 1");
  require(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0 && action_l2 >= 0.0, "loss weights must be non-negative");
  require(noise_sigma >= 0.0, "noise_sigma must be non-negative");
  require(target_period > 0, "target_period must be positive");
  require(updates_per_env_step >= 0, "updates_per_env_step must be non-negative");
  require(batch_size > 0, "batch_size must be positive");
  require(actor_lr > 0.0 && critic_lr > 0.0, "learning rates must be positive");
}

namespace {

std::vector<std::size_t> widths(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

DdpgfdAgent::DdpgfdAgent(AgentConfig config, std::size_t obs_dim, std::vector<double> action_bounds,
                         std::mt19937_64& init_rng)
    : config_(std::move(config)), obs_dim_(obs_dim), action_bounds_(std::move(action_bounds)) {
  config_.validate();
  const std::size_t act_dim = action_bounds_.size();
  nets_.actor = nn::make_mlp(widths(obs_dim, config_.actor_hidden, act_dim), nn::Activation::relu,
                             nn::Activation::tanh, init_rng, config_.final_layer_scale);
  nets_.critic = nn::make_mlp(widths(obs_dim + act_dim, config_.critic_hidden, 1), nn::Activation::relu,
                              nn::Activation::identity, init_rng, config_.final_layer_scale);
  nets_.target_actor = nets_.actor;
  nets_.target_critic = nets_.critic;
  nets_.actor_opt = nn::AdamState::for_params(nets_.actor, config_.actor_lr);
  nets_.critic_opt = nn::AdamState::for_params(nets_.critic, config_.critic_lr);
}

env::Action DdpgfdAgent::act(const env::Observation& obs, bool explore, std::mt19937_64& rng) const {
  if (obs.size() != obs_dim_) {
    throw std::invalid_argument("observation has " + std::to_string(obs.size()) + " entries, actor expects " +
                                std::to_string(obs_dim_));
  }
  const Tensor out = nn::mlp_predict(nets_.actor, Tensor::vector(obs));
  env::Action a(out.size());
  std::normal_distribution<double> noise(0.0, config_.noise_sigma);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double v = out[i];
    if (explore && config_.noise_sigma > 0.0) v += noise(rng);
    a[i] = std::clamp(v, -1.0, 1.0) * action_bounds_[i];
  }
  return a;
}

Tensor DdpgfdAgent::stack_states(const std::vector<const replay::Transition*>& rows, bool next) const {
  Tensor s = Tensor::matrix(rows.size(), obs_dim_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& src = next ? rows[r]->next_state : rows[r]->state;
    if (src.size() != obs_dim_) throw std::invalid_argument("transition observation dimension mismatch");
    std::copy(src.begin(), src.end(), s.row(r).begin());
  }
  return s;
}

Tensor DdpgfdAgent::critic_input(const Tensor& states, const Tensor& actions) const {
  const std::size_t b = states.rows();
  const std::size_t act_dim = action_bounds_.size();
  Tensor in = Tensor::matrix(b, obs_dim_ + act_dim);
  for (std::size_t r = 0; r < b; ++r) {
    auto dst = in.row(r);
    auto s = states.row(r);
    auto a = actions.row(r);
    std::copy(s.begin(), s.end(), dst.begin());
    std::copy(a.begin(), a.end(), dst.begin() + static_cast<std::ptrdiff_t>(obs_dim_));
  }
  return in;
}

namespace {

Tensor stored_actions(const std::vector<const replay::Transition*>& rows, const std::vector<double>& bounds) {
  Tensor a = Tensor::matrix(rows.size(), bounds.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r]->action.size() != bounds.size()) throw std::invalid_argument("transition action dimension mismatch");
    for (std::size_t j = 0; j < bounds.size(); ++j) a.at(r, j) = rows[r]->action[j] / bounds[j];
  }
  return a;
}

}  // namespace

std::vector<double> DdpgfdAgent::critic_targets(const std::vector<const replay::Transition*>& rows) const {
  const Tensor next = stack_states(rows, true);
  const Tensor next_actions = nn::mlp_predict(nets_.target_actor, next);
  const Tensor q_next = nn::mlp_predict(nets_.target_critic, critic_input(next, next_actions));
  std::vector<double> y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double bootstrap = rows[r]->discount_pow == 0.0 ? 0.0 : rows[r]->discount_pow * q_next[r];
    y[r] = rows[r]->reward_sum + bootstrap;
  }
  return y;
}

LossAndGrad DdpgfdAgent::critic_loss(const nn::MLPParams& critic, const TrainingBatch& batch,
                                     const std::vector<double>& targets) const {
  const std::size_t b = batch.rows.size();
  const Tensor in = critic_input(stack_states(batch.rows, false), stored_actions(batch.rows, action_bounds_));
  const auto fw = nn::mlp_forward(critic, in);
  LossAndGrad out;
  out.td_errors.resize(b);
  Tensor dq = Tensor::matrix(b, 1);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t r = 0; r < b; ++r) {
    const double delta = targets[r] - fw.output[r];
    const double c = batch.weights[r] * (batch.rows[r]->n_steps > 1 ? config_.lambda1 : 1.0);
    out.td_errors[r] = delta;
    out.loss += inv_b * c * delta * delta;
    dq[r] = -2.0 * inv_b * c * delta;
  }
  out.grads = nn::mlp_backward(critic, fw.cache, dq).grads;
  out.loss += config_.lambda2 * nn::l2_penalty(critic);
  out.grads.add_scaled(nn::l2_grad(critic), config_.lambda2);
  return out;
}

LossAndGrad DdpgfdAgent::actor_loss(const nn::MLPParams& actor, const nn::MLPParams& critic,
                                    const TrainingBatch& batch) const {
  const std::size_t b = batch.rows.size();
  const std::size_t act_dim = action_bounds_.size();
  const Tensor states = stack_states(batch.rows, false);
  const auto actor_fw = nn::mlp_forward(actor, states);
  const auto critic_fw = nn::mlp_forward(critic, critic_input(states, actor_fw.output));
  LossAndGrad out;
  Tensor dq = Tensor::matrix(b, 1);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t r = 0; r < b; ++r) {
    out.loss -= inv_b * batch.weights[r] * critic_fw.output[r];
    dq[r] = -inv_b * batch.weights[r];
  }
  const auto critic_bw = nn::mlp_backward(critic, critic_fw.cache, dq);
  // dL/da = the action columns of the critic's input gradient.
  Tensor da = Tensor::matrix(b, act_dim);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t j = 0; j < act_dim; ++j) {
      const double a = actor_fw.output.at(r, j);
      out.loss += inv_b * config_.action_l2 * a * a;
      da.at(r, j) = critic_bw.input_grad.at(r, obs_dim_ + j) + 2.0 * inv_b * config_.action_l2 * a;
    }
  }
  out.grads = nn::mlp_backward(actor, actor_fw.cache, da).grads;
  out.loss += config_.lambda2 * nn::l2_penalty(actor);
  out.grads.add_scaled(nn::l2_grad(actor), config_.lambda2);
  return out;
}

std::vector<double> DdpgfdAgent::action_grad_sq(const std::vector<const replay::Transition*>& rows) const {
  const std::size_t b = rows.size();
  const std::size_t act_dim = action_bounds_.size();
  const auto fw = nn::mlp_forward(nets_.critic, critic_input(stack_states(rows, false), stored_actions(rows, action_bounds_)));
  const auto bw = nn::mlp_backward(nets_.critic, fw.cache, Tensor(std::vector<std::size_t>{b, 1}, 1.0));
  std::vector<double> out(b, 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t j = 0; j < act_dim; ++j) {
      const double g = bw.input_grad.at(r, obs_dim_ + j);
      out[r] += g * g;
    }
  }
  return out;
}

TrainStats DdpgfdAgent::train_minibatch(replay::ReplayBuffer& buffer, std::mt19937_64& rng) {
  const auto sampled = buffer.sample(static_cast<std::size_t>(config_.batch_size), rng);
  TrainingBatch batch{sampled.transitions, sampled.weights};

  const auto targets = critic_targets(batch.rows);
  const auto grad_sq = action_grad_sq(batch.rows);
  auto critic = critic_loss(nets_.critic, batch, targets);
  if (!std::isfinite(critic.loss)) {
    std::ostringstream msg;
    msg << "non-finite critic loss at learn step " << nets_.learn_step_counter << " (targets:";
    for (std::size_t i = 0; i < std::min<std::size_t>(4, targets.size()); ++i) msg << ' ' << targets[i];
    msg << ")";
    throw std::runtime_error(msg.str());
  }
  nn::adam_step(nets_.critic, critic.grads, nets_.critic_opt);

  auto actor = actor_loss(nets_.actor, nets_.critic, batch);
  if (!std::isfinite(actor.loss)) {
    throw std::runtime_error("non-finite actor loss at learn step " + std::to_string(nets_.learn_step_counter));
  }
  nn::adam_step(nets_.actor, actor.grads, nets_.actor_opt);

  TrainStats stats;
  stats.critic_loss = critic.loss;
  stats.actor_loss = actor.loss;
  stats.slots = sampled.slots;
  stats.priorities.resize(batch.rows.size());
  const auto& rc = buffer.config();
  std::size_t demos = 0;
  for (std::size_t r = 0; r < batch.rows.size(); ++r) {
    const double delta = critic.td_errors[r];
    const bool demo = batch.rows[r]->is_demo;
    demos += demo ? 1 : 0;
    stats.priorities[r] = delta * delta + config_.lambda3 * grad_sq[r] + rc.eps_per + (demo ? rc.eps_demo : 0.0);
  }
  stats.demo_fraction = static_cast<double>(demos) / static_cast<double>(batch.rows.size());
  buffer.update_priorities(stats.slots, stats.priorities);

  nets_.learn_step_counter += 1;
  totals_.critic_loss += stats.critic_loss;
  totals_.actor_loss += stats.actor_loss;
  totals_.demo_fraction += stats.demo_fraction;
  totals_.updates += 1;
  if (nets_.learn_step_counter % static_cast<std::uint64_t>(config_.target_period) == 0) {
    nn::hard_copy(nets_.actor, nets_.target_actor);
    nn::hard_copy(nets_.critic, nets_.target_critic);
  }
  return stats;
}

ActiveEpisode DdpgfdAgent::begin_episode(const env::InsertionTask& task, std::uint64_t episode_seed) const {
  ActiveEpisode ep{task.reset(episode_seed), {}, replay::NStepAssembler(config_.n, config_.gamma), {}, episode_seed};
  ep.obs = task.observe(ep.state);
  return ep;
}

bool DdpgfdAgent::step_and_learn(const env::InsertionTask& task, ActiveEpisode& ep, replay::ReplayBuffer& buffer,
                                 std::mt19937_64& rng) {
  if (ep.state.done) throw std::logic_error("step_and_learn on a finished episode");
  auto& m = ep.metrics;
  const env::Action a = act(ep.obs, true, rng);
  auto r = task.step(ep.state, a);
  const replay::EpisodeStep step{ep.obs, a, r.reward, r.observation, r.success && !config_.bootstrap_on_success};
  buffer.insert(replay::one_step_transition(step, config_.gamma, false));
  if (config_.n > 1) {
    for (auto& t : ep.nstep.push(step, static_cast<std::int64_t>(ep.seed))) buffer.insert(std::move(t));
  }
  m.episode_return += r.reward;
  m.length += 1;
  nets_.env_step_counter += 1;
  ep.state = std::move(r.state);
  ep.obs = std::move(r.observation);
  if (ep.state.done) {
    m.success = ep.state.success;
    if (config_.n > 1) {
      for (auto& t : ep.nstep.flush()) buffer.insert(std::move(t));
    }
  }

  for (int u = 0; u < config_.updates_per_env_step; ++u) {
    const auto s = train_minibatch(buffer, rng);
    m.critic_loss += s.critic_loss;
    m.actor_loss += s.actor_loss;
    m.demo_fraction += s.demo_fraction;
    m.updates += 1;
  }
  if (ep.state.done && m.updates > 0) {
    m.critic_loss /= m.updates;
    m.actor_loss /= m.updates;
    m.demo_fraction /= m.updates;
  }
  return ep.state.done;
}

EpisodeMetrics DdpgfdAgent::run_episode_and_learn(const env::InsertionTask& task, std::uint64_t episode_seed,
                                                  replay::ReplayBuffer& buffer, std::mt19937_64& rng) {
  ActiveEpisode ep = begin_episode(task, episode_seed);
  while (!step_and_learn(task, ep, buffer, rng)) {
  }
  return ep.metrics;
}

nlohmann::json DdpgfdAgent::state_to_json() const {
  return {{"env_step_counter", nets_.env_step_counter},
          {"learn_step_counter", nets_.learn_step_counter},
          {"actor_opt", nn::adam_to_json(nets_.actor_opt)},
          {"critic_opt", nn::adam_to_json(nets_.critic_opt)},
          {"target_actor", nn::params_to_json(nets_.target_actor)},
          {"target_critic", nn::params_to_json(nets_.target_critic)}};
}

void DdpgfdAgent::state_from_json(const nlohmann::json& doc) {
  nets_.env_step_counter = doc.at("env_step_counter").get<std::uint64_t>();
  nets_.learn_step_counter = doc.at("learn_step_counter").get<std::uint64_t>();
  nets_.actor_opt = nn::adam_from_json(doc.at("actor_opt"), nets_.actor);
  nets_.critic_opt = nn::adam_from_json(doc.at("critic_opt"), nets_.critic);
  nets_.target_actor = nn::params_from_json(doc.at("target_actor"));
  nets_.target_critic = nn::params_from_json(doc.at("target_critic"));
}

}  // namespace ddpgfd::agent
