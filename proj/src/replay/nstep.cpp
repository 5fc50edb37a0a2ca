#include "ddpgfd/replay/nstep.hpp"

#include <cmath>
#include <stdexcept>

namespace ddpgfd::replay {

Transition one_step_transition(const EpisodeStep& step, double gamma, bool is_demo) {
  return Transition{step.obs, step.action, step.reward, step.terminal ? 0.0 : gamma,
                    step.next_obs, is_demo, 1};
}

NStepAssembler::NStepAssembler(int n, double gamma, bool is_demo) : n_(n), gamma_(gamma), is_demo_(is_demo) {
  if (n < 1) throw std::invalid_argument("n-step horizon must be at least 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("discount must lie in [0, 1]");
}

Transition NStepAssembler::make(std::size_t length) const {
  Transition t;
  t.state = window_.front().obs;
  t.action = window_.front().action;
  double discount = 1.0;
  for (std::size_t i = 0; i < length; ++i) {
    t.reward_sum += discount * window_[i].reward;
    discount *= gamma_;
  }
  const EpisodeStep& last = window_[length - 1];
  t.next_state = last.next_obs;
  t.discount_pow = last.terminal ? 0.0 : discount;
  t.is_demo = is_demo_;
  // Truncated tails keep the stream's horizon tag; their actual length is
  // carried by discount_pow.
  t.n_steps = n_;
  return t;
}

std::vector<Transition> NStepAssembler::push(const EpisodeStep& step, std::int64_t episode_id) {
  if (!window_.empty() && episode_id != episode_id_) {
    throw std::invalid_argument("n-step window mixes episodes " + std::to_string(episode_id_) + " and " +
                                std::to_string(episode_id));
  }
  if (!window_.empty() && window_.back().terminal) {
    throw std::invalid_argument("n-step window received a step after a terminal step");
  }
  episode_id_ = episode_id;
  window_.push_back(step);
  std::vector<Transition> out;
  if (window_.size() == static_cast<std::size_t>(n_)) {
    out.push_back(make(window_.size()));
    window_.pop_front();
  }
  return out;
}

std::vector<Transition> NStepAssembler::flush() {
  std::vector<Transition> out;
  while (!window_.empty()) {
    out.push_back(make(window_.size()));
    window_.pop_front();
  }
  episode_id_ = -1;
  return out;
}

std::vector<Transition> assemble_nstep(const std::vector<EpisodeStep>& episode, int n, double gamma,
                                       bool is_demo) {
  NStepAssembler assembler(n, gamma, is_demo);
  std::vector<Transition> out;
  for (const auto& step : episode) {
    for (auto& t : assembler.push(step, 0)) out.push_back(std::move(t));
  }
  for (auto& t : assembler.flush()) out.push_back(std::move(t));
  return out;
}

}  // namespace ddpgfd::replay
