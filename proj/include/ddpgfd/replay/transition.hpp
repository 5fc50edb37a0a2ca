#pragma once

#include <cstddef>
#include <vector>

namespace ddpgfd::replay {

// One replay record. A k-step transition carries the discounted reward sum
// over k steps and the bootstrap factor gamma^k (0 after a terminal state).
struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward_sum = 0.0;
  double discount_pow = 0.0;
  std::vector<double> next_state;
  bool is_demo = false;
  int n_steps = 1;

  friend bool operator==(const Transition&, const Transition&) = default;
};

// One environment step of an episode. terminal marks a true MDP terminal
// (success); an episode cut by the step limit ends with terminal = false.
struct EpisodeStep {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;

  friend bool operator==(const EpisodeStep&, const EpisodeStep&) = default;
};

}  // namespace ddpgfd::replay
