#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "ddpgfd/replay/transition.hpp"

namespace ddpgfd::replay {

Transition one_step_transition(const EpisodeStep& step, double gamma, bool is_demo);

// Streaming forward-view n-step assembly for one episode at a time. push()
// emits the transition starting n-1 steps back once the window is full;
// flush() emits the truncated tail at the end of the episode.
class NStepAssembler {
 public:
  NStepAssembler(int n, double gamma, bool is_demo = false);

  std::vector<Transition> push(const EpisodeStep& step, std::int64_t episode_id);
  std::vector<Transition> flush();

  int n() const { return n_; }
  bool empty() const { return window_.empty(); }

 private:
  Transition make(std::size_t length) const;

  int n_;
  double gamma_;
  bool is_demo_;
  std::deque<EpisodeStep> window_;
  std::int64_t episode_id_ = -1;
};

// All n-step transitions of a complete episode: exactly one per step.
std::vector<Transition> assemble_nstep(const std::vector<EpisodeStep>& episode, int n, double gamma,
                                       bool is_demo = false);

}  // namespace ddpgfd::replay
