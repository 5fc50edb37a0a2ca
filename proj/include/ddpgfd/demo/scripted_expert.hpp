#pragma once

#include <random>

#include "ddpgfd/env/insertion.hpp"

namespace ddpgfd::demo {

struct ExpertConfig {
  // Gaussian action noise, as a fraction of each action bound.
  double jitter = 0.1;
  // Cruise speed as a fraction of the linear speed bound.
  double speed_fraction = 0.5;
  // Fraction of the remaining waypoint error closed per step.
  double gain = 0.5;
  // Height of the tip sites above the opening before descending.
  double hover_height = 0.015;
};

// Waypoint controller standing in for a human demonstrator: move above the
// opening, align, then descend to the goal.
env::Action scripted_expert(const env::InsertionTask& task, const env::EnvState& state,
                            const ExpertConfig& config, std::mt19937_64& rng);

}  // namespace ddpgfd::demo
