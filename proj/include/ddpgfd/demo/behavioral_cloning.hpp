#pragma once

#include <random>
#include <vector>

#include "ddpgfd/demo/demo_file.hpp"
#include "ddpgfd/nn/mlp.hpp"

namespace ddpgfd::demo {

struct BcConfig {
  std::vector<std::size_t> hidden{64, 64};
  int epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double validation_fraction = 0.1;  // held out by episode
};

struct BcResult {
  nn::MLPParams policy;  // tanh output in normalised action units
  std::vector<double> train_loss;       // per epoch
  std::vector<double> validation_loss;  // per epoch, empty without a held-out split
};

// Supervised regression of the normalised demonstrated actions on the
// observations (mean squared error).
BcResult behavioral_cloning(const std::vector<DemoEpisode>& episodes, const std::vector<double>& action_bounds,
                            const BcConfig& config, std::mt19937_64& rng);

double bc_loss(const nn::MLPParams& policy, const std::vector<const replay::EpisodeStep*>& steps,
               const std::vector<double>& action_bounds);

}  // namespace ddpgfd::demo
