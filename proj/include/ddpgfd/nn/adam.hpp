#pragma once

#include <cstdint>

#include "ddpgfd/nn/mlp.hpp"

namespace ddpgfd::nn {

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MLPParams& params, double learning_rate, double beta1 = 0.9,
                              double beta2 = 0.999, double epsilon = 1e-8);
};

// Bias-corrected Adam. Throws std::runtime_error on a non-finite gradient
// entry, leaving params and state untouched.
void adam_step(MLPParams& params, const Gradients& grads, AdamState& state);

}  // namespace ddpgfd::nn
