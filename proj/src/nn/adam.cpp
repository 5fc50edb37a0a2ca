#include "ddpgfd/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ddpgfd::nn {

AdamState AdamState::for_params(const MLPParams& params, double learning_rate, double beta1,
                                double beta2, double epsilon) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
  }
  AdamState s;
  s.first_moment = Gradients::zeros_like(params);
  s.second_moment = Gradients::zeros_like(params);
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(MLPParams& params, const Gradients& grads, AdamState& state) {
  if (!grads.matches(params) || !state.first_moment.matches(params) ||
      !state.second_moment.matches(params)) {
    throw std::invalid_argument("adam_step: gradient/moment shapes do not match parameters");
  }
  for (std::size_t li = 0; li < grads.layers.size(); ++li) {
    const auto& g = grads.layers[li];
    if (!g.weight.all_finite() || !g.bias.all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient in layer " + std::to_string(li) +
                               " at optimizer step " + std::to_string(state.step_count));
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;

  auto update = [&](Tensor& p, const Tensor& g, Tensor& m, Tensor& v) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    auto& p = params.layers[li];
    const auto& g = grads.layers[li];
    auto& m = state.first_moment.layers[li];
    auto& v = state.second_moment.layers[li];
    update(p.weight, g.weight, m.weight, v.weight);
    update(p.bias, g.bias, m.bias, v.bias);
  }
}

}  // namespace ddpgfd::nn
