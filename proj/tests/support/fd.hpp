#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "ddpgfd/nn/mlp.hpp"

namespace testing_support {

// Relative error with an absolute floor so near-zero entries compare sanely.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central finite differences of loss() with respect to every parameter;
// returns the largest relative error against the analytic gradients.
inline double max_fd_error(ddpgfd::nn::MLPParams& params, const ddpgfd::nn::Gradients& analytic,
                           const std::function<double()>& loss, double h = 1e-6) {
  double worst = 0.0;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto check = [&](ddpgfd::nn::Tensor& p, const ddpgfd::nn::Tensor& g) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + h;
        const double up = loss();
        p[i] = saved - h;
        const double down = loss();
        p[i] = saved;
        worst = std::max(worst, rel_error((up - down) / (2 * h), g[i]));
      }
    };
    check(params.layers[l].weight, analytic.layers[l].weight);
    check(params.layers[l].bias, analytic.layers[l].bias);
  }
  return worst;
}

inline ddpgfd::nn::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double scale = 1.0) {
  ddpgfd::nn::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

}  // namespace testing_support
