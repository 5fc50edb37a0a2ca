#include "ddpgfd/demo/behavioral_cloning.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "ddpgfd/nn/adam.hpp"

namespace ddpgfd::demo {

namespace {

void fill_batch(const std::vector<const replay::EpisodeStep*>& steps, std::size_t begin, std::size_t end,
                const std::vector<double>& bounds, nn::Tensor& x, nn::Tensor& y) {
  const std::size_t n = end - begin;
  const std::size_t od = steps[begin]->obs.size();
  const std::size_t ad = bounds.size();
  x = nn::Tensor::matrix(n, od);
  y = nn::Tensor::matrix(n, ad);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = *steps[begin + i];
    std::copy(s.obs.begin(), s.obs.end(), x.data() + i * od);
    for (std::size_t k = 0; k < ad; ++k) y[i * ad + k] = std::clamp(s.action[k] / bounds[k], -1.0, 1.0);
  }
}

}  // namespace

double bc_loss(const nn::MLPParams& policy, const std::vector<const replay::EpisodeStep*>& steps,
               const std::vector<double>& action_bounds) {
  if (steps.empty()) return 0.0;
  nn::Tensor x, y;
  fill_batch(steps, 0, steps.size(), action_bounds, x, y);
  const nn::Tensor pred = nn::mlp_predict(policy, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - y[i]) * (pred[i] - y[i]);
  return sum / static_cast<double>(steps.size());
}

BcResult behavioral_cloning(const std::vector<DemoEpisode>& episodes, const std::vector<double>& action_bounds,
                            const BcConfig& config, std::mt19937_64& rng) {
  std::vector<std::size_t> order;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    if (!episodes[e].steps.empty()) order.push_back(e);
  }
  if (order.empty()) throw std::invalid_argument("behavioral_cloning: no demonstration steps");
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(config.validation_fraction * static_cast<double>(order.size()));
  if (n_val >= order.size()) n_val = order.size() - 1;

  std::vector<const replay::EpisodeStep*> train, val;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const auto& s : episodes[order[i]].steps) (i < n_val ? val : train).push_back(&s);
  }

  const std::size_t obs_dim = train.front()->obs.size();
  std::vector<std::size_t> widths{obs_dim};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(action_bounds.size());

  BcResult result;
  result.policy = nn::make_mlp(widths, nn::Activation::relu, nn::Activation::tanh, rng);
  auto opt = nn::AdamState::for_params(result.policy, config.learning_rate);

  nn::Tensor x, y;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < train.size(); b += config.batch_size) {
      const std::size_t end = std::min(train.size(), b + config.batch_size);
      const double n = static_cast<double>(end - b);
      fill_batch(train, b, end, action_bounds, x, y);
      auto fwd = nn::mlp_forward(result.policy, x);
      nn::Tensor dout = fwd.output;
      for (std::size_t i = 0; i < dout.size(); ++i) {
        const double diff = fwd.output[i] - y[i];
        epoch_sum += diff * diff;
        dout[i] = 2.0 * diff / n;
      }
      auto back = nn::mlp_backward(result.policy, fwd.cache, dout);
      nn::adam_step(result.policy, back.grads, opt);
    }
    result.train_loss.push_back(epoch_sum / static_cast<double>(train.size()));
    if (!val.empty()) result.validation_loss.push_back(bc_loss(result.policy, val, action_bounds));
  }
  return result;
}

}  // namespace ddpgfd::demo
