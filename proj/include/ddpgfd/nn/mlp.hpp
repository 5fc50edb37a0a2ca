#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ddpgfd/nn/tensor.hpp"

namespace ddpgfd::nn {

enum class Activation { identity, relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return weight.dim(1); }
  std::size_t out_dim() const { return weight.dim(0); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MLPParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
  friend bool operator==(const MLPParams&, const MLPParams&) = default;
};

struct LayerGradient {
  Tensor weight;
  Tensor bias;
  friend bool operator==(const LayerGradient&, const LayerGradient&) = default;
};

// Entry-wise gradient with the exact layout of the MLPParams it belongs to.
struct Gradients {
  std::vector<LayerGradient> layers;

  static Gradients zeros_like(const MLPParams& params);
  bool all_finite() const;
  bool matches(const MLPParams& params) const;
  // this += scale * other
  void add_scaled(const Gradients& other, double scale);
  void scale(double factor);
  friend bool operator==(const Gradients&, const Gradients&) = default;
};

// Activation record of one forward pass. Holds the per-layer inputs and
// pre-activations plus the layer shapes it was produced with.
struct ForwardCache {
  std::vector<Tensor> inputs;          // input to each layer, [batch x in]
  std::vector<Tensor> preactivations;  // [batch x out]
  std::vector<std::size_t> layer_dims; // in0, out0, out1, ...
  std::size_t batch = 0;
  bool rank1_input = false;
};

struct ForwardResult {
  Tensor output;
  ForwardCache cache;
};

struct BackwardResult {
  Gradients grads;
  Tensor input_grad;
};

// Builds a fully connected network with the given layer widths. Weights and
// biases are uniform in +-1/sqrt(fan_in); the final layer is further scaled by
// final_layer_scale.
MLPParams make_mlp(const std::vector<std::size_t>& widths, Activation hidden, Activation output,
                   std::mt19937_64& rng, double final_layer_scale = 1.0);

// Accepts a rank-1 input [in] or a batch [batch x in].
ForwardResult mlp_forward(const MLPParams& params, const Tensor& input);
Tensor mlp_predict(const MLPParams& params, const Tensor& input);

// output_grad must have the shape of the forward output. Parameter gradients
// are summed over the batch.
BackwardResult mlp_backward(const MLPParams& params, const ForwardCache& cache,
                            const Tensor& output_grad);

void hard_copy(const MLPParams& src, MLPParams& dst);
bool same_structure(const MLPParams& a, const MLPParams& b);

// Gradient of 0.5 * ||theta||^2 over all weights and biases.
Gradients l2_grad(const MLPParams& params);
double l2_penalty(const MLPParams& params);

}  // namespace ddpgfd::nn
