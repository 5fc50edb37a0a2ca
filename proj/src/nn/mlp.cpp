#include "ddpgfd/nn/mlp.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace ddpgfd::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void apply_activation(Activation a, const Tensor& z, Tensor& out) {
  const std::size_t n = z.size();
  switch (a) {
    case Activation::identity:
      out = z;
      return;
    case Activation::relu:
      out = z;
      for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
      return;
    case Activation::tanh:
      out = z;
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(z[i]);
      return;
  }
}

// grad <- grad * act'(z), in place.
void activation_backward(Activation a, const Tensor& z, Tensor& grad) {
  const std::size_t n = z.size();
  switch (a) {
    case Activation::identity:
      return;
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(z[i] > 0.0)) grad[i] = 0.0;
      }
      return;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) {
        const double t = std::tanh(z[i]);
        grad[i] *= 1.0 - t * t;
      }
      return;
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::size_t MLPParams::input_dim() const {
  if (layers.empty()) throw std::logic_error("empty network");
  return layers.front().in_dim();
}

std::size_t MLPParams::output_dim() const {
  if (layers.empty()) throw std::logic_error("empty network");
  return layers.back().out_dim();
}

std::size_t MLPParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool MLPParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const MLPParams& params) {
  Gradients g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    g.layers.push_back({Tensor(l.weight.shape()), Tensor(l.bias.shape())});
  }
  return g;
}

bool Gradients::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
  }
  return true;
}

bool Gradients::matches(const MLPParams& params) const {
  if (layers.size() != params.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].weight.same_shape(params.layers[i].weight) ||
        !layers[i].bias.same_shape(params.layers[i].bias)) {
      return false;
    }
  }
  return true;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  if (other.layers.size() != layers.size()) throw std::invalid_argument("gradient structure mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& w = layers[i].weight;
    auto& b = layers[i].bias;
    const auto& ow = other.layers[i].weight;
    const auto& ob = other.layers[i].bias;
    if (!w.same_shape(ow) || !b.same_shape(ob)) throw std::invalid_argument("gradient structure mismatch");
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += scale * ow[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += scale * ob[k];
  }
}

void Gradients::scale(double factor) {
  for (auto& l : layers) {
    for (auto& v : l.weight.values()) v *= factor;
    for (auto& v : l.bias.values()) v *= factor;
  }
}

MLPParams make_mlp(const std::vector<std::size_t>& widths, Activation hidden, Activation output,
                   std::mt19937_64& rng, double final_layer_scale) {
  if (widths.size() < 2) throw std::invalid_argument("network needs at least input and output widths");
  MLPParams params;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i];
    const std::size_t out = widths[i + 1];
    const bool last = i + 2 == widths.size();
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    if (last) bound *= final_layer_scale;
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Tensor::matrix(out, in), Tensor({out}), last ? output : hidden};
    for (auto& v : layer.weight.values()) v = dist(rng);
    for (auto& v : layer.bias.values()) v = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ForwardResult mlp_forward(const MLPParams& params, const Tensor& input) {
  if (params.layers.empty()) throw std::invalid_argument("mlp_forward: empty network");
  if (input.rank() > 2) throw std::invalid_argument("mlp_forward: input must be rank 1 or 2");
  const std::size_t batch = input.rows();
  if (input.cols() != params.input_dim()) {
    throw std::invalid_argument("mlp_forward: input " + shape_string(input.shape()) +
                                " does not match network input dimension " +
                                std::to_string(params.input_dim()));
  }

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.batch = batch;
  cache.rank1_input = input.rank() == 1;
  cache.layer_dims.push_back(params.input_dim());
  cache.inputs.reserve(params.layers.size());
  cache.preactivations.reserve(params.layers.size());

  Tensor activ = input;
  activ.reshape({batch, input.cols()});
  for (const auto& layer : params.layers) {
    if (layer.in_dim() != activ.cols()) {
      throw std::invalid_argument("mlp_forward: layer chain mismatch at width " +
                                  std::to_string(activ.cols()));
    }
    const std::size_t out = layer.out_dim();
    Tensor z = Tensor::matrix(batch, out);
    auto zm = as_matrix(z, batch, out);
    zm.noalias() = as_matrix(activ, batch, layer.in_dim()) *
                   as_matrix(layer.weight, out, layer.in_dim()).transpose();
    zm.rowwise() += ConstVecMap(layer.bias.data(), static_cast<Eigen::Index>(out));
    Tensor next;
    apply_activation(layer.activation, z, next);
    cache.inputs.push_back(std::move(activ));
    cache.preactivations.push_back(std::move(z));
    cache.layer_dims.push_back(out);
    activ = std::move(next);
  }

  if (cache.rank1_input) {
    activ.reshape({activ.cols()});
    result.output = std::move(activ);
  } else {
    result.output = std::move(activ);
  }
  return result;
}

Tensor mlp_predict(const MLPParams& params, const Tensor& input) {
  return mlp_forward(params, input).output;
}

BackwardResult mlp_backward(const MLPParams& params, const ForwardCache& cache,
                            const Tensor& output_grad) {
  const std::size_t n_layers = params.layers.size();
  if (cache.inputs.size() != n_layers || cache.preactivations.size() != n_layers ||
      cache.layer_dims.size() != n_layers + 1) {
    throw std::invalid_argument("mlp_backward: cache does not belong to this network");
  }
  for (std::size_t i = 0; i < n_layers; ++i) {
    if (params.layers[i].in_dim() != cache.layer_dims[i] ||
        params.layers[i].out_dim() != cache.layer_dims[i + 1]) {
      throw std::invalid_argument("mlp_backward: stale cache, layer " + std::to_string(i) +
                                  " shape differs from the forward pass");
    }
  }
  const std::size_t batch = cache.batch;
  if (output_grad.rows() != batch || output_grad.cols() != params.output_dim() ||
      (output_grad.rank() == 1) != cache.rank1_input) {
    throw std::invalid_argument("mlp_backward: output gradient " + shape_string(output_grad.shape()) +
                                " does not match forward output");
  }

  BackwardResult result;
  result.grads = Gradients::zeros_like(params);
  Tensor delta = output_grad;
  delta.reshape({batch, output_grad.cols()});
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = params.layers[li];
    const std::size_t in = layer.in_dim();
    const std::size_t out = layer.out_dim();
    activation_backward(layer.activation, cache.preactivations[li], delta);
    auto dm = as_matrix(delta, batch, out);
    auto& g = result.grads.layers[li];
    as_matrix(g.weight, out, in).noalias() = dm.transpose() * as_matrix(cache.inputs[li], batch, in);
    Eigen::Map<Eigen::RowVectorXd>(g.bias.data(), static_cast<Eigen::Index>(out)) = dm.colwise().sum();
    Tensor prev = Tensor::matrix(batch, in);
    as_matrix(prev, batch, in).noalias() = dm * as_matrix(layer.weight, out, in);
    delta = std::move(prev);
  }
  if (cache.rank1_input) {
    delta.reshape({delta.cols()});
    result.input_grad = std::move(delta);
  } else {
    result.input_grad = std::move(delta);
  }
  return result;
}

bool same_structure(const MLPParams& a, const MLPParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (!a.layers[i].weight.same_shape(b.layers[i].weight) ||
        !a.layers[i].bias.same_shape(b.layers[i].bias) ||
        a.layers[i].activation != b.layers[i].activation) {
      return false;
    }
  }
  return true;
}

void hard_copy(const MLPParams& src, MLPParams& dst) {
  if (!same_structure(src, dst)) throw std::invalid_argument("hard_copy: network structures differ");
  dst = src;
}

Gradients l2_grad(const MLPParams& params) {
  Gradients g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) g.layers.push_back({l.weight, l.bias});
  return g;
}

double l2_penalty(const MLPParams& params) {
  double s = 0.0;
  for (const auto& l : params.layers) {
    for (double v : l.weight.values()) s += v * v;
    for (double v : l.bias.values()) s += v * v;
  }
  return 0.5 * s;
}

}  // namespace ddpgfd::nn
