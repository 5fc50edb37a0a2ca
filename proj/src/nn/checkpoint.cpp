#include "ddpgfd/nn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace ddpgfd::nn {

using nlohmann::json;

namespace {

json matrix_to_json(const Tensor& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto row = t.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Tensor matrix_from_json(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) throw std::runtime_error(where + ": expected non-empty nested array");
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = rows.front().size();
  std::vector<double> data;
  data.reserve(n_rows * n_cols);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != n_cols) throw std::runtime_error(where + ": ragged matrix");
    for (const auto& v : row) data.push_back(v.get<double>());
  }
  return Tensor({n_rows, n_cols}, std::move(data));
}

Tensor vector_from_json(const json& values, const std::string& where) {
  if (!values.is_array() || values.empty()) throw std::runtime_error(where + ": expected non-empty array");
  return Tensor::vector(values.get<std::vector<double>>());
}

}  // namespace

json params_to_json(const MLPParams& params) {
  json doc = json::object();
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    doc[std::to_string(i)] = {{"weights", matrix_to_json(l.weight)},
                              {"bias", l.bias.storage()},
                              {"activation", to_string(l.activation)}};
  }
  return doc;
}

MLPParams params_from_json(const json& doc) {
  if (!doc.is_object() || doc.empty()) throw std::runtime_error("checkpoint: expected object of layers");
  MLPParams params;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string key = std::to_string(i);
    if (!doc.contains(key)) throw std::runtime_error("checkpoint: missing layer " + key);
    const auto& l = doc.at(key);
    DenseLayer layer{matrix_from_json(l.at("weights"), "layer " + key + " weights"),
                     vector_from_json(l.at("bias"), "layer " + key + " bias"),
                     activation_from_string(l.at("activation").get<std::string>())};
    if (layer.bias.size() != layer.out_dim()) {
      throw std::runtime_error("checkpoint: layer " + key + " bias length does not match weights");
    }
    if (!params.layers.empty() && params.layers.back().out_dim() != layer.in_dim()) {
      throw std::runtime_error("checkpoint: layer " + key + " does not chain with previous layer");
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

json gradients_to_json(const Gradients& grads) {
  json doc = json::array();
  for (const auto& l : grads.layers) {
    doc.push_back({{"weights", l.weight.storage()}, {"bias", l.bias.storage()}});
  }
  return doc;
}

Gradients gradients_from_json(const json& doc, const MLPParams& like) {
  Gradients g = Gradients::zeros_like(like);
  if (!doc.is_array() || doc.size() != g.layers.size()) {
    throw std::runtime_error("checkpoint: gradient layer count mismatch");
  }
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    auto w = doc[i].at("weights").get<std::vector<double>>();
    auto b = doc[i].at("bias").get<std::vector<double>>();
    g.layers[i].weight = Tensor(g.layers[i].weight.shape(), std::move(w));
    g.layers[i].bias = Tensor(g.layers[i].bias.shape(), std::move(b));
  }
  return g;
}

json adam_to_json(const AdamState& state) {
  return {{"step_count", state.step_count},
          {"learning_rate", state.learning_rate},
          {"beta1", state.beta1},
          {"beta2", state.beta2},
          {"epsilon", state.epsilon},
          {"first_moment", gradients_to_json(state.first_moment)},
          {"second_moment", gradients_to_json(state.second_moment)}};
}

AdamState adam_from_json(const json& doc, const MLPParams& like) {
  AdamState s;
  s.step_count = doc.at("step_count").get<std::uint64_t>();
  s.learning_rate = doc.at("learning_rate").get<double>();
  s.beta1 = doc.at("beta1").get<double>();
  s.beta2 = doc.at("beta2").get<double>();
  s.epsilon = doc.at("epsilon").get<double>();
  s.first_moment = gradients_from_json(doc.at("first_moment"), like);
  s.second_moment = gradients_from_json(doc.at("second_moment"), like);
  return s;
}

void save_params(const MLPParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << params_to_json(params).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

MLPParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  return params_from_json(json::parse(in));
}

}  // namespace ddpgfd::nn
