#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "ddpgfd/nn/adam.hpp"
#include "ddpgfd/nn/mlp.hpp"

namespace ddpgfd::nn {

// {"0": {"weights": [[...], ...], "bias": [...], "activation": "relu"}, "1": ...}
nlohmann::json params_to_json(const MLPParams& params);
MLPParams params_from_json(const nlohmann::json& doc);

nlohmann::json gradients_to_json(const Gradients& grads);
Gradients gradients_from_json(const nlohmann::json& doc, const MLPParams& like);

nlohmann::json adam_to_json(const AdamState& state);
AdamState adam_from_json(const nlohmann::json& doc, const MLPParams& like);

void save_params(const MLPParams& params, const std::filesystem::path& path);
MLPParams load_params(const std::filesystem::path& path);

}  // namespace ddpgfd::nn
