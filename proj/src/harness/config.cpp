#include "ddpgfd/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace ddpgfd::harness {

using nlohmann::json;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ddpgfd: return "ddpgfd";
    case Algorithm::ddpg: return "ddpg";
    case Algorithm::bc: return "bc";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "ddpgfd") return Algorithm::ddpgfd;
  if (name == "ddpg") return Algorithm::ddpg;
  if (name == "bc") return Algorithm::bc;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "' (expected ddpgfd, ddpg or bc)");
}

namespace {

// Binds a config struct's fields to JSON keys in one place, for both
// directions.
class Binder {
 public:
  Binder(json* out, const json* in, std::string scope) : out_(out), in_(in), scope_(std::move(scope)) {}

  template <typename T>
  void field(const char* key, T& value) {
    seen_.insert(key);
    if (out_) {
      (*out_)[key] = encode(value);
    } else if (in_->contains(key)) {
      try {
        decode(in_->at(key), value);
      } catch (const std::exception& e) {
        throw std::invalid_argument("config key " + scope_ + key + ": " + e.what());
      }
    }
  }

  void finish() const {
    if (!in_) return;
    if (!in_->is_object()) throw std::invalid_argument("config section " + scope_ + " must be an object");
    for (const auto& item : in_->items()) {
      if (!seen_.count(item.key())) throw std::invalid_argument("unknown config key " + scope_ + item.key());
    }
  }

 private:
  template <typename T>
  static json encode(const T& v) { return v; }
  static json encode(const env::Vec2& v) { return json::array({v.x, v.y}); }
  static json encode(const env::Variant& v) { return env::to_string(v); }
  static json encode(const env::RewardMode& v) { return env::to_string(v); }

  template <typename T>
  static void decode(const json& j, T& v) { v = j.get<T>(); }
  static void decode(const json& j, env::Vec2& v) {
    const auto a = j.get<std::vector<double>>();
    if (a.size() != 2) throw std::invalid_argument("expected a pair");
    v = {a[0], a[1]};
  }
  static void decode(const json& j, env::Variant& v) { v = env::variant_from_string(j.get<std::string>()); }
  static void decode(const json& j, env::RewardMode& v) { v = env::reward_mode_from_string(j.get<std::string>()); }

  json* out_;
  const json* in_;
  std::string scope_;
  std::set<std::string> seen_;
};

template <typename B>
void bind(B& b, env::EnvConfig& c) {
  b.field("variant", c.variant);
  b.field("channel_width", c.channel_width);
  b.field("channel_depth", c.channel_depth);
  b.field("wall_thickness", c.wall_thickness);
  b.field("workspace_half_width", c.workspace_half_width);
  b.field("workspace_top", c.workspace_top);
  b.field("dt", c.dt);
  b.field("max_steps", c.max_steps);
  b.field("eps_tol", c.eps_tol);
  b.field("shaping_alpha", c.shaping_alpha);
  b.field("shaping_beta", c.shaping_beta);
  b.field("goal_weight", c.goal_weight);
  b.field("opening_weight", c.opening_weight);
  b.field("peg_width", c.peg_width);
  b.field("peg_length", c.peg_length);
  b.field("clip_channel_width", c.clip_channel_width);
  b.field("clip_channel_depth", c.clip_channel_depth);
  b.field("clip_base_width", c.clip_base_width);
  b.field("clip_base_height", c.clip_base_height);
  b.field("clip_hinge_offset", c.clip_hinge_offset);
  b.field("clip_prong_length", c.clip_prong_length);
  b.field("prong_rest_angle", c.prong_rest_angle);
  b.field("prong_min_angle", c.prong_min_angle);
  b.field("prong_max_angle", c.prong_max_angle);
  b.field("prong_spring_rate", c.prong_spring_rate);
  b.field("max_linear_speed", c.max_linear_speed);
  b.field("max_angular_speed", c.max_angular_speed);
  b.field("safety_k_a", c.safety_k_a);
  b.field("safety_k_f", c.safety_k_f);
  b.field("max_speed_increase", c.max_speed_increase);
  b.field("contact_stiffness", c.contact_stiffness);
  b.field("spawn_x_min", c.spawn_x_min);
  b.field("spawn_x_max", c.spawn_x_max);
  b.field("spawn_y_min", c.spawn_y_min);
  b.field("spawn_y_max", c.spawn_y_max);
  b.field("spawn_angle", c.spawn_angle);
  b.field("obs_position_scale", c.obs_position_scale);
  b.field("obs_velocity_scale", c.obs_velocity_scale);
  b.field("obs_force_scale", c.obs_force_scale);
}

template <typename B>
void bind(B& b, agent::AgentConfig& c) {
  b.field("gamma", c.gamma);
  b.field("n", c.n);
  b.field("lambda1", c.lambda1);
  b.field("lambda2", c.lambda2);
  b.field("lambda3", c.lambda3);
  b.field("action_l2", c.action_l2);
  b.field("noise_sigma", c.noise_sigma);
  b.field("target_period", c.target_period);
  b.field("updates_per_env_step", c.updates_per_env_step);
  b.field("batch_size", c.batch_size);
  b.field("actor_lr", c.actor_lr);
  b.field("critic_lr", c.critic_lr);
  b.field("actor_hidden", c.actor_hidden);
  b.field("critic_hidden", c.critic_hidden);
  b.field("final_layer_scale", c.final_layer_scale);
}

template <typename B>
void bind(B& b, replay::ReplayConfig& c) {
  b.field("capacity", c.capacity);
  b.field("per_alpha", c.per_alpha);
  b.field("per_beta", c.per_beta);
  b.field("eps_per", c.eps_per);
  b.field("eps_demo", c.eps_demo);
}

template <typename B>
void bind(B& b, demo::BcConfig& c) {
  b.field("hidden", c.hidden);
  b.field("epochs", c.epochs);
  b.field("batch_size", c.batch_size);
  b.field("learning_rate", c.learning_rate);
  b.field("validation_fraction", c.validation_fraction);
}

template <typename B>
void bind(B& b, demo::ExpertConfig& c) {
  b.field("jitter", c.jitter);
  b.field("speed_fraction", c.speed_fraction);
  b.field("gain", c.gain);
  b.field("hover_height", c.hover_height);
}

template <typename T>
json section_out(const T& value) {
  json out = json::object();
  Binder b(&out, nullptr, "");
  bind(b, const_cast<T&>(value));
  return out;
}

template <typename T>
void section_in(const json& doc, const char* key, T& value) {
  if (!doc.contains(key)) return;
  Binder b(nullptr, &doc.at(key), std::string(key) + ".");
  bind(b, value);
  b.finish();
}

const std::set<std::string> kTopLevelKeys{"env",        "agent",       "replay",          "bc",
                                          "expert",     "demos",       "demo_count",      "algorithm",
                                          "reward_mode", "total_env_steps", "eval_every", "eval_episodes",
                                          "seed"};

}  // namespace

void ExperimentConfig::resolve() {
  env.reward_mode = reward_mode;
  agent.bootstrap_on_success = reward_mode == env::RewardMode::shaped;
  replay.n = agent.n;
  if (algorithm == Algorithm::ddpg) {
    replay.eps_demo = 0.0;
    demos.reset();
    demo_count = 0;
  }
  validate();
}

void ExperimentConfig::validate() const {
  env.validate();
  agent.validate();
  replay.validate();
  if (env.reward_mode != reward_mode) throw std::invalid_argument("env.reward_mode disagrees with reward_mode");
  if (replay.n != agent.n) throw std::invalid_argument("replay horizon disagrees with agent.n");
  if (seed >= (std::uint64_t{1} << 28)) throw std::invalid_argument("seed must be below 2^28");
  if (eval_every == 0) throw std::invalid_argument("eval_every must be positive");
  if (eval_episodes <= 0) throw std::invalid_argument("eval_episodes must be positive");
  if (bc.epochs < 0 || bc.batch_size == 0) throw std::invalid_argument("invalid bc settings");
  if (bc.validation_fraction < 0.0 || bc.validation_fraction >= 1.0) {
    throw std::invalid_argument("bc.validation_fraction must lie in [0, 1)");
  }
}

void ExperimentConfig::require_demos() const {
  if ((algorithm == Algorithm::ddpgfd || algorithm == Algorithm::bc) && !demos) {
    throw std::invalid_argument("algorithm " + to_string(algorithm) + " requires a demos file");
  }
}

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!kTopLevelKeys.count(item.key())) throw std::invalid_argument("unknown config key " + item.key());
  }
  ExperimentConfig c;
  section_in(doc, "env", c.env);
  section_in(doc, "agent", c.agent);
  section_in(doc, "replay", c.replay);
  section_in(doc, "bc", c.bc);
  section_in(doc, "expert", c.expert);
  try {
    if (doc.contains("demos") && !doc.at("demos").is_null()) c.demos = doc.at("demos").get<std::string>();
    c.demo_count = doc.value("demo_count", c.demo_count);
    if (doc.contains("algorithm")) c.algorithm = algorithm_from_string(doc.at("algorithm").get<std::string>());
    if (doc.contains("reward_mode")) {
      c.reward_mode = env::reward_mode_from_string(doc.at("reward_mode").get<std::string>());
    } else {
      c.reward_mode = c.env.reward_mode;
    }
    c.total_env_steps = doc.value("total_env_steps", c.total_env_steps);
    c.eval_every = doc.value("eval_every", c.eval_every);
    c.eval_episodes = doc.value("eval_episodes", c.eval_episodes);
    c.seed = doc.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  c.resolve();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json env = section_out(c.env);
  env.erase("reward_mode");
  return {{"env", env},
          {"agent", section_out(c.agent)},
          {"replay", section_out(c.replay)},
          {"bc", section_out(c.bc)},
          {"expert", section_out(c.expert)},
          {"demos", c.demos ? json(*c.demos) : json(nullptr)},
          {"demo_count", c.demo_count},
          {"algorithm", to_string(c.algorithm)},
          {"reward_mode", env::to_string(c.reward_mode)},
          {"total_env_steps", c.total_env_steps},
          {"eval_every", c.eval_every},
          {"eval_episodes", c.eval_episodes},
          {"seed", c.seed}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  ExperimentConfig c = config_from_json(doc);
  if (c.demos && std::filesystem::path(*c.demos).is_relative()) {
    c.demos = (path.parent_path() / *c.demos).lexically_normal().string();
  }
  return c;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t training_episode_seed(std::uint64_t run_seed, std::uint64_t episode) {
  return (run_seed << 32) + episode;
}

std::uint64_t evaluation_seed(std::uint64_t episode) { return (std::uint64_t{1} << 62) + episode; }

std::uint64_t demonstration_seed(std::uint64_t episode) { return (std::uint64_t{1} << 61) + episode; }

}  // namespace ddpgfd::harness
