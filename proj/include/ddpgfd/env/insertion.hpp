#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddpgfd/env/geometry.hpp"

namespace ddpgfd::env {

enum class Variant { peg, clip };
enum class RewardMode { sparse, shaped };

std::string to_string(Variant v);
Variant variant_from_string(std::string_view name);
std::string to_string(RewardMode m);
RewardMode reward_mode_from_string(std::string_view name);

using Observation = std::vector<double>;
using Action = std::vector<double>;

struct EnvConfig {
  Variant variant = Variant::peg;
  RewardMode reward_mode = RewardMode::sparse;

  // Socket: a vertical channel opening at y = 0 in a block of the given
  // wall thickness. The table top sits at the bottom of the block.
  double channel_width = 0.026;
  double channel_depth = 0.05;
  double wall_thickness = 0.04;
  double workspace_half_width = 0.25;
  double workspace_top = 0.25;

  double dt = 0.15;
  int max_steps = 50;

  // Rewards.
  double eps_tol = 0.01;
  double shaping_alpha = 0.2;
  double shaping_beta = 2.5;
  Vec2 goal_weight{1.0, 1.0};
  Vec2 opening_weight{1.0, 1.0};

  // Peg: rectangle, pose is the centre of its tip edge.
  double peg_width = 0.02;
  double peg_length = 0.08;

  // Clip: base with two spring-hinged prongs. Angles are measured from the
  // downward vertical, positive = splayed outward.
  double clip_channel_width = 0.03;
  double clip_channel_depth = 0.025;
  double clip_base_width = 0.05;
  double clip_base_height = 0.02;
  double clip_hinge_offset = 0.018;
  double clip_prong_length = 0.04;
  double prong_rest_angle = -0.1;
  double prong_min_angle = -0.45;
  double prong_max_angle = 0.25;
  double prong_spring_rate = 6.0;  // 1/s, first-order return to rest

  // Actions and the impedance safety filter.
  double max_linear_speed = 0.1;
  double max_angular_speed = 1.0;
  double safety_k_a = 1.0;
  double safety_k_f = 0.004;
  double max_speed_increase = 0.05;
  double contact_stiffness = 50.0;

  // Spawn region for the plug pose.
  double spawn_x_min = -0.12;
  double spawn_x_max = 0.12;
  double spawn_y_min = 0.04;
  double spawn_y_max = 0.12;
  double spawn_angle = 0.25;

  // Observation feature scaling.
  double obs_position_scale = 20.0;
  double obs_velocity_scale = 10.0;
  double obs_force_scale = 0.2;

  void validate() const;
};

struct SiteSet {
  std::vector<Vec2> tips;
  std::vector<Vec2> openings;
  std::vector<Vec2> goals;
  Vec2 goal_weight{1.0, 1.0};
  Vec2 opening_weight{1.0, 1.0};
};

struct EnvState {
  Vec2 plug_position;
  double plug_angle = 0.0;
  std::vector<double> prong_angles;      // clip only
  std::vector<double> prong_velocities;  // clip only
  Vec2 plug_velocity;                    // achieved over the last step
  double plug_angular_velocity = 0.0;
  std::vector<double> last_control;      // previous u_control (vx, vy[, w])
  Vec2 f_applied;
  int step_index = 0;
  bool done = false;
  bool success = false;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepResult {
  EnvState state;
  Observation observation;
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

// Weighted per-dimension distance ||diag(w) (a - b)||_2.
double weighted_distance(Vec2 a, Vec2 b, Vec2 w);
double goal_distance(const SiteSet& sites);

double sparse_reward(const SiteSet& sites, double eps_tol);
double shaped_reward(const SiteSet& sites, double alpha, double beta);

// u_control = clamp(k_a u_agent + k_f f_applied), with the speed allowed to
// grow by at most max_speed_increase over the previous command.
Vec2 safety_filter(Vec2 u_agent, Vec2 f_applied, Vec2 prev_u_control, const EnvConfig& config);

// Geometry, dynamics and rewards for one configured task. Immutable after
// construction; all methods are pure functions of their arguments.
class InsertionTask {
 public:
  explicit InsertionTask(EnvConfig config);

  const EnvConfig& config() const { return config_; }
  std::size_t action_dim() const;
  std::size_t observation_dim() const;
  std::vector<double> action_bounds() const;

  EnvState reset(std::uint64_t seed) const;
  StepResult step(const EnvState& state, const Action& action) const;
  Observation observe(const EnvState& state) const;
  SiteSet sites(const EnvState& state) const;
  double reward(const SiteSet& sites) const;
  bool is_success(const SiteSet& sites) const;

  const std::vector<Box>& walls() const { return walls_; }
  const std::vector<Vec2>& goal_sites() const { return goals_; }
  const std::vector<Vec2>& opening_sites() const { return openings_; }
  // Pose of the plug when fully inserted (angle 0).
  Vec2 goal_position() const { return goal_position_; }
  // The fully inserted configuration; its tip sites are exactly the goal
  // sites.
  EnvState goal_state() const;

  // Plug outline: the peg quad, or the clip base quad followed by the two
  // prong segments (two-vertex polygons).
  std::vector<Polygon> plug_shapes(const EnvState& state) const;
  // Largest overlap between the plug and any wall or the workspace bounds.
  double penetration(const EnvState& state) const;

 private:
  struct Pose {
    double x = 0.0;
    double y = 0.0;
    double angle = 0.0;
  };

  bool peg_free(const Pose& pose) const;
  std::optional<std::vector<double>> clip_prongs(const Pose& pose, const std::vector<double>& relaxed) const;
  bool within_workspace(Vec2 p) const;
  Pose resolve_motion(const Pose& from, const Pose& delta, const std::vector<double>& relaxed,
                      std::vector<double>& prongs_out) const;
  std::vector<Vec2> tip_sites(const Pose& pose, const std::vector<double>& prongs) const;

  EnvConfig config_;
  std::vector<Box> walls_;
  std::vector<Vec2> goals_;
  std::vector<Vec2> openings_;
  Vec2 goal_position_;
  std::vector<double> goal_prongs_;
  double floor_y_ = 0.0;
};

// Gym-style wrapper holding the current state.
class InsertionEnv {
 public:
  explicit InsertionEnv(EnvConfig config) : task_(std::move(config)) {}

  Observation reset(std::uint64_t seed);
  StepResult step(const Action& action);

  const InsertionTask& task() const { return task_; }
  const EnvState& state() const { return state_; }
  void set_state(EnvState s) { state_ = std::move(s); }

 private:
  InsertionTask task_;
  EnvState state_;
};

}  // namespace ddpgfd::env
