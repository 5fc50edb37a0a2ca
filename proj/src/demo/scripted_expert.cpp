#include "ddpgfd/demo/scripted_expert.hpp"

#include <algorithm>
#include <cmath>

namespace ddpgfd::demo {

namespace {

double clampd(double v, double lim) { return std::min(lim, std::max(-lim, v)); }

}  // namespace

env::Action scripted_expert(const env::InsertionTask& task, const env::EnvState& state,
                            const ExpertConfig& config, std::mt19937_64& rng) {
  const auto& cfg = task.config();
  const bool peg = cfg.variant == env::Variant::peg;
  const auto bounds = task.action_bounds();
  env::Action a(task.action_dim(), 0.0);
  if (task.is_success(task.sites(state))) return a;

  const double v = config.speed_fraction * cfg.max_linear_speed;
  const double k = config.gain / cfg.dt;
  const env::Vec2 goal = task.goal_position();
  const env::Vec2 p = state.plug_position;
  // Height of the lowest tip site above the opening plane.
  const auto tips = task.sites(state).tips;
  const double tip_y = std::min(tips[0].y, tips[1].y);
  const double tip_offset = p.y - tip_y;

  const double ex = goal.x - p.x;
  const double etheta = peg ? -state.plug_angle : 0.0;
  const bool aligned = std::abs(ex) < 0.002 && std::abs(etheta) < 0.03;
  const double hover_y = config.hover_height + tip_offset;

  if (tip_y > 0.0 && !(aligned && tip_y < config.hover_height + 0.005)) {
    a[0] = clampd(k * ex, v);
    a[1] = clampd(k * (hover_y - p.y), v);
  } else {
    a[0] = clampd(k * ex, v);
    a[1] = -std::min(v, std::max(0.0, k * (p.y - goal.y + 0.002)));
  }
  if (peg) a[2] = clampd(k * etheta, config.speed_fraction * cfg.max_angular_speed);

  if (config.jitter > 0.0) {
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = std::clamp(a[i] + config.jitter * bounds[i] * noise(rng), -bounds[i], bounds[i]);
    }
  }
  return a;
}

}  // namespace ddpgfd::demo
