#include "ddpgfd/env/insertion.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ddpgfd::env {

namespace {

constexpr double kContactTol = 1e-12;
constexpr int kBisectIters = 50;

double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

std::string to_string(Variant v) { return v == Variant::peg ? "peg" : "clip"; }

Variant variant_from_string(std::string_view name) {
  if (name == "peg") return Variant::peg;
  if (name == "clip") return Variant::clip;
  throw std::invalid_argument("unknown task variant '" + std::string(name) + "'");
}

std::string to_string(RewardMode m) { return m == RewardMode::sparse ? "sparse" : "shaped"; }

RewardMode reward_mode_from_string(std::string_view name) {
  if (name == "sparse") return RewardMode::sparse;
  if (name == "shaped") return RewardMode::shaped;
  throw std::invalid_argument("unknown reward mode '" + std::string(name) + "'");
}

void EnvConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid env config: ") + what);
  };
  require(dt > 0.0, "dt must be positive");
  require(max_steps > 0, "max_steps must be positive");
  require(eps_tol > 0.0, "eps_tol must be positive");
  require(shaping_alpha > 0.0 && shaping_beta > 0.0, "shaping constants must be positive");
  require(goal_weight.x >= 0.0 && goal_weight.y >= 0.0, "goal weights must be non-negative");
  require(opening_weight.x >= 0.0 && opening_weight.y >= 0.0, "opening weights must be non-negative");
  require(wall_thickness > 0.0, "wall thickness must be positive");
  require(max_linear_speed > 0.0 && max_angular_speed > 0.0, "speed bounds must be positive");
  require(max_speed_increase > 0.0, "max_speed_increase must be positive");
  require(spawn_x_min <= spawn_x_max && spawn_y_min <= spawn_y_max, "empty spawn region");
  if (variant == Variant::peg) {
    require(channel_depth > 0.0, "channel depth must be positive");
    require(peg_width > 0.0 && peg_length > channel_depth, "peg must be longer than the channel");
    require(channel_width > peg_width, "channel narrower than the plug");
  } else {
    require(clip_channel_depth > 0.0 && clip_channel_width > 0.0, "clip channel must be non-empty");
    require(clip_base_width > clip_channel_width, "clip base must be wider than the channel");
    require(prong_min_angle <= prong_rest_angle && prong_rest_angle <= prong_max_angle,
            "prong rest angle outside limits");
    require(clip_prong_length > clip_channel_depth, "prongs shorter than the channel depth");
  }
}

double weighted_distance(Vec2 a, Vec2 b, Vec2 w) {
  return std::hypot(w.x * (a.x - b.x), w.y * (a.y - b.y));
}

double goal_distance(const SiteSet& sites) {
  double d = 0.0;
  for (std::size_t i = 0; i < sites.tips.size(); ++i) {
    d += weighted_distance(sites.goals[i], sites.tips[i], sites.goal_weight);
  }
  return d;
}

double sparse_reward(const SiteSet& sites, double eps_tol) {
  return goal_distance(sites) < eps_tol ? 10.0 : 0.0;
}

double shaped_reward(const SiteSet& sites, double alpha, double beta) {
  double opening_to_goal = 0.0;
  double tip_to_opening = 0.0;
  for (std::size_t i = 0; i < sites.tips.size(); ++i) {
    opening_to_goal += weighted_distance(sites.goals[i], sites.openings[i], sites.opening_weight);
    tip_to_opening += weighted_distance(sites.openings[i], sites.tips[i], sites.opening_weight);
  }
  const double tip_to_goal = goal_distance(sites);
  const double c_g = std::min(tip_to_goal, opening_to_goal);
  // Reaching phase while the tips are farther from the goal than the opening is.
  const double c_o = tip_to_goal > opening_to_goal ? tip_to_opening : 0.0;
  const double cost = beta * (c_o + c_g);
  if (cost <= 0.0) return 1.0;
  return std::min(1.0, std::max(0.0, -alpha * std::log(cost)));
}

Vec2 safety_filter(Vec2 u_agent, Vec2 f_applied, Vec2 prev_u_control, const EnvConfig& config) {
  Vec2 u = config.safety_k_a * u_agent + config.safety_k_f * f_applied;
  u.x = clampd(u.x, -config.max_linear_speed, config.max_linear_speed);
  u.y = clampd(u.y, -config.max_linear_speed, config.max_linear_speed);
  const double limit = norm(prev_u_control) + config.max_speed_increase;
  const double speed = norm(u);
  if (speed > limit) u = (limit / speed) * u;
  return u;
}

InsertionTask::InsertionTask(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  const bool peg = config_.variant == Variant::peg;
  const double w = peg ? config_.channel_width : config_.clip_channel_width;
  const double d = peg ? config_.channel_depth : config_.clip_channel_depth;
  const double t = config_.wall_thickness;
  floor_y_ = -d - t;
  walls_ = {
      Box{{-w / 2 - t, -d - t}, {-w / 2, 0.0}},
      Box{{w / 2, -d - t}, {w / 2 + t, 0.0}},
      Box{{-w / 2 - t, -d - t}, {w / 2 + t, -d}},
  };

  if (peg) {
    const double hw = config_.peg_width / 2;
    goal_position_ = {0.0, -d};
    goals_ = {{-hw, -d}, {hw, -d}};
  } else {
    // Lower the clip along the channel axis until the prong tips first touch
    // the channel floor.
    const std::vector<double> rest(2, config_.prong_rest_angle);
    auto clear_of_floor = [&](const Pose& p) {
      const auto prongs = clip_prongs(p, rest);
      if (!prongs) return false;
      const auto tips = tip_sites(p, *prongs);
      return std::min(tips[0].y, tips[1].y) >= -d;
    };
    Pose pose{0.0, config_.clip_prong_length + 0.01, 0.0};
    if (!clear_of_floor(pose)) throw std::invalid_argument("invalid env config: clip cannot start above socket");
    const double step = 1e-3;
    for (int i = 0; i < 1000; ++i) {
      Pose next = pose;
      next.y -= step;
      if (!clear_of_floor(next)) break;
      pose = next;
    }
    double lo = 0.0;
    double hi = step;
    for (int i = 0; i < kBisectIters; ++i) {
      const double mid = 0.5 * (lo + hi);
      Pose probe = pose;
      probe.y -= mid;
      if (clear_of_floor(probe)) lo = mid; else hi = mid;
    }
    pose.y -= lo;
    const auto prongs = clip_prongs(pose, rest);
    goal_position_ = {pose.x, pose.y};
    goal_prongs_ = *prongs;
    goals_ = tip_sites(pose, *prongs);
    for (const auto& g : goals_) {
      if (!(g.y < -0.5 * d)) throw std::invalid_argument("invalid env config: clip prongs cannot enter the channel");
    }
  }
  for (const auto& g : goals_) openings_.push_back({g.x, 0.0});
}

std::size_t InsertionTask::action_dim() const { return config_.variant == Variant::peg ? 3 : 2; }

std::size_t InsertionTask::observation_dim() const { return config_.variant == Variant::peg ? 16 : 18; }

std::vector<double> InsertionTask::action_bounds() const {
  std::vector<double> b{config_.max_linear_speed, config_.max_linear_speed};
  if (config_.variant == Variant::peg) b.push_back(config_.max_angular_speed);
  return b;
}

bool InsertionTask::within_workspace(Vec2 p) const {
  return p.x >= -config_.workspace_half_width && p.x <= config_.workspace_half_width &&
         p.y >= floor_y_ && p.y <= config_.workspace_top;
}

bool InsertionTask::peg_free(const Pose& pose) const {
  const double hw = config_.peg_width / 2;
  const double len = config_.peg_length;
  const Vec2 origin{pose.x, pose.y};
  Polygon quad;
  for (Vec2 local : {Vec2{-hw, 0.0}, Vec2{hw, 0.0}, Vec2{hw, len}, Vec2{-hw, len}}) {
    const Vec2 p = origin + rotate(local, pose.angle);
    if (!within_workspace(p)) return false;
    quad.push_back(p);
  }
  for (const auto& wall : walls_) {
    if (overlap_depth(quad, wall) > kContactTol) return false;
  }
  return true;
}

std::optional<std::vector<double>> InsertionTask::clip_prongs(const Pose& pose,
                                                              const std::vector<double>& relaxed) const {
  const double bw = config_.clip_base_width / 2;
  const Polygon base{{pose.x - bw, pose.y},
                     {pose.x + bw, pose.y},
                     {pose.x + bw, pose.y + config_.clip_base_height},
                     {pose.x - bw, pose.y + config_.clip_base_height}};
  for (const auto& p : base) {
    if (!within_workspace(p)) return std::nullopt;
  }
  for (const auto& wall : walls_) {
    if (overlap_depth(base, wall) > kContactTol) return std::nullopt;
  }

  const double len = config_.clip_prong_length;
  const double lo_lim = config_.prong_min_angle;
  const double hi_lim = config_.prong_max_angle;
  std::vector<double> out(2);
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? -1.0 : 1.0;
    const Vec2 hinge{pose.x + sign * config_.clip_hinge_offset, pose.y};
    auto free = [&](double phi) {
      const Vec2 tip = hinge + Vec2{sign * len * std::sin(phi), -len * std::cos(phi)};
      if (!within_workspace(tip)) return false;
      for (const auto& wall : walls_) {
        if (segment_inside_fraction(hinge, tip, wall) > 0.0) return false;
      }
      return true;
    };
    const double start = clampd(relaxed[side], lo_lim, hi_lim);
    if (free(start)) {
      out[side] = start;
      continue;
    }
    // Nearest free angle to the relaxed one, scanning outward then refining
    // to the contact boundary.
    constexpr double kScan = 0.01;
    std::optional<double> best;
    for (int k = 1; !best; ++k) {
      bool any_in_range = false;
      for (double dir : {-1.0, 1.0}) {
        const double prev = start + dir * (k - 1) * kScan;
        const double phi = start + dir * k * kScan;
        const double phi_c = clampd(phi, lo_lim, hi_lim);
        if (std::abs(phi_c - prev) < 1e-15 || (dir < 0 ? prev <= lo_lim : prev >= hi_lim)) continue;
        any_in_range = true;
        if (!free(phi_c)) continue;
        double blocked = prev;
        double ok = phi_c;
        for (int i = 0; i < kBisectIters; ++i) {
          const double mid = 0.5 * (blocked + ok);
          if (free(mid)) ok = mid; else blocked = mid;
        }
        if (!best || std::abs(ok - start) < std::abs(*best - start)) best = ok;
      }
      if (!any_in_range) break;
    }
    if (!best) return std::nullopt;
    out[side] = *best;
  }
  return out;
}

std::vector<Vec2> InsertionTask::tip_sites(const Pose& pose, const std::vector<double>& prongs) const {
  if (config_.variant == Variant::peg) {
    const double hw = config_.peg_width / 2;
    const Vec2 origin{pose.x, pose.y};
    return {origin + rotate({-hw, 0.0}, pose.angle), origin + rotate({hw, 0.0}, pose.angle)};
  }
  const double len = config_.clip_prong_length;
  const double s = config_.clip_hinge_offset;
  return {{pose.x - s - len * std::sin(prongs[0]), pose.y - len * std::cos(prongs[0])},
          {pose.x + s + len * std::sin(prongs[1]), pose.y - len * std::cos(prongs[1])}};
}

InsertionTask::Pose InsertionTask::resolve_motion(const Pose& from, const Pose& delta,
                                                  const std::vector<double>& relaxed,
                                                  std::vector<double>& prongs_out) const {
  const bool peg = config_.variant == Variant::peg;
  auto feasible = [&](const Pose& p) {
    return peg ? peg_free(p) : clip_prongs(p, relaxed).has_value();
  };
  auto along = [](const Pose& base, const Pose& d, double t) {
    return Pose{base.x + t * d.x, base.y + t * d.y, base.angle + t * d.angle};
  };

  Pose cur = along(from, delta, 1.0);
  if (!feasible(cur)) {
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < kBisectIters; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(along(from, delta, mid))) lo = mid; else hi = mid;
    }
    cur = along(from, delta, lo);
    const double rest = 1.0 - lo;
    // Slide the remainder along each axis separately.
    for (int axis = 0; axis < 3; ++axis) {
      Pose d{};
      if (axis == 0) d.x = rest * delta.x;
      if (axis == 1) d.y = rest * delta.y;
      if (axis == 2) d.angle = rest * delta.angle;
      if (d.x == 0.0 && d.y == 0.0 && d.angle == 0.0) continue;
      if (feasible(along(cur, d, 1.0))) {
        cur = along(cur, d, 1.0);
        continue;
      }
      double a = 0.0;
      double b = 1.0;
      for (int i = 0; i < kBisectIters; ++i) {
        const double mid = 0.5 * (a + b);
        if (feasible(along(cur, d, mid))) a = mid; else b = mid;
      }
      cur = along(cur, d, a);
    }
  }
  if (peg) {
    prongs_out.clear();
  } else {
    auto prongs = clip_prongs(cur, relaxed);
    if (!prongs) {
      // The start pose itself conflicts with the relaxed prongs; hold position.
      cur = from;
      prongs = clip_prongs(cur, relaxed);
    }
    prongs_out = prongs ? *prongs : relaxed;
  }
  return cur;
}

EnvState InsertionTask::goal_state() const {
  EnvState s;
  s.plug_position = goal_position_;
  s.last_control.assign(action_dim(), 0.0);
  if (config_.variant == Variant::clip) {
    s.prong_angles = goal_prongs_;
    s.prong_velocities.assign(2, 0.0);
  }
  return s;
}

EnvState InsertionTask::reset(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(config_.spawn_x_min, config_.spawn_x_max);
  std::uniform_real_distribution<double> uy(config_.spawn_y_min, config_.spawn_y_max);
  std::uniform_real_distribution<double> ua(-config_.spawn_angle, config_.spawn_angle);
  const bool peg = config_.variant == Variant::peg;
  const std::vector<double> rest(2, config_.prong_rest_angle);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Pose pose{ux(rng), uy(rng), 0.0};
    if (peg) {
      pose.angle = ua(rng);
    } else {
      pose.y += config_.clip_prong_length;
    }
    EnvState s;
    s.plug_position = {pose.x, pose.y};
    s.plug_angle = pose.angle;
    s.last_control.assign(action_dim(), 0.0);
    if (peg) {
      if (!peg_free(pose)) continue;
    } else {
      auto prongs = clip_prongs(pose, rest);
      if (!prongs || *prongs != rest) continue;
      s.prong_angles = *prongs;
      s.prong_velocities.assign(2, 0.0);
    }
    if (penetration(s) > 0.0 || is_success(sites(s))) continue;
    return s;
  }
  throw std::invalid_argument("invalid env config: no collision-free start pose in spawn region");
}

StepResult InsertionTask::step(const EnvState& state, const Action& action) const {
  if (state.done) throw std::logic_error("step called on a terminal state");
  if (action.size() != action_dim()) {
    throw std::invalid_argument("action has " + std::to_string(action.size()) + " entries, expected " +
                                std::to_string(action_dim()));
  }
  for (std::size_t i = 0; i < action.size(); ++i) {
    if (!std::isfinite(action[i])) {
      throw std::runtime_error("non-finite action component " + std::to_string(i) + " at step " +
                               std::to_string(state.step_index));
    }
  }
  const bool peg = config_.variant == Variant::peg;
  const double dt = config_.dt;

  const Vec2 prev{state.last_control.size() > 0 ? state.last_control[0] : 0.0,
                  state.last_control.size() > 1 ? state.last_control[1] : 0.0};
  const Vec2 u = safety_filter({action[0], action[1]}, state.f_applied, prev, config_);
  const double w = peg ? clampd(config_.safety_k_a * action[2], -config_.max_angular_speed,
                                config_.max_angular_speed)
                       : 0.0;

  std::vector<double> relaxed;
  if (!peg) {
    const double decay = std::exp(-config_.prong_spring_rate * dt);
    for (double phi : state.prong_angles) {
      relaxed.push_back(config_.prong_rest_angle + (phi - config_.prong_rest_angle) * decay);
    }
  }

  const Pose from{state.plug_position.x, state.plug_position.y, state.plug_angle};
  const Pose delta{u.x * dt, u.y * dt, w * dt};
  std::vector<double> prongs;
  const Pose to = resolve_motion(from, delta, relaxed, prongs);

  StepResult r;
  EnvState& s = r.state;
  s.plug_position = {to.x, to.y};
  s.plug_angle = to.angle;
  s.plug_velocity = {(to.x - from.x) / dt, (to.y - from.y) / dt};
  s.plug_angular_velocity = (to.angle - from.angle) / dt;
  s.prong_angles = prongs;
  s.prong_velocities.clear();
  for (std::size_t i = 0; i < prongs.size(); ++i) {
    s.prong_velocities.push_back((prongs[i] - state.prong_angles[i]) / dt);
  }
  s.last_control = {u.x, u.y};
  if (peg) s.last_control.push_back(w);
  const Vec2 correction{to.x - (from.x + delta.x), to.y - (from.y + delta.y)};
  s.f_applied = (config_.contact_stiffness / dt) * correction;
  s.step_index = state.step_index + 1;

  const SiteSet site_set = sites(s);
  s.success = is_success(site_set);
  s.done = s.success || s.step_index >= config_.max_steps;
  r.reward = reward(site_set);
  r.done = s.done;
  r.success = s.success;
  r.observation = observe(s);
  return r;
}

SiteSet InsertionTask::sites(const EnvState& state) const {
  SiteSet out;
  out.tips = tip_sites({state.plug_position.x, state.plug_position.y, state.plug_angle}, state.prong_angles);
  out.openings = openings_;
  out.goals = goals_;
  out.goal_weight = config_.goal_weight;
  out.opening_weight = config_.opening_weight;
  return out;
}

bool InsertionTask::is_success(const SiteSet& s) const { return goal_distance(s) < config_.eps_tol; }

double InsertionTask::reward(const SiteSet& s) const {
  return config_.reward_mode == RewardMode::sparse
             ? sparse_reward(s, config_.eps_tol)
             : shaped_reward(s, config_.shaping_alpha, config_.shaping_beta);
}

Observation InsertionTask::observe(const EnvState& state) const {
  const double ps = config_.obs_position_scale;
  const double vs = config_.obs_velocity_scale;
  const double fs = config_.obs_force_scale;
  Observation o;
  o.reserve(observation_dim());
  o.push_back(ps * state.plug_position.x);
  o.push_back(ps * state.plug_position.y);
  if (config_.variant == Variant::peg) {
    o.push_back(state.plug_angle);
    o.push_back(vs * state.plug_velocity.x);
    o.push_back(vs * state.plug_velocity.y);
    o.push_back(state.plug_angular_velocity);
  } else {
    o.push_back(vs * state.plug_velocity.x);
    o.push_back(vs * state.plug_velocity.y);
    for (double a : state.prong_angles) o.push_back(a);
    for (double v : state.prong_velocities) o.push_back(v);
  }
  const SiteSet s = sites(state);
  for (std::size_t i = 0; i < s.tips.size(); ++i) {
    o.push_back(ps * (s.tips[i].x - s.openings[i].x));
    o.push_back(ps * (s.tips[i].y - s.openings[i].y));
  }
  for (std::size_t i = 0; i < s.tips.size(); ++i) {
    o.push_back(ps * (s.tips[i].x - s.goals[i].x));
    o.push_back(ps * (s.tips[i].y - s.goals[i].y));
  }
  o.push_back(fs * state.f_applied.x);
  o.push_back(fs * state.f_applied.y);
  return o;
}

std::vector<Polygon> InsertionTask::plug_shapes(const EnvState& state) const {
  const Vec2 p = state.plug_position;
  if (config_.variant == Variant::peg) {
    const double hw = config_.peg_width / 2;
    const double len = config_.peg_length;
    Polygon quad;
    for (Vec2 local : {Vec2{-hw, 0.0}, Vec2{hw, 0.0}, Vec2{hw, len}, Vec2{-hw, len}}) {
      quad.push_back(p + rotate(local, state.plug_angle));
    }
    return {quad};
  }
  const double bw = config_.clip_base_width / 2;
  const double bh = config_.clip_base_height;
  const double s = config_.clip_hinge_offset;
  const auto tips = tip_sites({p.x, p.y, 0.0}, state.prong_angles);
  return {Polygon{{p.x - bw, p.y}, {p.x + bw, p.y}, {p.x + bw, p.y + bh}, {p.x - bw, p.y + bh}},
          Polygon{{p.x - s, p.y}, tips[0]},
          Polygon{{p.x + s, p.y}, tips[1]}};
}

double InsertionTask::penetration(const EnvState& state) const {
  double worst = 0.0;
  for (const auto& shape : plug_shapes(state)) {
    for (const auto& v : shape) {
      worst = std::max({worst, -config_.workspace_half_width - v.x, v.x - config_.workspace_half_width,
                        floor_y_ - v.y, v.y - config_.workspace_top});
    }
    for (const auto& wall : walls_) {
      if (shape.size() >= 3) {
        worst = std::max(worst, overlap_depth(shape, wall));
      } else {
        // Deepest point of the segment inside the box, by dense sampling.
        for (int k = 0; k <= 64; ++k) {
          const Vec2 q = shape[0] + (k / 64.0) * (shape[1] - shape[0]);
          if (!point_strictly_inside(q, wall)) continue;
          const double d = std::min({q.x - wall.lo.x, wall.hi.x - q.x, q.y - wall.lo.y, wall.hi.y - q.y});
          worst = std::max(worst, d);
        }
      }
    }
  }
  return worst;
}

Observation InsertionEnv::reset(std::uint64_t seed) {
  state_ = task_.reset(seed);
  return task_.observe(state_);
}

StepResult InsertionEnv::step(const Action& action) {
  StepResult r = task_.step(state_, action);
  state_ = r.state;
  return r;
}

}  // namespace ddpgfd::env
