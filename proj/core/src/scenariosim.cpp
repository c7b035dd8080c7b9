#include "casnsc/scenariosim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "casnsc/errors.hpp"

namespace casnsc::sim {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; std distributions are not
// portable across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal(std::mt19937_64& rng) {
  // Box-Muller
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Curb-frame path parameterized by arclength; s = 0 is the entry point.
struct Path {
  double offset;  // c_r of the approach
  double entry;   // c_l of the entry point
  double radius;
  int branch;

  traj::Vec2 at(double s) const {
    if (s <= 0.0 || branch == 1) return {entry - s, offset};
    const double arc = 0.5 * std::numbers::pi * radius;
    // Arc centered at (entry, offset - radius), heading -x_c into -y_c.
    if (s <= arc) {
      const double phi = 0.5 * std::numbers::pi + s / radius;
      return {entry + radius * std::cos(phi), offset - radius + radius * std::sin(phi)};
    }
    return {entry - radius, offset - radius - (s - arc)};
  }
};

}  // namespace

void ScenarioConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (n_trajectories < 1) throw ConfigError("n_trajectories must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!prob(p_obey) || !prob(light_split)) {
    throw ConfigError("p_obey and light_split must lie in [0, 1]");
  }
  if (!(speed_mean > 0.0) || speed_std < 0.0 || position_noise_std < 0.0 || offset_std < 0.0) {
    throw ConfigError("speed and noise parameters must be nonnegative (speed_mean > 0)");
  }
  if (!(turn_radius > 0.0) || !(sidewalk_offset > 0.0) || !(entry_cl > 0.0)) {
    throw ConfigError("scenario geometry must be positive");
  }
  if (!(pre_entry_min > 0.0) || pre_entry_max < pre_entry_min || post_entry_max < post_entry_min ||
      !(post_entry_min > 0.0)) {
    throw ConfigError("invalid pre/post entry durations");
  }
  if (!(local_bounds.max_x > local_bounds.min_x) || !(local_bounds.max_y > local_bounds.min_y)) {
    throw ConfigError("empty scenario bounds");
  }
}

ScenarioData generate_dataset(const ScenarioConfig& cfg) {
  cfg.validate();

  // Global bounds: bounding box of the rotated local rectangle.
  const context::IntersectionMap frame(cfg.curb_right_angle, cfg.corner, {0, 0, 1, 1});
  context::Rect global{1e300, 1e300, -1e300, -1e300};
  const auto& lb = cfg.local_bounds;
  for (const traj::Vec2 c : {traj::Vec2{lb.min_x, lb.min_y}, traj::Vec2{lb.max_x, lb.min_y},
                             traj::Vec2{lb.min_x, lb.max_y}, traj::Vec2{lb.max_x, lb.max_y}}) {
    const auto g = frame.from_curb_frame(c);
    global.min_x = std::min(global.min_x, g.x);
    global.min_y = std::min(global.min_y, g.y);
    global.max_x = std::max(global.max_x, g.x);
    global.max_y = std::max(global.max_y, g.y);
  }

  ScenarioData out;
  out.map = context::IntersectionMap::from_curbs(cfg.corner, cfg.curb_right_angle,
                                                 cfg.curb_left_angle, global);
  out.map.validate();

  const double speed_lo = std::max(0.1, cfg.speed_mean - 3.0 * cfg.speed_std);
  const double speed_hi = cfg.speed_mean + 3.0 * cfg.speed_std;

  out.dataset.reserve(cfg.n_trajectories);
  for (std::size_t i = 0; i < cfg.n_trajectories; ++i) {
    std::mt19937_64 rng(splitmix(cfg.seed * 0x100000001b3ULL + i));

    TrajectoryRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "ped-%04zu", i);
    rec.id = id;

    const int t1 = uniform01(rng) < cfg.light_split ? 1 : 0;
    rec.lights = context::LightState::from_tr(t1);
    const bool obey = uniform01(rng) < cfg.p_obey;
    const int walk = walk_branch(*rec.lights);
    rec.branch = obey ? walk : 3 - walk;

    const double speed =
        std::clamp(cfg.speed_mean + cfg.speed_std * normal(rng), speed_lo, speed_hi);
    const double offset = cfg.sidewalk_offset +
                          std::clamp(cfg.offset_std * normal(rng), -3.0 * cfg.offset_std,
                                     3.0 * cfg.offset_std);
    const auto steps_in = [&](double lo, double hi) {
      const double t = lo + (hi - lo) * uniform01(rng);
      return static_cast<std::size_t>(std::ceil(t / cfg.dt - 1e-9));
    };
    const std::size_t n_pre = steps_in(cfg.pre_entry_min, cfg.pre_entry_max);
    const std::size_t n_post = steps_in(cfg.post_entry_min, cfg.post_entry_max);
    const Path path{offset, cfg.entry_cl, cfg.turn_radius, rec.branch};

    rec.t_enter = static_cast<double>(n_pre) * cfg.dt;
    for (std::size_t s = 0; s <= n_pre + n_post; ++s) {
      const double t = static_cast<double>(s) * cfg.dt;
      auto local = path.at(speed * (t - *rec.t_enter));
      local.x += cfg.position_noise_std * normal(rng);
      local.y += cfg.position_noise_std * normal(rng);
      const auto g = out.map.from_curb_frame(local);
      rec.trajectory.points.push_back({t, g.x, g.y});
    }
    out.dataset.push_back(std::move(rec));
  }
  return out;
}

}  // namespace casnsc::sim
