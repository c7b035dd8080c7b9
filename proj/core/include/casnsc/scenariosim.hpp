#pragma once

// Seeded synthetic corner scenario at a four-way orthogonal intersection.
//
// Geometry is built in the curb frame (corner at the origin, x_c along the
// right curb, y_c along the left curb; the sidewalk is the quadrant
// c_l, c_r >= 0). Every pedestrian walks along the sidewalk towards the
// corner in -x_c at lateral offset ~sidewalk_offset from the right curb.
// At the entry point (c_l = entry_cl) they either
//   branch 1: keep going straight and cross the street beyond curb_left, or
//   branch 2: turn left on a circular arc and cross beyond curb_right.
// Branch 1 is the walk branch when t1 = 1, branch 2 when t1 = 0.

#include <cstddef>
#include <cstdint>

#include "casnsc/context.hpp"
#include "casnsc/dataset.hpp"

namespace casnsc::sim {

struct ScenarioConfig {
  // Map. Non-orthogonal curb angles are rejected.
  double curb_right_angle = 0.5235987755982988;  // 30 degrees
  double curb_left_angle = 0.5235987755982988 + 1.5707963267948966;
  traj::Vec2 corner{0.0, 0.0};
  context::Rect local_bounds{-12.0, -12.0, 20.0, 6.0};  // curb frame

  std::size_t n_trajectories = 218;
  double dt = traj::kDefaultDt;
  double speed_mean = 1.4;
  double speed_std = 0.2;
  double position_noise_std = 0.05;
  double p_obey = 0.95;
  double light_split = 0.5;

  double sidewalk_offset = 2.0;  // c_r of the approach
  double offset_std = 0.15;
  double entry_cl = 4.0;         // c_l where the branches split
  double turn_radius = 2.0;
  double pre_entry_min = 3.5;    // seconds walked before the entry point
  double pre_entry_max = 6.0;
  double post_entry_min = 5.5;   // seconds walked after it
  double post_entry_max = 6.5;

  std::uint64_t seed = 0;

  void validate() const;
};

struct ScenarioData {
  Dataset dataset;
  context::IntersectionMap map;
};

ScenarioData generate_dataset(const ScenarioConfig& cfg);

/// The branch that obeys the lights.
inline int walk_branch(const context::LightState& l) { return l.t1 == 1 ? 1 : 2; }

}  // namespace casnsc::sim
