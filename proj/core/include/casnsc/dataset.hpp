#pragma once

#include <optional>
#include <string>
#include <vector>

#include "casnsc/context.hpp"
#include "casnsc/trajkit.hpp"

namespace casnsc {

/// One annotated pedestrian track.
struct TrajectoryRecord {
  std::string id;
  traj::Trajectory trajectory;
  std::optional<context::LightState> lights;
  /// Ground-truth branch (1 = the T1 walk branch, 2 = the T2 branch), 0 when
  /// unknown.
  int branch = 0;
  /// Time at which the pedestrian enters the intersection; evaluation
  /// observes the window before it and predicts the one after it.
  std::optional<double> t_enter;
};

using Dataset = std::vector<TrajectoryRecord>;

}  // namespace casnsc
