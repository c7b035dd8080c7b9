#pragma once

// SVG overlays in the style of the paper's qualitative figures: curbs green,
// training trajectories gray, observed prefix pink, ground truth dashed,
// predicted hypotheses red (opacity follows the weight).

#include <optional>
#include <string>
#include <vector>

#include "casnsc/context.hpp"
#include "casnsc/predictor.hpp"
#include "casnsc/trajkit.hpp"

namespace casnsc::svg {

struct Scene {
  context::Rect bounds;
  std::optional<context::IntersectionMap> map;
  std::vector<traj::Trajectory> training;
  std::optional<traj::Trajectory> observed;
  std::optional<traj::Trajectory> truth;
  std::optional<predict::Prediction> prediction;
  std::string title;
};

std::string render(const Scene& scene, double pixels_per_meter = 12.0);

}  // namespace casnsc::svg
