#include "casnsc/context.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "casnsc/errors.hpp"

namespace casnsc::context {

IntersectionMap::IntersectionMap(double curb_frame_angle, Vec2 corner, Rect bounds)
    : angle_(curb_frame_angle),
      cos_(std::cos(curb_frame_angle)),
      sin_(std::sin(curb_frame_angle)),
      corner_(corner),
      bounds_(bounds) {
  validate();
}

IntersectionMap IntersectionMap::from_curbs(Vec2 corner, double curb_right_angle,
                                            double curb_left_angle, Rect bounds,
                                            double tol) {
  const double diff = std::remainder(curb_left_angle - curb_right_angle,
                                     2.0 * std::numbers::pi);
  if (std::abs(diff - 0.5 * std::numbers::pi) > tol) {
    throw ConfigError("curb lines must be orthogonal with curb_left at +90 degrees "
                      "from curb_right (got " +
                      std::to_string(diff * 180.0 / std::numbers::pi) + " degrees)");
  }
  return IntersectionMap(curb_right_angle, corner, bounds);
}

Line IntersectionMap::curb_left() const { return {corner_, y_axis()}; }
Line IntersectionMap::curb_right() const { return {corner_, x_axis()}; }

Vec2 IntersectionMap::from_curb_frame(Vec2 local) const {
  return {corner_.x + cos_ * local.x - sin_ * local.y,
          corner_.y + sin_ * local.x + cos_ * local.y};
}

void IntersectionMap::validate() const {
  if (!std::isfinite(angle_) || !std::isfinite(corner_.x) || !std::isfinite(corner_.y)) {
    throw ConfigError("intersection map has non-finite geometry");
  }
  if (!(bounds_.max_x > bounds_.min_x) || !(bounds_.max_y > bounds_.min_y)) {
    throw ConfigError("intersection map bounds must have positive extent");
  }
}

void LightState::validate() const {
  if (t1 != 0 && t1 != 1) throw InvalidInput("light t1 must be 0 or 1");
  if (t2) {
    if (*t2 != 0 && *t2 != 1) throw InvalidInput("light t2 must be 0 or 1");
    if (*t2 != 1 - t1) {
      throw InvalidInput("pedestrian lights must be complementary (t1=" +
                         std::to_string(t1) + ", t2=" + std::to_string(*t2) + ")");
    }
  }
}

LightState LightState::flipped() const { return from_tr(1 - t1); }

std::size_t feature_dim(FeatureSet fs) { return fs == FeatureSet::ASNSC ? 2 : 3; }

bool needs_map(FeatureSet fs) {
  return fs == FeatureSet::CASNSC2 || fs == FeatureSet::CASNSC3;
}

bool needs_lights(FeatureSet fs) { return fs != FeatureSet::ASNSC; }

std::string_view to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::ASNSC: return "ASNSC";
    case FeatureSet::CASNSC1: return "CASNSC-1";
    case FeatureSet::CASNSC2: return "CASNSC-2";
    case FeatureSet::CASNSC3: return "CASNSC-3";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view s) {
  std::string key;
  for (char c : s) {
    if (c == '-' || c == '_') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "asnsc") return FeatureSet::ASNSC;
  if (key == "casnsc1") return FeatureSet::CASNSC1;
  if (key == "casnsc2") return FeatureSet::CASNSC2;
  if (key == "casnsc3") return FeatureSet::CASNSC3;
  throw ConfigError("unknown feature set '" + std::string(s) +
                    "' (expected asnsc, casnsc1, casnsc2 or casnsc3)");
}

Vec2 rotate_to_curb_frame(double x, double y, const IntersectionMap& map) {
  const double dx = x - map.corner().x;
  const double dy = y - map.corner().y;
  const Vec2 ex = map.x_axis();
  const Vec2 ey = map.y_axis();
  return {ex.x * dx + ex.y * dy, ey.x * dx + ey.y * dy};
}

CurbDistances signed_curb_distances(double x, double y, const IntersectionMap& map) {
  // Perpendicular distance to a line through the corner is the projection on
  // the line's normal, which for these curbs is the other frame axis.
  const Vec2 local = rotate_to_curb_frame(x, y, map);
  return {local.x, local.y};
}

Eigen::VectorXd extract_features(double x, double y, const LightState& lights,
                                 const IntersectionMap* map, FeatureSet fs) {
  if (needs_map(fs) && map == nullptr) {
    throw ConfigError(std::string("feature set ") + std::string(to_string(fs)) +
                      " requires an intersection map");
  }
  Eigen::VectorXd f(static_cast<Eigen::Index>(feature_dim(fs)));
  switch (fs) {
    case FeatureSet::ASNSC:
      f << x, y;
      break;
    case FeatureSet::CASNSC1:
      f << x, y, lights.tr();
      break;
    case FeatureSet::CASNSC2: {
      const Vec2 r = rotate_to_curb_frame(x, y, *map);
      f << r.x, r.y, lights.tr();
      break;
    }
    case FeatureSet::CASNSC3: {
      const CurbDistances c = signed_curb_distances(x, y, *map);
      f << c.c_l, c.c_r, lights.tr();
      break;
    }
  }
  return f;
}

}  // namespace casnsc::context
