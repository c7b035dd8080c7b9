#pragma once

// Intersection context: curb geometry, pedestrian lights, and the transition
// feature vectors fed to the GP motion patterns.
//
//   ASNSC    -> (x, y)
//   CASNSC1  -> (x, y, tr)
//   CASNSC2  -> (x', y', tr)     position in the curb-aligned frame
//   CASNSC3  -> (c_l, c_r, tr)   signed distances to the two curb lines

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "casnsc/trajkit.hpp"

namespace casnsc::context {

using traj::Vec2;

struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(Vec2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

/// Directed infinite line.
struct Line {
  Vec2 point;
  Vec2 direction;  // unit length
};

/// Two orthogonal curb lines meeting at `corner`. The curb frame x_c axis
/// points along curb_right at angle curb_frame_angle from global x; y_c is
/// x_c rotated by +90 degrees and runs along curb_left.
class IntersectionMap {
 public:
  IntersectionMap() = default;
  IntersectionMap(double curb_frame_angle, Vec2 corner, Rect bounds);

  /// Builds a map from two curb directions; throws ConfigError unless they
  /// are orthogonal (within `tol` radians) with curb_left = curb_right + 90deg.
  static IntersectionMap from_curbs(Vec2 corner, double curb_right_angle,
                                    double curb_left_angle, Rect bounds,
                                    double tol = 1e-9);

  double curb_frame_angle() const { return angle_; }
  Vec2 corner() const { return corner_; }
  const Rect& bounds() const { return bounds_; }
  Line curb_left() const;
  Line curb_right() const;
  Vec2 x_axis() const { return {cos_, sin_}; }
  Vec2 y_axis() const { return {-sin_, cos_}; }

  /// Global position of a curb-frame point.
  Vec2 from_curb_frame(Vec2 local) const;

  void validate() const;

 private:
  double angle_ = 0.0;
  double cos_ = 1.0;
  double sin_ = 0.0;
  Vec2 corner_;
  Rect bounds_;
};

/// Complementary pedestrian lights collapsed to one bit: tr = t1.
struct LightState {
  int t1 = 0;
  std::optional<int> t2;

  /// Throws InvalidInput unless t1 in {0,1} and, when given, t2 = 1 - t1.
  void validate() const;
  double tr() const { return static_cast<double>(t1); }
  LightState flipped() const;
  static LightState from_tr(int t1) { return LightState{t1, 1 - t1}; }
};

enum class FeatureSet { ASNSC, CASNSC1, CASNSC2, CASNSC3 };

std::size_t feature_dim(FeatureSet fs);
bool needs_map(FeatureSet fs);
bool needs_lights(FeatureSet fs);
std::string_view to_string(FeatureSet fs);
/// Accepts "asnsc", "casnsc1", "casnsc-1", ... (case-insensitive).
FeatureSet parse_feature_set(std::string_view s);

/// (x - corner) rotated by -curb_frame_angle.
Vec2 rotate_to_curb_frame(double x, double y, const IntersectionMap& map);

struct CurbDistances {
  double c_l = 0.0;  // signed distance to curb_left (x_c coordinate)
  double c_r = 0.0;  // signed distance to curb_right (y_c coordinate)
};
CurbDistances signed_curb_distances(double x, double y, const IntersectionMap& map);

/// Transition feature vector for one position. Throws ConfigError when the
/// feature set needs a map and none is given.
Eigen::VectorXd extract_features(double x, double y, const LightState& lights,
                                 const IntersectionMap* map, FeatureSet fs);

}  // namespace casnsc::context
