#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "casnsc/context.hpp"
#include "casnsc/errors.hpp"

using namespace casnsc;
using namespace casnsc::context;

namespace {

constexpr double kPi = std::numbers::pi;
const Rect kBounds{-50, -50, 50, 50};

IntersectionMap map_at(double angle, Vec2 corner = {0, 0}) {
  return IntersectionMap(angle, corner, kBounds);
}

Vec2 rotate(Vec2 p, double ang) {
  return {std::cos(ang) * p.x - std::sin(ang) * p.y, std::sin(ang) * p.x + std::cos(ang) * p.y};
}

}  // namespace

TEST(RotateToCurbFrame, ZeroAngleIsIdentity) {
  const auto m = map_at(0.0);
  const auto p = rotate_to_curb_frame(2.5, -1.25, m);
  EXPECT_DOUBLE_EQ(p.x, 2.5);
  EXPECT_DOUBLE_EQ(p.y, -1.25);
}

TEST(RotateToCurbFrame, QuarterTurn) {
  const auto p = rotate_to_curb_frame(1.0, 0.0, map_at(kPi / 2));
  EXPECT_NEAR(p.x, 0.0, 1e-15);
  EXPECT_NEAR(p.y, -1.0, 1e-15);
}

TEST(RotateToCurbFrame, PreservesDistanceToCorner) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 100; ++i) {
    const Vec2 c{u(rng), u(rng)};
    const auto m = map_at(u(rng), c);
    const double x = u(rng), y = u(rng);
    const auto p = rotate_to_curb_frame(x, y, m);
    EXPECT_NEAR(std::hypot(p.x, p.y), std::hypot(x - c.x, y - c.y), 1e-12);
  }
}

TEST(SignedCurbDistances, Examples) {
  const auto m = map_at(0.3, {4, -2});
  const auto at_corner = signed_curb_distances(4, -2, m);
  EXPECT_EQ(at_corner.c_l, 0.0);
  EXPECT_EQ(at_corner.c_r, 0.0);
  const auto d = signed_curb_distances(2, 3, map_at(0.0));
  EXPECT_DOUBLE_EQ(d.c_l, 2.0);
  EXPECT_DOUBLE_EQ(d.c_r, 3.0);
}

TEST(SignedCurbDistances, RigidMotionInvariance) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-10, 10);
  for (double deg : {37.0, 90.0}) {
    const double ang = deg * kPi / 180.0;
    for (int i = 0; i < 50; ++i) {
      const Vec2 corner{u(rng), u(rng)};
      const double theta = u(rng);
      const Vec2 p{u(rng), u(rng)};
      const Vec2 shift{u(rng), u(rng)};
      const auto before = signed_curb_distances(p.x, p.y, map_at(theta, corner));
      const Vec2 c2 = rotate(corner, ang), p2 = rotate(p, ang);
      const auto m2 = map_at(theta + ang, {c2.x + shift.x, c2.y + shift.y});
      const auto after = signed_curb_distances(p2.x + shift.x, p2.y + shift.y, m2);
      EXPECT_NEAR(before.c_l, after.c_l, 1e-9);
      EXPECT_NEAR(before.c_r, after.c_r, 1e-9);
    }
  }
}

TEST(SignedCurbDistances, DistanceToCurbLines) {
  // |c_l| is the perpendicular distance to curb_left, |c_r| to curb_right.
  const auto m = map_at(0.8, {1, 2});
  const double x = 5, y = -3;
  const auto d = signed_curb_distances(x, y, m);
  auto dist_to = [&](const Line& l) {
    const double rx = x - l.point.x, ry = y - l.point.y;
    return std::abs(rx * l.direction.y - ry * l.direction.x);
  };
  EXPECT_NEAR(std::abs(d.c_l), dist_to(m.curb_left()), 1e-12);
  EXPECT_NEAR(std::abs(d.c_r), dist_to(m.curb_right()), 1e-12);
}

TEST(ExtractFeatures, Examples) {
  const auto on = LightState::from_tr(1);
  const auto f1 = extract_features(1, 2, on, nullptr, FeatureSet::CASNSC1);
  ASSERT_EQ(f1.size(), 3);
  EXPECT_EQ(f1[0], 1.0);
  EXPECT_EQ(f1[1], 2.0);
  EXPECT_EQ(f1[2], 1.0);

  const auto m0 = map_at(0.0);
  const auto f2 = extract_features(1, 2, on, &m0, FeatureSet::CASNSC2);
  EXPECT_EQ(f2, f1);

  const auto m = map_at(1.1, {3, 4});
  const auto f3 = extract_features(3, 4, LightState::from_tr(0), &m, FeatureSet::CASNSC3);
  EXPECT_EQ(f3, Eigen::Vector3d(0, 0, 0));

  const auto fa = extract_features(1, 2, on, nullptr, FeatureSet::ASNSC);
  EXPECT_EQ(fa.size(), 2);
}

TEST(ExtractFeatures, MissingMapIsConfigError) {
  const auto on = LightState::from_tr(1);
  EXPECT_THROW(extract_features(0, 0, on, nullptr, FeatureSet::CASNSC2), ConfigError);
  EXPECT_THROW(extract_features(0, 0, on, nullptr, FeatureSet::CASNSC3), ConfigError);
}

TEST(ExtractFeatures, Casnsc2IsFixedRigidMapOfCasnsc1) {
  const auto m = map_at(0.6, {2, -1});
  const auto l = LightState::from_tr(0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 20; ++i) {
    const double x = u(rng), y = u(rng);
    const auto f1 = extract_features(x, y, l, &m, FeatureSet::CASNSC1);
    const auto f2 = extract_features(x, y, l, &m, FeatureSet::CASNSC2);
    const Vec2 back = m.from_curb_frame({f2[0], f2[1]});
    EXPECT_NEAR(back.x, f1[0], 1e-12);
    EXPECT_NEAR(back.y, f1[1], 1e-12);
    EXPECT_EQ(f1[2], f2[2]);
  }
}

TEST(ExtractFeatures, TrDependsOnlyOnLights) {
  const auto m = map_at(0.2);
  for (auto fs : {FeatureSet::CASNSC1, FeatureSet::CASNSC2, FeatureSet::CASNSC3}) {
    for (int t1 : {0, 1}) {
      EXPECT_EQ(extract_features(-7, 3, LightState::from_tr(t1), &m, fs)[2], t1);
      EXPECT_EQ(extract_features(9, 1, LightState::from_tr(t1), &m, fs)[2], t1);
    }
  }
}

TEST(IntersectionMap, FromCurbsRequiresOrthogonalCurbs) {
  EXPECT_NO_THROW(IntersectionMap::from_curbs({0, 0}, 0.5, 0.5 + kPi / 2, kBounds));
  EXPECT_THROW(IntersectionMap::from_curbs({0, 0}, 0.5, 0.5 + 1.2, kBounds), ConfigError);
}

TEST(LightStateTest, Validation) {
  EXPECT_NO_THROW((LightState{1, 0}.validate()));
  EXPECT_NO_THROW((LightState{0, std::nullopt}.validate()));
  EXPECT_THROW((LightState{1, 1}.validate()), InvalidInput);
  EXPECT_THROW((LightState{0, 0}.validate()), InvalidInput);
  EXPECT_THROW((LightState{2, std::nullopt}.validate()), InvalidInput);
  EXPECT_EQ(LightState::from_tr(1).flipped().t1, 0);
}

TEST(FeatureSetTest, DimensionsAndParsing) {
  EXPECT_EQ(feature_dim(FeatureSet::ASNSC), 2u);
  EXPECT_EQ(feature_dim(FeatureSet::CASNSC3), 3u);
  EXPECT_EQ(parse_feature_set("CASNSC-2"), FeatureSet::CASNSC2);
  EXPECT_EQ(parse_feature_set("asnsc"), FeatureSet::ASNSC);
  EXPECT_THROW(parse_feature_set("casnsc9"), Error);
}
