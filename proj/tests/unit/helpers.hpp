#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "casnsc/trajkit.hpp"

namespace casnsc::fixtures {

/// Straight path from (x0, y0) with constant velocity, samples every dt.
inline traj::Trajectory line(double x0, double y0, double vx, double vy, double dt,
                             std::size_t samples, double t0 = 0.0) {
  traj::Trajectory t;
  for (std::size_t i = 0; i < samples; ++i) {
    const double s = static_cast<double>(i) * dt;
    t.points.push_back({t0 + s, x0 + vx * s, y0 + vy * s});
  }
  return t;
}

/// Random walk with positive speed that stays inside [lo, hi]^2.
inline traj::Trajectory random_walk(std::mt19937_64& rng, double lo, double hi,
                                    std::size_t samples, double dt) {
  std::uniform_real_distribution<double> pos(lo + 1.0, hi - 1.0);
  std::normal_distribution<double> turn(0.0, 0.4);
  traj::Trajectory t;
  double x = pos(rng), y = pos(rng), heading = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    t.points.push_back({static_cast<double>(i) * dt, x, y});
    heading += turn(rng);
    double nx = x + 0.7 * std::cos(heading);
    double ny = y + 0.7 * std::sin(heading);
    if (nx < lo + 0.1 || nx > hi - 0.1 || ny < lo + 0.1 || ny > hi - 0.1) {
      heading += 3.14159;
      nx = x + 0.7 * std::cos(heading);
      ny = y + 0.7 * std::sin(heading);
    }
    x = std::clamp(nx, lo + 0.05, hi - 0.05);
    y = std::clamp(ny, lo + 0.05, hi - 0.05);
  }
  return t;
}

}  // namespace casnsc::fixtures
