#pragma once

// Trajectories and their grid-world encoding.
//
// A trajectory is vectorized on an M x N grid of square cells into a vector
// of length p = 3MN laid out as [vx; vy; a]: per-cell unit-normalized mean
// velocity and an activeness flag.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace casnsc::traj {

struct TimedPoint {
  double t = 0.0;  // seconds
  double x = 0.0;  // meters
  double y = 0.0;  // meters
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Timestamped 2-D path. Invariant after validate(): >= 2 points and
/// strictly increasing timestamps.
struct Trajectory {
  std::vector<TimedPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  double duration() const {
    return points.empty() ? 0.0 : points.back().t - points.front().t;
  }
  /// Throws InvalidInput unless the trajectory has >= 2 finite points with
  /// strictly increasing time.
  void validate() const;
};

/// Uniform square-cell grid. Cell (row, col) covers
/// [origin.x + col*w, origin.x + (col+1)*w) x [origin.y + row*w, ...).
struct GridSpec {
  std::size_t rows = 1;
  std::size_t cols = 1;
  double cell_width = 1.0;
  Vec2 origin;

  std::size_t cells() const { return rows * cols; }
  std::size_t vector_length() const { return 3 * cells(); }
  void validate() const;
};

using CellId = std::size_t;

/// Row-major cell index of (x, y). Throws OutOfGrid outside the grid.
CellId cell_index(double x, double y, const GridSpec& grid);

/// Same as cell_index but returns false instead of throwing.
bool try_cell_index(double x, double y, const GridSpec& grid, CellId& out);

struct VectorizedTrajectory {
  Eigen::VectorXd vx;
  Eigen::VectorXd vy;
  Eigen::VectorXd a;

  /// Stacked [vx; vy; a] column, length 3MN.
  Eigen::VectorXd stacked() const;
  std::size_t active_cells() const;
};

/// Linear-interpolation resampling at t0, t0 + dt, ... up to the last
/// timestamp. Throws InvalidInput for dt <= 0 or a trajectory shorter than dt.
Trajectory resample(const Trajectory& traj, double dt);

/// Finite-difference velocity per sample: forward differences, the last
/// sample reuses the previous difference.
std::vector<Vec2> sample_velocities(const Trajectory& traj);

/// Grid encoding of a (resampled) trajectory: per visited cell, the mean of
/// the sample velocities falling in the cell, unit-normalized. Cells whose
/// mean velocity is below kMinCellSpeed are left inactive.
VectorizedTrajectory vectorize(const Trajectory& traj, const GridSpec& grid);

/// Distinct cells visited, in time order, consecutive repeats collapsed.
std::vector<CellId> visited_cells(const Trajectory& traj, const GridSpec& grid);

/// Cell of each sample, in sample order.
std::vector<CellId> sample_cells(const Trajectory& traj, const GridSpec& grid);

inline constexpr double kMinCellSpeed = 1e-9;
inline constexpr double kDefaultDt = 0.5;
inline constexpr double kDefaultCellWidth = 1.0;

}  // namespace casnsc::traj
