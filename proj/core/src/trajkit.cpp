#include "casnsc/trajkit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "casnsc/errors.hpp"

namespace casnsc::traj {

void Trajectory::validate() const {
  if (points.size() < 2) {
    throw InvalidInput("trajectory needs at least 2 points, got " +
                       std::to_string(points.size()));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.t) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw InvalidInput("non-finite trajectory sample at index " +
                         std::to_string(i));
    }
    if (i > 0 && !(p.t > points[i - 1].t)) {
      throw InvalidInput("timestamps must be strictly increasing (index " +
                         std::to_string(i) + ")");
    }
  }
}

void GridSpec::validate() const {
  if (rows < 1 || cols < 1) throw InvalidInput("grid needs rows, cols >= 1");
  if (!(cell_width > 0.0) || !std::isfinite(cell_width)) {
    throw InvalidInput("grid cell width must be positive");
  }
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw InvalidInput("grid origin must be finite");
  }
}

bool try_cell_index(double x, double y, const GridSpec& grid, CellId& out) {
  const double u = (x - grid.origin.x) / grid.cell_width;
  const double v = (y - grid.origin.y) / grid.cell_width;
  if (!(u >= 0.0) || !(v >= 0.0)) return false;
  const double col = std::floor(u);
  const double row = std::floor(v);
  if (col >= static_cast<double>(grid.cols) ||
      row >= static_cast<double>(grid.rows)) {
    return false;
  }
  out = static_cast<CellId>(row) * grid.cols + static_cast<CellId>(col);
  return true;
}

CellId cell_index(double x, double y, const GridSpec& grid) {
  CellId id = 0;
  if (!try_cell_index(x, y, grid, id)) {
    std::ostringstream msg;
    msg << "point (" << x << ", " << y << ") lies outside the " << grid.rows
        << "x" << grid.cols << " grid at origin (" << grid.origin.x << ", "
        << grid.origin.y << ") with cell width " << grid.cell_width;
    throw OutOfGrid(msg.str());
  }
  return id;
}

Eigen::VectorXd VectorizedTrajectory::stacked() const {
  Eigen::VectorXd z(vx.size() + vy.size() + a.size());
  z << vx, vy, a;
  return z;
}

std::size_t VectorizedTrajectory::active_cells() const {
  return static_cast<std::size_t>((a.array() > 0.0).count());
}

Trajectory resample(const Trajectory& traj, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidInput("resample step must be positive");
  }
  traj.validate();
  const double t0 = traj.points.front().t;
  const double span = traj.duration();
  if (span + 1e-9 < dt) {
    throw InvalidInput("trajectory spans less than one resampling step");
  }
  const auto steps = static_cast<std::size_t>(std::floor(span / dt + 1e-9));

  Trajectory out;
  out.points.reserve(steps + 1);
  std::size_t seg = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (seg + 2 < traj.points.size() && traj.points[seg + 1].t <= t) ++seg;
    const auto& p0 = traj.points[seg];
    const auto& p1 = traj.points[seg + 1];
    const double alpha = std::clamp((t - p0.t) / (p1.t - p0.t), 0.0, 1.0);
    out.points.push_back({t, p0.x + alpha * (p1.x - p0.x),
                          p0.y + alpha * (p1.y - p0.y)});
  }
  return out;
}

std::vector<Vec2> sample_velocities(const Trajectory& traj) {
  traj.validate();
  const auto& pts = traj.points;
  std::vector<Vec2> vel(pts.size());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double h = pts[i + 1].t - pts[i].t;
    vel[i] = {(pts[i + 1].x - pts[i].x) / h, (pts[i + 1].y - pts[i].y) / h};
  }
  vel.back() = vel[pts.size() - 2];
  return vel;
}

std::vector<CellId> sample_cells(const Trajectory& traj, const GridSpec& grid) {
  std::vector<CellId> cells;
  cells.reserve(traj.size());
  for (const auto& p : traj.points) cells.push_back(cell_index(p.x, p.y, grid));
  return cells;
}

std::vector<CellId> visited_cells(const Trajectory& traj, const GridSpec& grid) {
  std::vector<CellId> order;
  for (CellId c : sample_cells(traj, grid)) {
    if (order.empty() || order.back() != c) order.push_back(c);
  }
  return order;
}

VectorizedTrajectory vectorize(const Trajectory& traj, const GridSpec& grid) {
  grid.validate();
  traj.validate();
  const auto cells = sample_cells(traj, grid);
  const auto vel = sample_velocities(traj);

  const auto n = static_cast<Eigen::Index>(grid.cells());
  Eigen::VectorXd sx = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sy = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(cells[i]);
    sx[c] += vel[i].x;
    sy[c] += vel[i].y;
    count[c] += 1.0;
  }

  VectorizedTrajectory out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
                           Eigen::VectorXd::Zero(n)};
  for (Eigen::Index c = 0; c < n; ++c) {
    if (count[c] == 0.0) continue;
    const double mx = sx[c] / count[c];
    const double my = sy[c] / count[c];
    const double norm = std::hypot(mx, my);
    if (norm < kMinCellSpeed) continue;
    out.vx[c] = mx / norm;
    out.vy[c] = my / norm;
    out.a[c] = 1.0;
  }
  return out;
}

}  // namespace casnsc::traj
