#include "casnsc/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "casnsc/errors.hpp"

namespace casnsc::eval {

namespace {

double directed_mean(std::span<const Vec2> from, std::span<const Vec2> to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

double weight_total(const predict::Prediction& p) {
  if (p.hypotheses.empty()) throw InvalidInput("prediction has no hypotheses");
  double total = 0.0;
  for (const auto& h : p.hypotheses) {
    if (!(h.weight >= 0.0)) throw InvalidInput("hypothesis weights must be nonnegative");
    total += h.weight;
  }
  if (!(total > 0.0)) throw InvalidInput("hypothesis weights sum to zero");
  return total;
}

}  // namespace

double mhd(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.empty() || b.empty()) throw InvalidInput("mhd needs two non-empty point sets");
  return std::max(directed_mean(a, b), directed_mean(b, a));
}

double angular_deviation(std::span<const Vec2> pred, std::span<const Vec2> truth) {
  if (pred.size() < 2 || truth.size() < 2) {
    throw InvalidInput("angular deviation needs at least 2 points per path");
  }
  const double px = pred.back().x - pred.front().x;
  const double py = pred.back().y - pred.front().y;
  const double tx = truth.back().x - truth.front().x;
  const double ty = truth.back().y - truth.front().y;
  if (std::hypot(px, py) == 0.0 || std::hypot(tx, ty) == 0.0) {
    throw UndefinedDirection("zero net displacement");
  }
  const double ang = std::atan2(px * ty - py * tx, px * tx + py * ty);
  return std::abs(ang) * 180.0 / std::numbers::pi;
}

std::vector<Vec2> positions(const traj::Trajectory& t) {
  std::vector<Vec2> out;
  out.reserve(t.points.size());
  for (const auto& p : t.points) out.push_back({p.x, p.y});
  return out;
}

bool hypothesis_correct(const predict::Hypothesis& h, const traj::Trajectory& truth,
                        double threshold_deg) {
  const auto gt = positions(truth);
  try {
    return angular_deviation(h.rollout, gt) < threshold_deg;
  } catch (const UndefinedDirection&) {
    return false;
  }
}

double classification_accuracy(std::span<const EvalRecord> records) {
  if (records.empty()) return 0.0;
  double correct = 0.0;
  for (const auto& r : records) {
    const double total = weight_total(r.prediction);
    for (const auto& h : r.prediction.hypotheses) {
      if (hypothesis_correct(h, r.ground_truth, r.angular_threshold)) {
        correct += h.weight / total;
      }
    }
  }
  return 100.0 * correct / static_cast<double>(records.size());
}

double weighted_mhd(const EvalRecord& record) {
  const double total = weight_total(record.prediction);
  const auto gt = positions(record.ground_truth);
  double out = 0.0;
  for (const auto& h : record.prediction.hypotheses) {
    out += h.weight / total * mhd(h.rollout, gt);
  }
  return out;
}

double auc(const EvalRecord& record, double band_sigmas) {
  const auto& p = record.prediction;
  const double total = weight_total(p);
  const double scale = p.speed * p.speed * p.dt * p.dt;
  double out = 0.0;
  for (const auto& h : p.hypotheses) {
    const std::size_t steps = h.rollout.empty() ? 0 : h.rollout.size() - 1;
    if (h.var_x.size() != steps || h.var_y.size() != steps) {
      throw InvalidInput("hypothesis lacks per-step predictive variances");
    }
    double var_pos = 0.0;
    double area = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      var_pos += (h.var_x[t] + h.var_y[t]) * scale;
      const double len =
          std::hypot(h.rollout[t + 1].x - h.rollout[t].x, h.rollout[t + 1].y - h.rollout[t].y);
      area += 2.0 * band_sigmas * std::sqrt(var_pos) * len;
    }
    out += h.weight / total * area;
  }
  return out;
}

MetricsReport summarize(std::string model, std::span<const EvalRecord> records,
                        std::span<const std::string> ids, std::span<const double> times,
                        double band_sigmas) {
  if (ids.size() != records.size() || times.size() != records.size()) {
    throw InvalidInput("summarize: ids/times must match the record count");
  }
  MetricsReport rep;
  rep.model = std::move(model);
  if (records.empty()) return rep;
  for (std::size_t i = 0; i < records.size(); ++i) {
    TrajectoryMetrics m;
    m.id = ids[i];
    m.accuracy = classification_accuracy(records.subspan(i, 1));
    m.mhd = weighted_mhd(records[i]);
    m.auc = auc(records[i], band_sigmas);
    m.compute_time = times[i];
    m.hypotheses = records[i].prediction.hypotheses.size();
    m.initial_atom = records[i].prediction.initial_atom;
    rep.weighted_mhd += m.mhd;
    rep.auc += m.auc;
    rep.mean_compute_time += m.compute_time;
    rep.per_trajectory.push_back(std::move(m));
  }
  const double n = static_cast<double>(records.size());
  rep.classification_accuracy = classification_accuracy(records);
  rep.weighted_mhd /= n;
  rep.auc /= n;
  rep.mean_compute_time /= n;
  return rep;
}

}  // namespace casnsc::eval
