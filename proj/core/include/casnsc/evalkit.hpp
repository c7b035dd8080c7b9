#pragma once

// Evaluation metrics: likelihood-weighted classification accuracy, weighted
// modified Hausdorff distance and the swept-band AUC.
//
// AUC of one prediction is
//
//   sum_j w_j * sum_t 2 * k * sigma_pos_j(t) * step_len_j(t)
//
// with sigma_pos_j(t)^2 = sum_{tau <= t} (var_x + var_y)(tau) * speed^2 * dt^2
// and k the band half-width in standard deviations (default 1).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "casnsc/predictor.hpp"
#include "casnsc/trajkit.hpp"

namespace casnsc::eval {

using traj::Vec2;

inline constexpr double kDefaultAngularThreshold = 40.0;  // degrees

struct EvalRecord {
  predict::Prediction prediction;
  traj::Trajectory ground_truth;  // the actual future
  double angular_threshold = kDefaultAngularThreshold;
};

/// Modified Hausdorff distance: max of the two directed mean nearest-point
/// distances. Throws InvalidInput on empty input.
double mhd(std::span<const Vec2> a, std::span<const Vec2> b);

/// Angle in degrees between the net displacements of two paths. Throws
/// UndefinedDirection when either displacement is zero.
double angular_deviation(std::span<const Vec2> pred, std::span<const Vec2> truth);

std::vector<Vec2> positions(const traj::Trajectory& t);

/// Strict comparison: a deviation equal to the threshold is incorrect.
bool hypothesis_correct(const predict::Hypothesis& h, const traj::Trajectory& truth,
                        double threshold_deg);

/// Pooled accuracy in percent: per record, weights are normalized, then the
/// correct share is summed over records and divided by the record count.
double classification_accuracy(std::span<const EvalRecord> records);

double weighted_mhd(const EvalRecord& record);

double auc(const EvalRecord& record, double band_sigmas = 1.0);

struct TrajectoryMetrics {
  std::string id;
  double accuracy = 0.0;  // percent
  double mhd = 0.0;
  double auc = 0.0;
  double compute_time = 0.0;  // seconds
  std::size_t hypotheses = 0;
  std::size_t initial_atom = 0;
};

struct MetricsReport {
  std::string model;
  double classification_accuracy = 0.0;
  double weighted_mhd = 0.0;
  double auc = 0.0;
  double mean_compute_time = 0.0;
  std::vector<TrajectoryMetrics> per_trajectory;
};

/// Aggregates records into a report. `ids` and `times` are per record.
MetricsReport summarize(std::string model, std::span<const EvalRecord> records,
                        std::span<const std::string> ids, std::span<const double> times,
                        double band_sigmas = 1.0);

}  // namespace casnsc::eval
