#pragma once

// Context-aware trajectory prediction on top of a learned motion-primitive
// dictionary.
//
// Training: grid-encode the trajectories, learn the dictionary, segment every
// trajectory into atom runs and count transitions. Every atom gets a unitary
// GP motion pattern; every observed transition i -> j (i != j) gets a
// transitional pattern trained on the full trajectories exhibiting it. GP
// inputs are the transition features of the chosen feature set.
//
// Prediction: pick the unitary pattern that best explains the observed
// prefix (initial atom k), then roll out one hypothesis per successor j with
// T(k, j) > 0, weighted by T(k, j) / sum_j T(k, j) * P(observed | pattern kj).

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "casnsc/context.hpp"
#include "casnsc/dataset.hpp"
#include "casnsc/dictionary.hpp"
#include "casnsc/gproc.hpp"
#include "casnsc/trajkit.hpp"

namespace casnsc::predict {

using dict::AtomId;
using traj::Vec2;

enum class UnitaryMode {
  AllSegments,  // every run labeled k, from any trajectory
  SingleRun,    // only trajectories that consist of a single run [k]
};

struct TrainConfig {
  double dt = traj::kDefaultDt;
  double cell_width = traj::kDefaultCellWidth;
  /// Explicit grid; otherwise derived from the map bounds or the data extent.
  std::optional<traj::GridSpec> grid;

  double lambda = 0.05;
  std::size_t k_max = 8;
  std::size_t solver_iters = 300;
  double solver_tol = 1e-7;

  std::size_t gp_restarts = 2;
  std::size_t gp_iters = 80;
  double gp_noise_std = 0.1;
  std::size_t gp_max_points = 2000;

  UnitaryMode unitary_mode = UnitaryMode::AllSegments;
  std::uint64_t seed = 0;
};

struct TrainedModel {
  traj::GridSpec grid;
  dict::DictionaryModel dictionary;
  dict::TransitionMatrix transitions;
  context::FeatureSet feature_set = context::FeatureSet::ASNSC;
  std::optional<context::IntersectionMap> map;
  std::map<AtomId, gp::GPMotionPattern> unitary;
  std::map<std::pair<AtomId, AtomId>, gp::GPMotionPattern> transitional;
  TrainConfig config;

  /// Pattern used to roll out i -> j: the unitary pattern when i == j.
  const gp::GPMotionPattern& pattern(AtomId from, AtomId to) const;
  /// Map bounds when available, otherwise the grid extent.
  context::Rect rollout_bounds() const;
};

/// Diagnostics collected while training.
struct TrainStats {
  dict::SolverStats solver;
  std::size_t trajectories = 0;
  std::size_t fallback_patterns = 0;  // GPs whose optimizer fell back to init
  std::size_t unitary_fallbacks = 0;  // SingleRun atoms trained on segments
};

TrainedModel train(const Dataset& dataset, const context::IntersectionMap* map,
                   context::FeatureSet fs, const TrainConfig& config,
                   TrainStats* stats = nullptr);

/// Grid covering `bounds` with the given cell width.
traj::GridSpec grid_for_bounds(const context::Rect& bounds, double cell_width);

/// Observed prefix t' with the light state it was recorded under.
struct Observation {
  traj::Trajectory trajectory;
  context::LightState lights;
};

/// (features, unit velocity) pairs of an observation, resampled at the model
/// step. Samples with zero speed are skipped.
std::vector<gp::MotionSample> observed_samples(const Observation& obs,
                                               const TrainedModel& model);

/// argmax_k of the observed prefix's log-likelihood under unitary pattern k,
/// ties to the lowest id.
AtomId classify_initial_atom(const Observation& obs, const TrainedModel& model);

struct Hypothesis {
  AtomId atom = 0;
  std::vector<Vec2> rollout;     // start point followed by one point per step
  std::vector<double> var_x;     // per-step predictive velocity variance
  std::vector<double> var_y;
  double log_likelihood = 0.0;   // of the observed prefix under the pattern
  double weight = 0.0;
  bool truncated = false;        // left the map bounds before the horizon
};

struct Prediction {
  std::vector<Hypothesis> hypotheses;
  traj::Trajectory observed;
  AtomId initial_atom = 0;
  double speed = 0.0;  // observed mean speed, m/s
  double dt = 0.0;
  std::size_t steps = 0;
};

/// Throws InvalidInput unless horizon / dt is a positive integer.
Prediction predict(const Observation& obs, const TrainedModel& model, double horizon,
                   double dt);

/// Index of the hypothesis with the largest weight (lowest index on ties).
std::size_t argmax_hypothesis(const Prediction& p);

}  // namespace casnsc::predict
