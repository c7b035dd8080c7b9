#include "casnsc/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "casnsc/errors.hpp"

namespace casnsc::predict {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t pattern_seed(std::uint64_t seed, AtomId from, AtomId to, std::uint64_t salt) {
  return splitmix(splitmix(splitmix(seed ^ 0x5ca1ab1eULL) + from) + (to << 20) + salt);
}

struct TrackSamples {
  std::vector<gp::MotionSample> samples;
  std::vector<AtomId> labels;  // per sample
  dict::SegmentLabeling segments;
};

gp::MotionSample make_sample(const traj::TimedPoint& p, Vec2 v,
                             const context::LightState& lights,
                             const context::IntersectionMap* map, context::FeatureSet fs) {
  const double speed = std::hypot(v.x, v.y);
  return {context::extract_features(p.x, p.y, lights, map, fs), v.x / speed, v.y / speed};
}

gp::GPMotionPattern fit_pattern(const std::vector<const gp::MotionSample*>& data,
                                const TrainConfig& cfg, std::uint64_t seed,
                                TrainStats& stats) {
  const auto idx = gp::subsample_indices(data.size(), cfg.gp_max_points, seed);
  const auto n = static_cast<Eigen::Index>(idx.size());
  const auto m = data.front()->features.size();
  Eigen::MatrixXd X(n, m);
  Eigen::VectorXd vx(n), vy(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& s = *data[idx[static_cast<std::size_t>(r)]];
    X.row(r) = s.features.transpose();
    vx[r] = s.vx;
    vy[r] = s.vy;
  }

  const gp::Hyperparams init = gp::default_init(X, cfg.gp_noise_std);
  gp::OptimizerOptions opts;
  opts.max_iters = cfg.gp_iters;
  auto hx = init;
  auto hy = init;
  if (n >= 2) {
    const auto rx = gp::optimize_hyperparams(X, vx, init, cfg.gp_restarts, splitmix(seed + 1), opts);
    const auto ry = gp::optimize_hyperparams(X, vy, init, cfg.gp_restarts, splitmix(seed + 2), opts);
    hx = rx.hyperparams;
    hy = ry.hyperparams;
    stats.fallback_patterns += rx.fell_back_to_init + ry.fell_back_to_init;
  }
  return {gp::GPRegressor::fit(X, vx, hx), gp::GPRegressor::fit(X, vy, hy)};
}

context::Rect data_extent(const std::vector<traj::Trajectory>& tracks) {
  context::Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  for (const auto& t : tracks) {
    for (const auto& p : t.points) {
      r.min_x = std::min(r.min_x, p.x);
      r.min_y = std::min(r.min_y, p.y);
      r.max_x = std::max(r.max_x, p.x);
      r.max_y = std::max(r.max_y, p.y);
    }
  }
  return r;
}

}  // namespace

traj::GridSpec grid_for_bounds(const context::Rect& bounds, double cell_width) {
  if (!(cell_width > 0.0)) throw InvalidInput("cell width must be positive");
  traj::GridSpec g;
  g.cell_width = cell_width;
  g.origin = {bounds.min_x, bounds.min_y};
  // One extra column/row so points on the max edge stay inside.
  g.cols = static_cast<std::size_t>(std::floor(bounds.width() / cell_width)) + 1;
  g.rows = static_cast<std::size_t>(std::floor(bounds.height() / cell_width)) + 1;
  return g;
}

const gp::GPMotionPattern& TrainedModel::pattern(AtomId from, AtomId to) const {
  if (from == to) {
    const auto it = unitary.find(from);
    if (it == unitary.end()) {
      throw ModelError("no unitary pattern for atom " + std::to_string(from + 1));
    }
    return it->second;
  }
  const auto it = transitional.find({from, to});
  if (it == transitional.end()) {
    throw ModelError("no transitional pattern for " + std::to_string(from + 1) + " -> " +
                     std::to_string(to + 1));
  }
  return it->second;
}

context::Rect TrainedModel::rollout_bounds() const {
  if (map) return map->bounds();
  return {grid.origin.x, grid.origin.y,
          grid.origin.x + grid.cell_width * static_cast<double>(grid.cols),
          grid.origin.y + grid.cell_width * static_cast<double>(grid.rows)};
}

TrainedModel train(const Dataset& dataset, const context::IntersectionMap* map,
                   context::FeatureSet fs, const TrainConfig& config, TrainStats* stats) {
  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  st = TrainStats{};

  if (dataset.size() < 2) throw InvalidInput("training needs at least 2 trajectories");
  if (context::needs_map(fs) && map == nullptr) {
    throw ConfigError(std::string("feature set ") + std::string(context::to_string(fs)) +
                      " requires an intersection map");
  }
  for (const auto& rec : dataset) {
    if (context::needs_lights(fs) && !rec.lights) {
      throw ConfigError(std::string("feature set ") + std::string(context::to_string(fs)) +
                        " requires light annotations; trajectory '" + rec.id +
                        "' has none");
    }
    if (rec.lights) rec.lights->validate();
  }

  TrainedModel model;
  model.feature_set = fs;
  model.config = config;
  if (map) model.map = *map;

  std::vector<traj::Trajectory> tracks;
  tracks.reserve(dataset.size());
  for (const auto& rec : dataset) tracks.push_back(traj::resample(rec.trajectory, config.dt));

  if (config.grid) {
    model.grid = *config.grid;
  } else if (map) {
    model.grid = grid_for_bounds(map->bounds(), config.cell_width);
  } else {
    auto ext = data_extent(tracks);
    ext.min_x -= config.cell_width;
    ext.min_y -= config.cell_width;
    ext.max_x += config.cell_width;
    ext.max_y += config.cell_width;
    model.grid = grid_for_bounds(ext, config.cell_width);
  }
  model.grid.validate();

  // Dictionary learning phase.
  const auto p = static_cast<Eigen::Index>(model.grid.vector_length());
  dict::SparseCodingProblem problem;
  problem.Z.resize(p, static_cast<Eigen::Index>(tracks.size()));
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    problem.Z.col(static_cast<Eigen::Index>(i)) = traj::vectorize(tracks[i], model.grid).stacked();
  }
  problem.lambda = config.lambda;
  problem.k_max = config.k_max;
  problem.max_iters = config.solver_iters;
  problem.tol = config.solver_tol;
  problem.seed = config.seed;
  model.dictionary = dict::learn_dictionary(problem, &st.solver);
  const std::size_t K = model.dictionary.atoms();
  if (K == 0) throw TrainingError("dictionary learning produced zero atoms");

  // Segmentation and per-sample GP training pairs.
  std::vector<TrackSamples> per_track(tracks.size());
  std::vector<dict::SegmentLabeling> labelings;
  labelings.reserve(tracks.size());
  const context::LightState no_lights{};
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto cells = traj::sample_cells(tracks[i], model.grid);
    std::vector<traj::CellId> order;
    std::vector<std::size_t> order_of_sample(cells.size());
    for (std::size_t s = 0; s < cells.size(); ++s) {
      if (order.empty() || order.back() != cells[s]) order.push_back(cells[s]);
      order_of_sample[s] = order.size() - 1;
    }
    auto seg = dict::assign_segments(model.dictionary.S.col(static_cast<Eigen::Index>(i)),
                                     order, model.dictionary);
    const auto vel = traj::sample_velocities(tracks[i]);
    const auto& lights = dataset[i].lights ? *dataset[i].lights : no_lights;
    auto& out = per_track[i];
    for (std::size_t s = 0; s < cells.size(); ++s) {
      if (std::hypot(vel[s].x, vel[s].y) < traj::kMinCellSpeed) continue;
      out.samples.push_back(make_sample(tracks[i].points[s], vel[s], lights, map, fs));
      out.labels.push_back(seg.cell_labels[order_of_sample[s]]);
    }
    out.segments = seg;
    labelings.push_back(std::move(seg));
  }
  model.transitions = dict::build_transition_matrix(labelings, K);
  st.trajectories = tracks.size();

  // Transition learning phase.
  std::set<AtomId> seen_atoms;
  for (const auto& lab : labelings) seen_atoms.insert(lab.runs.begin(), lab.runs.end());

  for (AtomId k : seen_atoms) {
    std::vector<const gp::MotionSample*> data;
    if (config.unitary_mode == UnitaryMode::SingleRun) {
      for (const auto& tr : per_track) {
        if (tr.segments.runs.size() == 1 && tr.segments.runs[0] == k) {
          for (const auto& s : tr.samples) data.push_back(&s);
        }
      }
      if (data.empty()) ++st.unitary_fallbacks;
    }
    if (data.empty()) {
      for (const auto& tr : per_track) {
        for (std::size_t s = 0; s < tr.samples.size(); ++s) {
          if (tr.labels[s] == k) data.push_back(&tr.samples[s]);
        }
      }
    }
    if (data.empty()) continue;
    model.unitary.emplace(k, fit_pattern(data, config, pattern_seed(config.seed, k, k, 0), st));
  }

  for (AtomId i = 0; i < K; ++i) {
    for (AtomId j = 0; j < K; ++j) {
      if (i == j || model.transitions(i, j) == 0) continue;
      std::vector<const gp::MotionSample*> data;
      for (const auto& tr : per_track) {
        const auto& runs = tr.segments.runs;
        bool member = false;
        for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
          member = member || (runs[r] == i && runs[r + 1] == j);
        }
        if (!member) continue;
        for (const auto& s : tr.samples) data.push_back(&s);
      }
      if (data.empty()) continue;
      model.transitional.emplace(std::make_pair(i, j),
                                 fit_pattern(data, config, pattern_seed(config.seed, i, j, 1), st));
    }
  }
  if (model.unitary.empty()) throw TrainingError("no unitary motion pattern could be trained");
  return model;
}

std::vector<gp::MotionSample> observed_samples(const Observation& obs,
                                               const TrainedModel& model) {
  obs.lights.validate();
  const auto track = traj::resample(obs.trajectory, model.config.dt);
  const auto vel = traj::sample_velocities(track);
  const context::IntersectionMap* map = model.map ? &*model.map : nullptr;
  std::vector<gp::MotionSample> out;
  out.reserve(track.size());
  for (std::size_t s = 0; s < track.size(); ++s) {
    if (std::hypot(vel[s].x, vel[s].y) < traj::kMinCellSpeed) continue;
    out.push_back(make_sample(track.points[s], vel[s], obs.lights, map, model.feature_set));
  }
  if (out.empty()) throw InvalidInput("observed trajectory never moves");
  return out;
}

AtomId classify_initial_atom(const Observation& obs, const TrainedModel& model) {
  if (model.unitary.empty()) throw ModelError("model has no unitary motion patterns");
  const auto samples = observed_samples(obs, model);
  AtomId best = model.unitary.begin()->first;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (const auto& [k, pattern] : model.unitary) {
    const double ll = gp::trajectory_log_likelihood(samples, pattern);
    if (ll > best_ll) {
      best_ll = ll;
      best = k;
    }
  }
  return best;
}

Prediction predict(const Observation& obs, const TrainedModel& model, double horizon,
                   double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw InvalidInput("prediction horizon and step must be positive");
  }
  const double ratio = horizon / dt;
  const double steps_f = std::round(ratio);
  if (steps_f < 1.0 || std::abs(ratio - steps_f) > 1e-9) {
    throw InvalidInput("horizon / dt must be a positive integer");
  }

  Prediction out;
  out.steps = static_cast<std::size_t>(steps_f);
  out.dt = dt;
  out.observed = traj::resample(obs.trajectory, model.config.dt);
  out.initial_atom = classify_initial_atom(obs, model);

  const auto samples = observed_samples(obs, model);
  const auto vel = traj::sample_velocities(out.observed);
  double speed_sum = 0.0;
  for (const auto& v : vel) speed_sum += std::hypot(v.x, v.y);
  out.speed = speed_sum / static_cast<double>(vel.size());

  Vec2 last_dir{1.0, 0.0};
  {
    const Vec2 v = vel.back();
    const double n = std::hypot(v.x, v.y);
    if (n >= traj::kMinCellSpeed) last_dir = {v.x / n, v.y / n};
  }
  const auto& last = out.observed.points.back();
  const context::Rect bounds = model.rollout_bounds();
  const context::IntersectionMap* map = model.map ? &*model.map : nullptr;

  const AtomId k = out.initial_atom;
  std::vector<AtomId> successors;
  std::vector<double> log_prior;
  if (k < model.transitions.atoms()) {
    successors = model.transitions.successors(k);
    double row = 0.0;
    for (AtomId j : successors) row += static_cast<double>(model.transitions(k, j));
    for (AtomId j : successors) {
      log_prior.push_back(std::log(static_cast<double>(model.transitions(k, j)) / row));
    }
  }
  if (successors.empty()) {
    // The initial atom only ever ends trajectories: continue along it.
    successors = {k};
    log_prior = {0.0};
  }

  for (std::size_t h = 0; h < successors.size(); ++h) {
    const AtomId j = successors[h];
    const auto& pattern = model.pattern(k, j);
    Hypothesis hyp;
    hyp.atom = j;
    hyp.log_likelihood = gp::trajectory_log_likelihood(samples, pattern);
    hyp.weight = log_prior[h] + hyp.log_likelihood;  // normalized below

    Vec2 pos{last.x, last.y};
    Vec2 dir = last_dir;
    hyp.rollout.push_back(pos);
    for (std::size_t s = 0; s < out.steps; ++s) {
      const Eigen::VectorXd f =
          context::extract_features(pos.x, pos.y, obs.lights, map, model.feature_set);
      const auto px = pattern.gp_x.predict(f);
      const auto py = pattern.gp_y.predict(f);
      const double norm = std::hypot(px.mean, py.mean);
      if (norm > 1e-12) dir = {px.mean / norm, py.mean / norm};
      const Vec2 next{pos.x + dir.x * out.speed * dt, pos.y + dir.y * out.speed * dt};
      if (!bounds.contains(next)) {
        hyp.truncated = true;
        break;
      }
      pos = next;
      hyp.rollout.push_back(pos);
      hyp.var_x.push_back(px.variance);
      hyp.var_y.push_back(py.variance);
    }
    out.hypotheses.push_back(std::move(hyp));
  }

  double max_log = -std::numeric_limits<double>::infinity();
  for (const auto& hyp : out.hypotheses) max_log = std::max(max_log, hyp.weight);
  double total = 0.0;
  for (auto& hyp : out.hypotheses) {
    hyp.weight = std::exp(hyp.weight - max_log);
    total += hyp.weight;
  }
  for (auto& hyp : out.hypotheses) hyp.weight /= total;
  return out;
}

std::size_t argmax_hypothesis(const Prediction& p) {
  if (p.hypotheses.empty()) throw InvalidInput("prediction has no hypotheses");
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.hypotheses.size(); ++i) {
    if (p.hypotheses[i].weight > p.hypotheses[best].weight) best = i;
  }
  return best;
}

}  // namespace casnsc::predict
