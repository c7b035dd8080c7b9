#pragma once

// Pipeline commands behind the casnsc tool: synth, train, predict, eval and
// plot. Every command validates its inputs before writing anything and
// writes files through write-to-temp-then-rename.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "casnsc/context.hpp"
#include "casnsc/dataset.hpp"
#include "casnsc/evalkit.hpp"
#include "casnsc/predictor.hpp"
#include "casnsc/scenariosim.hpp"

namespace casnsc::cli {

namespace fs = std::filesystem;

struct RunConfig {
  context::FeatureSet feature_set = context::FeatureSet::CASNSC3;
  /// Feature sets compared by eval when no model files are given.
  std::vector<context::FeatureSet> eval_feature_sets{
      context::FeatureSet::ASNSC, context::FeatureSet::CASNSC1, context::FeatureSet::CASNSC2,
      context::FeatureSet::CASNSC3};

  predict::TrainConfig train;
  sim::ScenarioConfig scenario;

  double observation = 2.5;  // seconds of history before the entry point
  double horizon = 5.0;      // seconds predicted
  double test_fraction = 0.2;
  double band_sigmas = 1.0;
  double angular_threshold = eval::kDefaultAngularThreshold;
  std::size_t threads = 0;  // 0 = hardware concurrency

  std::uint64_t seed = 0;

  std::string dataset_path;  // empty = <out>/dataset.jsonl
  std::string map_path;      // empty = <out>/map.json
  std::string model_path;    // empty = <out>/model-<feature set>.json

  /// Copies `seed` into the scenario and training seeds.
  void apply_seed(std::uint64_t s);
};

std::string run_config_to_string(const RunConfig& c);
RunConfig run_config_from_string(const std::string& text);
RunConfig load_run_config(const fs::path& path);

/// Seeded split by trajectory; returns (train, test).
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          std::uint64_t seed);

/// Observed window [t_enter - observation, t_enter] and future
/// [t_enter, t_enter + horizon] of a record; t_enter defaults to
/// t0 + observation. Throws InvalidInput when either window is too short.
struct Episode {
  predict::Observation observation;
  traj::Trajectory truth;
};
Episode split_episode(const TrajectoryRecord& rec, double observation, double horizon,
                      double dt);

struct Evaluation {
  eval::MetricsReport report;
  std::vector<eval::EvalRecord> records;
  std::vector<std::string> ids;
};

/// Predicts every test record and scores it. Safe to run in parallel over
/// records; results do not depend on the thread count.
Evaluation evaluate(const predict::TrainedModel& model, const Dataset& test,
                    const RunConfig& cfg);

/// Table-1-shaped table: one row per model, four metric columns.
std::string report_table(const std::vector<eval::MetricsReport>& reports);
std::string report_json(const std::vector<eval::MetricsReport>& reports);

int cmd_synth(const RunConfig& cfg, const fs::path& out, bool force, std::ostream& log);
int cmd_train(const RunConfig& cfg, const fs::path& out, bool force, std::ostream& log);
int cmd_predict(const RunConfig& cfg, const fs::path& out, bool force, std::ostream& log);
int cmd_eval(const RunConfig& cfg, const std::vector<std::string>& models, const fs::path& out,
             bool force, std::ostream& log);
int cmd_plot(const RunConfig& cfg, const fs::path& out, bool force, std::ostream& log);

}  // namespace casnsc::cli
