// casnsc: synth | train | predict | eval | plot

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "casnsc/commands.hpp"
#include "casnsc/errors.hpp"

namespace cli = casnsc::cli;

int main(int argc, char** argv) {
  CLI::App app{"Context-aware pedestrian trajectory prediction"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string feature_set;
  std::string out = "casnsc-out";
  bool force = false;
  std::string dataset, map, model;
  std::vector<std::string> models;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run config (JSON)");
    sub->add_option("--seed", seed, "Seed for synthesis, split and training");
    sub->add_option("--feature-set", feature_set, "asnsc | casnsc1 | casnsc2 | casnsc3")
        ->check(CLI::IsMember({"asnsc", "casnsc1", "casnsc2", "casnsc3"}, CLI::ignore_case));
    sub->add_option("--out", out, "Output directory")->capture_default_str();
    sub->add_flag("--force", force, "Overwrite existing outputs");
    sub->add_option("--dataset", dataset, "Dataset file (default <out>/dataset.jsonl)");
    sub->add_option("--map", map, "Map file (default <out>/map.json)");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic intersection dataset");
  auto* train = app.add_subcommand("train", "Train a model on the training split");
  auto* pred = app.add_subcommand("predict", "Predict the held-out observations");
  auto* eval = app.add_subcommand("eval", "Compare models on the held-out split");
  auto* plot = app.add_subcommand("plot", "Draw the dataset and map");
  for (auto* s : {synth, train, pred, eval, plot}) common(s);
  for (auto* s : {train, pred}) {
    s->add_option("--model", model, "Model file (default <out>/model-<feature set>.json)");
  }
  eval->add_option("--model", models, "Model files; trains every configured feature set if none");

  CLI11_PARSE(app, argc, argv);

  try {
    cli::RunConfig cfg = config_path.empty() ? cli::RunConfig{} : cli::load_run_config(config_path);
    if (seed) cfg.apply_seed(*seed);
    if (!feature_set.empty()) cfg.feature_set = casnsc::context::parse_feature_set(feature_set);
    if (!dataset.empty()) cfg.dataset_path = dataset;
    if (!map.empty()) cfg.map_path = map;
    if (!model.empty()) cfg.model_path = model;

    if (*synth) return cli::cmd_synth(cfg, out, force, std::cout);
    if (*train) return cli::cmd_train(cfg, out, force, std::cout);
    if (*pred) return cli::cmd_predict(cfg, out, force, std::cout);
    if (*eval) {
      if (!feature_set.empty() && models.empty()) cfg.eval_feature_sets = {cfg.feature_set};
      return cli::cmd_eval(cfg, models, out, force, std::cout);
    }
    if (*plot) return cli::cmd_plot(cfg, out, force, std::cout);
  } catch (const casnsc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
