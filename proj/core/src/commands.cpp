#include "casnsc/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "casnsc/errors.hpp"
#include "casnsc/io.hpp"
#include "casnsc/svg.hpp"
#include "json_codec.hpp"

namespace casnsc::cli {

using nlohmann::json;

namespace {

std::string slug(context::FeatureSet fs) {
  std::string s;
  for (char c : context::to_string(fs)) {
    if (c != '-') s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

fs::path dataset_file(const RunConfig& c, const fs::path& out) {
  return c.dataset_path.empty() ? out / "dataset.jsonl" : fs::path(c.dataset_path);
}
fs::path map_file(const RunConfig& c, const fs::path& out) {
  return c.map_path.empty() ? out / "map.json" : fs::path(c.map_path);
}
fs::path model_file(const RunConfig& c, const fs::path& out, context::FeatureSet fs) {
  return c.model_path.empty() ? out / ("model-" + slug(fs) + ".json") : fs::path(c.model_path);
}

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) {
    throw IoError("'" + p.string() + "' already exists (use --force to overwrite)");
  }
}

std::optional<context::IntersectionMap> maybe_map(const RunConfig& c, const fs::path& out,
                                                  bool required) {
  const auto p = map_file(c, out);
  if (!fs::exists(p)) {
    if (required) throw ConfigError("map file '" + p.string() + "' not found");
    return std::nullopt;
  }
  return io::read_map(p);
}

json scenario_to_json(const sim::ScenarioConfig& s) {
  const auto& b = s.local_bounds;
  return {{"curb_right_angle", s.curb_right_angle},
          {"curb_left_angle", s.curb_left_angle},
          {"corner", {s.corner.x, s.corner.y}},
          {"local_bounds", {b.min_x, b.min_y, b.max_x, b.max_y}},
          {"n_trajectories", s.n_trajectories},
          {"dt", s.dt},
          {"speed_mean", s.speed_mean},
          {"speed_std", s.speed_std},
          {"position_noise_std", s.position_noise_std},
          {"p_obey", s.p_obey},
          {"light_split", s.light_split},
          {"sidewalk_offset", s.sidewalk_offset},
          {"offset_std", s.offset_std},
          {"entry_cl", s.entry_cl},
          {"turn_radius", s.turn_radius},
          {"pre_entry_min", s.pre_entry_min},
          {"pre_entry_max", s.pre_entry_max},
          {"post_entry_min", s.post_entry_min},
          {"post_entry_max", s.post_entry_max},
          {"seed", s.seed}};
}

sim::ScenarioConfig scenario_from_json(const json& j) {
  sim::ScenarioConfig s;
  s.curb_right_angle = j.value("curb_right_angle", s.curb_right_angle);
  s.curb_left_angle = j.value("curb_left_angle", s.curb_left_angle);
  if (j.contains("corner")) {
    const auto c = j.at("corner").get<std::vector<double>>();
    if (c.size() != 2) throw ConfigError("scenario.corner needs 2 values");
    s.corner = {c[0], c[1]};
  }
  if (j.contains("local_bounds")) {
    const auto b = j.at("local_bounds").get<std::vector<double>>();
    if (b.size() != 4) throw ConfigError("scenario.local_bounds needs 4 values");
    s.local_bounds = {b[0], b[1], b[2], b[3]};
  }
  s.n_trajectories = j.value("n_trajectories", s.n_trajectories);
  s.dt = j.value("dt", s.dt);
  s.speed_mean = j.value("speed_mean", s.speed_mean);
  s.speed_std = j.value("speed_std", s.speed_std);
  s.position_noise_std = j.value("position_noise_std", s.position_noise_std);
  s.p_obey = j.value("p_obey", s.p_obey);
  s.light_split = j.value("light_split", s.light_split);
  s.sidewalk_offset = j.value("sidewalk_offset", s.sidewalk_offset);
  s.offset_std = j.value("offset_std", s.offset_std);
  s.entry_cl = j.value("entry_cl", s.entry_cl);
  s.turn_radius = j.value("turn_radius", s.turn_radius);
  s.pre_entry_min = j.value("pre_entry_min", s.pre_entry_min);
  s.pre_entry_max = j.value("pre_entry_max", s.pre_entry_max);
  s.post_entry_min = j.value("post_entry_min", s.post_entry_min);
  s.post_entry_max = j.value("post_entry_max", s.post_entry_max);
  s.seed = j.value("seed", s.seed);
  return s;
}

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_compatible(const predict::TrainedModel& model, const Dataset& ds) {
  if (!context::needs_lights(model.feature_set)) return;
  for (const auto& r : ds) {
    if (!r.lights) {
      throw ConfigError(std::string("model uses feature set ") +
                        std::string(context::to_string(model.feature_set)) +
                        " but trajectory '" + r.id + "' has no light annotation");
    }
  }
}

traj::Trajectory window(const traj::Trajectory& t, double from, double to) {
  traj::Trajectory out;
  for (const auto& p : t.points) {
    if (p.t >= from - 1e-9 && p.t <= to + 1e-9) out.points.push_back(p);
  }
  return out;
}

context::Rect scene_bounds(const predict::TrainedModel& model) { return model.rollout_bounds(); }

context::Rect dataset_bounds(const Dataset& ds) {
  context::Rect r{1e300, 1e300, -1e300, -1e300};
  for (const auto& rec : ds) {
    for (const auto& p : rec.trajectory.points) {
      r.min_x = std::min(r.min_x, p.x);
      r.min_y = std::min(r.min_y, p.y);
      r.max_x = std::max(r.max_x, p.x);
      r.max_y = std::max(r.max_y, p.y);
    }
  }
  r.min_x -= 1.0;
  r.min_y -= 1.0;
  r.max_x += 1.0;
  r.max_y += 1.0;
  return r;
}

void log_model(const predict::TrainedModel& m, const predict::TrainStats& st, std::ostream& log) {
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < m.transitions.atoms(); ++i) {
    for (std::size_t j = 0; j < m.transitions.atoms(); ++j) nonzero += m.transitions(i, j) > 0;
  }
  log << "feature set: " << context::to_string(m.feature_set) << "\n"
      << "atoms K: " << m.dictionary.atoms() << " (solver iterations " << st.solver.iterations
      << ", pruned " << st.solver.pruned_atoms << ")\n"
      << "nonzero T entries: " << nonzero << "\n";
  for (std::size_t i = 0; i < m.transitions.atoms(); ++i) {
    log << "  T[" << i + 1 << "]:";
    for (std::size_t j = 0; j < m.transitions.atoms(); ++j) log << ' ' << m.transitions(i, j);
    log << "\n";
  }
  auto hyper = [&](const char* kind, std::size_t a, std::size_t b, const gp::GPMotionPattern& p) {
    log << "  " << kind << ' ' << a + 1 << "->" << b + 1 << " n=" << p.gp_x.size();
    for (const auto* g : {&p.gp_x, &p.gp_y}) {
      log << (g == &p.gp_x ? "  x: l=(" : "  y: l=(");
      const auto l = g->hyperparams().lengths();
      for (Eigen::Index i = 0; i < l.size(); ++i) log << (i ? "," : "") << std::setprecision(4) << l[i];
      log << ") sf=" << g->hyperparams().signal_std() << " sn=" << g->hyperparams().noise_std();
    }
    log << "\n";
  };
  for (const auto& [k, p] : m.unitary) hyper("unitary", k, k, p);
  for (const auto& [key, p] : m.transitional) hyper("transitional", key.first, key.second, p);
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  scenario.seed = s;
  train.seed = s;
}

std::string run_config_to_string(const RunConfig& c) {
  json sets = json::array();
  for (auto fs : c.eval_feature_sets) sets.push_back(slug(fs));
  json j{{"feature_set", slug(c.feature_set)},
         {"eval_feature_sets", std::move(sets)},
         {"train", io::train_config_to_json(c.train)},
         {"scenario", scenario_to_json(c.scenario)},
         {"observation", c.observation},
         {"horizon", c.horizon},
         {"test_fraction", c.test_fraction},
         {"band_sigmas", c.band_sigmas},
         {"angular_threshold", c.angular_threshold},
         {"threads", c.threads},
         {"seed", c.seed},
         {"dataset_path", c.dataset_path},
         {"map_path", c.map_path},
         {"model_path", c.model_path}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_string(const std::string& text) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    if (j.contains("feature_set")) {
      c.feature_set = context::parse_feature_set(j.at("feature_set").get<std::string>());
    }
    if (j.contains("eval_feature_sets")) {
      c.eval_feature_sets.clear();
      for (const auto& s : j.at("eval_feature_sets")) {
        c.eval_feature_sets.push_back(context::parse_feature_set(s.get<std::string>()));
      }
    }
    if (j.contains("train")) c.train = io::train_config_from_json(j.at("train"));
    if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
    c.observation = j.value("observation", c.observation);
    c.horizon = j.value("horizon", c.horizon);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.band_sigmas = j.value("band_sigmas", c.band_sigmas);
    c.angular_threshold = j.value("angular_threshold", c.angular_threshold);
    c.threads = j.value("threads", c.threads);
    c.dataset_path = j.value("dataset_path", c.dataset_path);
    c.map_path = j.value("map_path", c.map_path);
    c.model_path = j.value("model_path", c.model_path);
    // A top-level seed wins over the nested ones.
    if (j.contains("seed")) c.apply_seed(j.at("seed").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (!(c.observation > 0.0) || !(c.horizon > 0.0)) {
    throw ConfigError("observation and horizon must be positive");
  }
  if (!(c.test_fraction > 0.0) || !(c.test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_string(io::read_text(path));
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          std::uint64_t seed) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x7e575b117ULL);
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng() % i]);
  }
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(ds.size())));
  std::vector<bool> is_test(ds.size(), false);
  for (std::size_t i = 0; i < n_test && i < idx.size(); ++i) is_test[idx[i]] = true;
  std::pair<Dataset, Dataset> out;
  for (std::size_t i = 0; i < ds.size(); ++i) (is_test[i] ? out.second : out.first).push_back(ds[i]);
  return out;
}

Episode split_episode(const TrajectoryRecord& rec, double observation, double horizon,
                      double dt) {
  const auto& pts = rec.trajectory.points;
  if (pts.size() < 2) throw InvalidInput("trajectory '" + rec.id + "' is too short");
  const double t_enter = rec.t_enter ? *rec.t_enter : pts.front().t + observation;
  Episode ep;
  ep.observation.trajectory = window(rec.trajectory, t_enter - observation, t_enter);
  ep.observation.lights = rec.lights ? *rec.lights : context::LightState{};
  ep.truth = window(rec.trajectory, t_enter, t_enter + horizon);
  const auto& obs = ep.observation.trajectory;
  if (obs.size() < 2 || obs.duration() < observation - dt - 1e-9) {
    throw InvalidInput("trajectory '" + rec.id + "' has no full observation window");
  }
  if (ep.truth.size() < 2 || ep.truth.duration() < horizon - dt - 1e-9) {
    throw InvalidInput("trajectory '" + rec.id + "' does not cover the prediction horizon");
  }
  return ep;
}

Evaluation evaluate(const predict::TrainedModel& model, const Dataset& test,
                    const RunConfig& cfg) {
  if (test.empty()) throw InvalidInput("empty test split");
  check_compatible(model, test);
  Evaluation ev;
  ev.records.resize(test.size());
  ev.ids.resize(test.size());
  std::vector<double> times(test.size(), 0.0);
  parallel_for(test.size(), cfg.threads, [&](std::size_t i) {
    const auto ep = split_episode(test[i], cfg.observation, cfg.horizon, model.config.dt);
    const auto t0 = std::chrono::steady_clock::now();
    auto pred = predict::predict(ep.observation, model, cfg.horizon, model.config.dt);
    times[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ev.records[i] = {std::move(pred), ep.truth, cfg.angular_threshold};
    ev.ids[i] = test[i].id;
  });
  ev.report = eval::summarize(std::string(context::to_string(model.feature_set)), ev.records,
                              ev.ids, times, cfg.band_sigmas);
  return ev;
}

std::string report_table(const std::vector<eval::MetricsReport>& reports) {
  std::ostringstream os;
  os << "model\taccuracy_pct\tmhd_m\tauc_m2\ttime_s\n";
  os << std::fixed;
  for (const auto& r : reports) {
    os << r.model << '\t' << std::setprecision(2) << r.classification_accuracy << '\t'
       << std::setprecision(3) << r.weighted_mhd << '\t' << std::setprecision(3) << r.auc << '\t'
       << std::setprecision(4) << r.mean_compute_time << '\n';
  }
  return os.str();
}

std::string report_json(const std::vector<eval::MetricsReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json per = json::array();
    for (const auto& m : r.per_trajectory) {
      per.push_back({{"id", m.id},
                     {"accuracy_pct", m.accuracy},
                     {"mhd_m", m.mhd},
                     {"auc_m2", m.auc},
                     {"time_s", m.compute_time},
                     {"hypotheses", m.hypotheses},
                     {"initial_atom", m.initial_atom + 1}});
    }
    arr.push_back({{"model", r.model},
                   {"accuracy_pct", r.classification_accuracy},
                   {"mhd_m", r.weighted_mhd},
                   {"auc_m2", r.auc},
                   {"time_s", r.mean_compute_time},
                   {"per_trajectory", std::move(per)}});
  }
  return arr.dump(2) + "\n";
}

int cmd_synth(const RunConfig& cfg, const fs::path& out, bool force, std::ostream& log) {
  const auto ds_path = dataset_file(cfg, out);
  const auto map_path = map_file(cfg, out);
  refuse_overwrite(ds_path, force);
  refuse_overwrite(map_path, force);
  const auto data = sim::generate_dataset(cfg.scenario);
  io::write_dataset(ds_path, data.dataset);
  io::write_map(map_path, data.map);
  std::size_t branch1 = 0;
  std::size_t lit = 0;
  for (const auto& r : data.dataset) {
    branch1 += r.branch == 1;
    lit += r.lights && r.lights->t1 == 1;
  }
  log << "trajectories: " << data.dataset.size() << "\n"
      << "t1 = 1: " << lit << "\n"
      << "branch 1: " << branch1 << "  branch 2: " << data.dataset.size() - branch1 << "\n"
      << "dataset: " << ds_path.string() << "\nmap: " << map_path.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const fs::path& out, bool force, std::ostream& log) {
  const auto path = model_file(cfg, out, cfg.feature_set);
  refuse_overwrite(path, force);
  const auto ds = io::read_dataset(dataset_file(cfg, out));
  const auto map = maybe_map(cfg, out, context::needs_map(cfg.feature_set));
  const auto [train, test] = split_dataset(ds, cfg.test_fraction, cfg.seed);
  predict::TrainStats st;
  const auto model =
      predict::train(train, map ? &*map : nullptr, cfg.feature_set, cfg.train, &st);
  const auto text = io::model_to_string(model);
  io::write_text_atomic(path, text);
  log << "training trajectories: " << train.size() << " (held out " << test.size() << ")\n";
  log_model(model, st, log);
  log << "model: " << path.string() << "  hash " << io::fnv1a_hex(text) << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg, const fs::path& out, bool force, std::ostream& log) {
  const auto path = out / ("predictions-" + slug(cfg.feature_set) + ".json");
  refuse_overwrite(path, force);
  const auto model = io::read_model(model_file(cfg, out, cfg.feature_set));
  if (model.feature_set != cfg.feature_set) {
    throw ConfigError(std::string("model feature set ") +
                      std::string(context::to_string(model.feature_set)) +
                      " does not match --feature-set " +
                      std::string(context::to_string(cfg.feature_set)));
  }
  const auto ds = io::read_dataset(dataset_file(cfg, out));
  const auto test = split_dataset(ds, cfg.test_fraction, cfg.seed).second;
  if (test.empty()) throw InvalidInput("empty test split");
  check_compatible(model, test);
  json arr = json::array();
  for (const auto& rec : test) {
    const auto ep = split_episode(rec, cfg.observation, cfg.horizon, model.config.dt);
    const auto p = predict::predict(ep.observation, model, cfg.horizon, model.config.dt);
    json hyps = json::array();
    for (const auto& h : p.hypotheses) {
      json pts = json::array();
      for (const auto& q : h.rollout) pts.push_back({q.x, q.y});
      hyps.push_back({{"atom", h.atom + 1},
                      {"weight", h.weight},
                      {"log_likelihood", h.log_likelihood},
                      {"truncated", h.truncated},
                      {"rollout", std::move(pts)},
                      {"var_x", h.var_x},
                      {"var_y", h.var_y}});
    }
    arr.push_back({{"id", rec.id},
                   {"initial_atom", p.initial_atom + 1},
                   {"speed", p.speed},
                   {"hypotheses", std::move(hyps)}});
  }
  io::write_text_atomic(path, arr.dump(1) + "\n");
  log << "predicted " << test.size() << " observations -> " << path.string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::vector<std::string>& models, const fs::path& out,
             bool force, std::ostream& log) {
  const auto table_path = out / "report.tsv";
  const auto json_path = out / "report.json";
  refuse_overwrite(table_path, force);
  refuse_overwrite(json_path, force);

  const auto ds = io::read_dataset(dataset_file(cfg, out));
  const auto [train, test] = split_dataset(ds, cfg.test_fraction, cfg.seed);
  if (test.empty()) throw InvalidInput("empty test split");

  std::vector<predict::TrainedModel> trained;
  if (models.empty()) {
    const auto map = maybe_map(cfg, out, false);
    for (auto fs : cfg.eval_feature_sets) {
      if (context::needs_map(fs) && !map) {
        throw ConfigError(std::string(context::to_string(fs)) + " needs a map file");
      }
      log << "training " << context::to_string(fs) << " on " << train.size()
          << " trajectories\n";
      trained.push_back(predict::train(train, map ? &*map : nullptr, fs, cfg.train));
    }
  } else {
    for (const auto& m : models) trained.push_back(io::read_model(m));
  }

  std::vector<eval::MetricsReport> reports;
  for (const auto& model : trained) {
    const auto ev = evaluate(model, test, cfg);
    reports.push_back(ev.report);
    const auto dir = out / "svg" / slug(model.feature_set);
    for (std::size_t i = 0; i < test.size(); ++i) {
      svg::Scene scene;
      scene.bounds = scene_bounds(model);
      scene.map = model.map;
      for (const auto& r : train) scene.training.push_back(r.trajectory);
      scene.observed = ev.records[i].prediction.observed;
      scene.truth = ev.records[i].ground_truth;
      scene.prediction = ev.records[i].prediction;
      scene.title = test[i].id + " " + std::string(context::to_string(model.feature_set));
      io::write_text_atomic(dir / (test[i].id + ".svg"), svg::render(scene));
    }
  }
  const auto table = report_table(reports);
  io::write_text_atomic(table_path, table);
  io::write_text_atomic(json_path, report_json(reports));
  log << table;
  return 0;
}

int cmd_plot(const RunConfig& cfg, const fs::path& out, bool force, std::ostream& log) {
  const auto path = out / "overview.svg";
  refuse_overwrite(path, force);
  const auto ds = io::read_dataset(dataset_file(cfg, out));
  if (ds.empty()) throw InvalidInput("empty dataset");
  const auto map = maybe_map(cfg, out, false);
  svg::Scene scene;
  scene.bounds = map ? map->bounds() : dataset_bounds(ds);
  scene.map = map;
  for (const auto& r : ds) scene.training.push_back(r.trajectory);
  scene.title = "dataset overview";
  io::write_text_atomic(path, svg::render(scene));
  log << "wrote " << path.string() << " (" << ds.size() << " trajectories)\n";
  return 0;
}

}  // namespace casnsc::cli
