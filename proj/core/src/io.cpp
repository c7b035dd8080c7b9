#include "casnsc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "casnsc/errors.hpp"
#include "json_codec.hpp"

namespace casnsc::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw IoError("matrix size does not match its data");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json record_to_json(const TrajectoryRecord& r) {
  json j;
  j["id"] = r.id;
  if (r.lights) {
    j["t1"] = r.lights->t1;
    if (r.lights->t2) j["t2"] = *r.lights->t2;
  }
  if (r.branch != 0) j["branch"] = r.branch;
  if (r.t_enter) j["t_enter"] = *r.t_enter;
  json pts = json::array();
  for (const auto& p : r.trajectory.points) pts.push_back({p.t, p.x, p.y});
  j["points"] = std::move(pts);
  return j;
}

TrajectoryRecord record_from_json(const json& j) {
  TrajectoryRecord r;
  r.id = j.at("id").get<std::string>();
  if (j.contains("t1")) {
    context::LightState l;
    l.t1 = j.at("t1").get<int>();
    if (j.contains("t2")) l.t2 = j.at("t2").get<int>();
    try {
      l.validate();
    } catch (const InvalidInput& e) {
      throw InvalidInput("trajectory '" + r.id + "': " + e.what());
    }
    r.lights = l;
  } else if (j.contains("t2")) {
    throw InvalidInput("trajectory '" + r.id + "': t2 given without t1");
  }
  r.branch = j.value("branch", 0);
  if (j.contains("t_enter")) r.t_enter = j.at("t_enter").get<double>();
  for (const auto& p : j.at("points")) {
    if (p.size() != 3) throw InvalidInput("trajectory '" + r.id + "': points must be [t, x, y]");
    r.trajectory.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  try {
    r.trajectory.validate();
  } catch (const InvalidInput& e) {
    throw InvalidInput("trajectory '" + r.id + "': " + e.what());
  }
  return r;
}

json map_to_json(const context::IntersectionMap& m) {
  const auto& b = m.bounds();
  return {{"curb_frame_angle", m.curb_frame_angle()},
          {"corner", {m.corner().x, m.corner().y}},
          {"bounds", {b.min_x, b.min_y, b.max_x, b.max_y}},
          {"lights", {{"encoding", "tr = t1"}, {"complementary", true}}}};
}

context::IntersectionMap map_from_json(const json& j) {
  const auto c = j.at("corner").get<std::vector<double>>();
  const auto b = j.at("bounds").get<std::vector<double>>();
  if (c.size() != 2 || b.size() != 4) throw ConfigError("map: corner needs 2 and bounds 4 values");
  context::IntersectionMap m(j.at("curb_frame_angle").get<double>(), {c[0], c[1]},
                             {b[0], b[1], b[2], b[3]});
  m.validate();
  return m;
}

json pattern_to_json(const gp::GPMotionPattern& p) {
  return {{"inputs", matrix_to_json(p.gp_x.inputs())},
          {"vx", vector_to_json(p.gp_x.targets())},
          {"vy", vector_to_json(p.gp_y.targets())},
          {"hyper_x", vector_to_json(p.gp_x.hyperparams().packed())},
          {"hyper_y", vector_to_json(p.gp_y.hyperparams().packed())}};
}

gp::GPMotionPattern pattern_from_json(const json& j) {
  const Eigen::MatrixXd X = matrix_from_json(j.at("inputs"));
  return {gp::GPRegressor::fit(X, vector_from_json(j.at("vx")),
                               gp::Hyperparams::unpack(vector_from_json(j.at("hyper_x")))),
          gp::GPRegressor::fit(X, vector_from_json(j.at("vy")),
                               gp::Hyperparams::unpack(vector_from_json(j.at("hyper_y"))))};
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

json train_config_to_json(const predict::TrainConfig& c) {
  json j{{"dt", c.dt},
         {"cell_width", c.cell_width},
         {"lambda", c.lambda},
         {"k_max", c.k_max},
         {"solver_iters", c.solver_iters},
         {"solver_tol", c.solver_tol},
         {"gp_restarts", c.gp_restarts},
         {"gp_iters", c.gp_iters},
         {"gp_noise_std", c.gp_noise_std},
         {"gp_max_points", c.gp_max_points},
         {"unitary_mode",
          c.unitary_mode == predict::UnitaryMode::SingleRun ? "single_run" : "all_segments"},
         {"seed", c.seed}};
  return j;
}

predict::TrainConfig train_config_from_json(const json& j) {
  predict::TrainConfig c;
  c.dt = j.value("dt", c.dt);
  c.cell_width = j.value("cell_width", c.cell_width);
  c.lambda = j.value("lambda", c.lambda);
  c.k_max = j.value("k_max", c.k_max);
  c.solver_iters = j.value("solver_iters", c.solver_iters);
  c.solver_tol = j.value("solver_tol", c.solver_tol);
  c.gp_restarts = j.value("gp_restarts", c.gp_restarts);
  c.gp_iters = j.value("gp_iters", c.gp_iters);
  c.gp_noise_std = j.value("gp_noise_std", c.gp_noise_std);
  c.gp_max_points = j.value("gp_max_points", c.gp_max_points);
  const auto mode = j.value("unitary_mode", std::string("all_segments"));
  if (mode == "single_run") {
    c.unitary_mode = predict::UnitaryMode::SingleRun;
  } else if (mode == "all_segments") {
    c.unitary_mode = predict::UnitaryMode::AllSegments;
  } else {
    throw ConfigError("unknown unitary_mode '" + mode + "'");
  }
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path.string() + "'");
  }
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dataset_to_string(const Dataset& ds) {
  std::string out;
  for (const auto& r : ds) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_string(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      ds.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw IoError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ds;
}

void write_dataset(const fs::path& path, const Dataset& ds) {
  write_text_atomic(path, dataset_to_string(ds));
}

Dataset read_dataset(const fs::path& path) { return dataset_from_string(read_text(path)); }

std::string map_to_string(const context::IntersectionMap& map) {
  return map_to_json(map).dump(2) + "\n";
}

context::IntersectionMap map_from_string(const std::string& text) {
  try {
    return map_from_json(parse_json(text, "map"));
  } catch (const json::exception& e) {
    throw IoError(std::string("map: ") + e.what());
  }
}

void write_map(const fs::path& path, const context::IntersectionMap& map) {
  write_text_atomic(path, map_to_string(map));
}

context::IntersectionMap read_map(const fs::path& path) {
  return map_from_string(read_text(path));
}

std::string model_to_string(const predict::TrainedModel& m) {
  json j;
  j["format"] = "casnsc-model";
  j["version"] = kModelFormatVersion;
  j["feature_set"] = std::string(context::to_string(m.feature_set));
  j["grid"] = {{"rows", m.grid.rows},
               {"cols", m.grid.cols},
               {"cell_width", m.grid.cell_width},
               {"origin", {m.grid.origin.x, m.grid.origin.y}}};
  j["dictionary"] = {{"D", matrix_to_json(m.dictionary.D)},
                     {"S", matrix_to_json(m.dictionary.S)}};
  json T = json::array();
  for (std::size_t i = 0; i < m.transitions.atoms(); ++i) {
    for (std::size_t k = 0; k < m.transitions.atoms(); ++k) T.push_back(m.transitions(i, k));
  }
  j["transitions"] = {{"atoms", m.transitions.atoms()}, {"counts", std::move(T)}};
  j["map"] = m.map ? map_to_json(*m.map) : json(nullptr);
  j["config"] = train_config_to_json(m.config);
  json uni = json::array();
  for (const auto& [k, p] : m.unitary) {
    auto e = pattern_to_json(p);
    e["atom"] = k;
    uni.push_back(std::move(e));
  }
  json tran = json::array();
  for (const auto& [key, p] : m.transitional) {
    auto e = pattern_to_json(p);
    e["from"] = key.first;
    e["to"] = key.second;
    tran.push_back(std::move(e));
  }
  j["unitary"] = std::move(uni);
  j["transitional"] = std::move(tran);
  return j.dump() + "\n";
}

predict::TrainedModel model_from_string(const std::string& text) {
  const json j = parse_json(text, "model");
  try {
    if (j.value("format", std::string()) != "casnsc-model") {
      throw ModelError("not a model container");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelError("model format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kModelFormatVersion) +
                       ")");
    }
    predict::TrainedModel m;
    m.feature_set = context::parse_feature_set(j.at("feature_set").get<std::string>());
    const auto& g = j.at("grid");
    m.grid.rows = g.at("rows").get<std::size_t>();
    m.grid.cols = g.at("cols").get<std::size_t>();
    m.grid.cell_width = g.at("cell_width").get<double>();
    m.grid.origin = {g.at("origin")[0].get<double>(), g.at("origin")[1].get<double>()};
    m.grid.validate();
    m.dictionary.D = matrix_from_json(j.at("dictionary").at("D"));
    m.dictionary.S = matrix_from_json(j.at("dictionary").at("S"));
    const auto K = j.at("transitions").at("atoms").get<std::size_t>();
    const auto& counts = j.at("transitions").at("counts");
    if (counts.size() != K * K) throw ModelError("transition matrix size mismatch");
    m.transitions = dict::TransitionMatrix(K);
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t k = 0; k < K; ++k) m.transitions(i, k) = counts[i * K + k].get<std::uint64_t>();
    }
    if (!j.at("map").is_null()) m.map = map_from_json(j.at("map"));
    m.config = train_config_from_json(j.at("config"));
    for (const auto& e : j.at("unitary")) {
      m.unitary.emplace(e.at("atom").get<std::size_t>(), pattern_from_json(e));
    }
    for (const auto& e : j.at("transitional")) {
      m.transitional.emplace(
          std::make_pair(e.at("from").get<std::size_t>(), e.at("to").get<std::size_t>()),
          pattern_from_json(e));
    }
    return m;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model: ") + e.what());
  }
}

void write_model(const fs::path& path, const predict::TrainedModel& model) {
  write_text_atomic(path, model_to_string(model));
}

predict::TrainedModel read_model(const fs::path& path) {
  return model_from_string(read_text(path));
}

}  // namespace casnsc::io
