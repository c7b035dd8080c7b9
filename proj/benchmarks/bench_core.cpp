#include <random>

#include <benchmark/benchmark.h>

#include "casnsc/dictionary.hpp"
#include "casnsc/gproc.hpp"
#include "casnsc/predictor.hpp"
#include "casnsc/scenariosim.hpp"

using namespace casnsc;

namespace {

Eigen::MatrixXd random_inputs(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3, 3);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (auto& v : X.reshaped()) v = u(rng);
  return X;
}

void BM_GpFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto X = random_inputs(n, 3, 1);
  const Eigen::VectorXd y = X.col(0).array().sin();
  const auto h = gp::default_init(X, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(gp::GPRegressor::fit(X, y, h));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GpFit)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_GpPredict(benchmark::State& state) {
  const auto X = random_inputs(static_cast<std::size_t>(state.range(0)), 3, 2);
  const Eigen::VectorXd y = X.col(1).array().cos();
  const auto reg = gp::GPRegressor::fit(X, y, gp::default_init(X, 0.1));
  const Eigen::Vector3d q(0.1, -0.2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(reg.predict(q));
}
BENCHMARK(BM_GpPredict)->Arg(200)->Arg(2000);

void BM_LogMarginalLikelihood(benchmark::State& state) {
  const auto X = random_inputs(static_cast<std::size_t>(state.range(0)), 3, 3);
  const Eigen::VectorXd y = X.col(2).array().sin();
  const auto h = gp::default_init(X, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(gp::log_marginal_likelihood(X, y, h));
}
BENCHMARK(BM_LogMarginalLikelihood)->Arg(100)->Arg(200)->Arg(400);

void BM_ProjectToQ(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  Eigen::VectorXd atom(3 * 1024);
  for (auto& v : atom) v = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(dict::project_to_Q(atom));
}
BENCHMARK(BM_ProjectToQ);

struct ScenarioFixture {
  sim::ScenarioData data;
  traj::GridSpec grid;
  Eigen::MatrixXd Z;

  ScenarioFixture() : data(sim::generate_dataset({})) {
    grid = predict::grid_for_bounds(data.map.bounds(), 1.0);
    Z.resize(static_cast<Eigen::Index>(grid.vector_length()),
             static_cast<Eigen::Index>(data.dataset.size()));
    for (std::size_t i = 0; i < data.dataset.size(); ++i) {
      const auto t = traj::resample(data.dataset[i].trajectory, 0.5);
      Z.col(static_cast<Eigen::Index>(i)) = traj::vectorize(t, grid).stacked();
    }
  }
};

const ScenarioFixture& scenario() {
  static const ScenarioFixture f;
  return f;
}

void BM_LearnDictionary(benchmark::State& state) {
  dict::SparseCodingProblem pr;
  pr.Z = scenario().Z;
  pr.k_max = static_cast<std::size_t>(state.range(0));
  pr.max_iters = 50;
  for (auto _ : state) benchmark::DoNotOptimize(dict::learn_dictionary(pr));
}
BENCHMARK(BM_LearnDictionary)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto& sc = scenario();
  predict::TrainConfig cfg;
  cfg.gp_max_points = 200;
  cfg.gp_restarts = 0;
  cfg.gp_iters = 20;
  const auto model = predict::train(sc.data.dataset, &sc.data.map,
                                    context::FeatureSet::CASNSC3, cfg);
  const auto& rec = sc.data.dataset.front();
  predict::Observation obs{{}, *rec.lights};
  for (const auto& p : rec.trajectory.points) {
    if (p.t >= *rec.t_enter - 2.5 - 1e-9 && p.t <= *rec.t_enter + 1e-9) {
      obs.trajectory.points.push_back(p);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(predict::predict(obs, model, 5.0, 0.5));
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
