#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "casnsc/errors.hpp"
#include "casnsc/gproc.hpp"

using namespace casnsc;
using namespace casnsc::gp;

namespace {

Hyperparams hp(std::initializer_list<double> lengths, double sf, double sn) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(lengths.size()));
  Eigen::Index i = 0;
  for (double v : lengths) l[i++] = v;
  return Hyperparams::from_values(l, sf, sn);
}

Eigen::MatrixXd random_inputs(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m, double lo,
                              double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd X(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) X(i, j) = u(rng);
  }
  return X;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

// Posterior by explicit dense solve, written out from the GP equations.
Posterior dense_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Hyperparams& h, const Eigen::VectorXd& xs) {
  const Eigen::Index n = X.rows();
  const auto l = h.lengths();
  const double sf2 = h.signal_std() * h.signal_std();
  auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return sf2 * std::exp(-0.5 * ((a - b).array() / l.array()).square().sum());
  };
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ks[i] = k(X.row(i).transpose(), xs);
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k(X.row(i).transpose(), X.row(j).transpose());
  }
  K.diagonal().array() += h.noise_std() * h.noise_std();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  Posterior p;
  p.mean = ks.dot(lu.solve(y));
  p.latent_variance = sf2 - ks.dot(lu.solve(ks));
  p.variance = p.latent_variance + h.noise_std() * h.noise_std();
  return p;
}

}  // namespace

TEST(Kernel, Examples) {
  const auto h = hp({1, 1, 1}, 1.0, 0.1);
  const Eigen::Vector3d a(0, 0, 0), b(1, 0, 0);
  EXPECT_NEAR(kernel(a, a, h), 1.0, 1e-15);
  EXPECT_NEAR(kernel(a, b, h), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(kernel(a, b, h), 0.60653, 1e-5);
  const auto h2 = hp({0.5, 2.0}, 1.7, 0.1);
  EXPECT_NEAR(kernel(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2), h2), 1.7 * 1.7, 1e-12);
}

TEST(Kernel, DecaysMonotonicallyWithDistance) {
  const auto h = hp({1.3, 0.7}, 1.0, 0.1);
  double prev = kernel(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0), h);
  for (double r = 0.25; r < 20; r += 0.25) {
    const double v = kernel(Eigen::Vector2d(0, 0), Eigen::Vector2d(r, r), h);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  EXPECT_LT(prev, 1e-12);
}

TEST(Kernel, DimensionMismatchThrows) {
  const auto h = hp({1, 1}, 1.0, 0.1);
  EXPECT_THROW(kernel(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 0, 0), h), InvalidInput);
}

TEST(Gram, SymmetricWithinTolerance) {
  std::mt19937_64 rng(4);
  const auto X = random_inputs(rng, 30, 3, -2, 2);
  const auto K = gram(X, hp({0.4, 1.1, 2.0}, 1.3, 0.1));
  EXPECT_LT((K - K.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fit, InterpolatesSingleDatum) {
  Eigen::MatrixXd X(1, 2);
  X << 0.3, -0.4;
  const auto gp = GPRegressor::fit(X, Eigen::VectorXd::Constant(1, 0.8), hp({1, 1}, 1.0, 1e-6));
  EXPECT_NEAR(gp.predict(X.row(0).transpose()).mean, 0.8, 1e-4);
}

TEST(Fit, RevertsToPriorFarFromData) {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  const auto h = hp({0.5}, 1.4, 0.1);
  const auto gp = GPRegressor::fit(X, Eigen::Vector2d(1.0, -0.5), h);
  const auto p = gp.predict(Eigen::VectorXd::Constant(1, 100.0));
  EXPECT_NEAR(p.mean, 0.0, 1e-12);
  EXPECT_NEAR(p.latent_variance, 1.4 * 1.4, 1e-12);
}

TEST(Fit, TwoPointsMatchHandSolvedSystem) {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  const Eigen::Vector2d y(1.0, -0.5);
  const auto h = hp({1.0}, 1.0, 0.1);
  const auto gp = GPRegressor::fit(X, y, h);
  // K + sn^2 I = [[a, b], [b, a]] with a = 1.01, b = exp(-1/2).
  const double a = 1.01, b = std::exp(-0.5), det = a * a - b * b;
  const double al0 = (a * y[0] - b * y[1]) / det, al1 = (a * y[1] - b * y[0]) / det;
  const double xs = 0.4;
  const double k0 = std::exp(-0.5 * xs * xs), k1 = std::exp(-0.5 * (xs - 1) * (xs - 1));
  const double mean = k0 * al0 + k1 * al1;
  const double quad = (a * k0 * k0 - 2 * b * k0 * k1 + a * k1 * k1) / det;
  const auto p = gp.predict(Eigen::VectorXd::Constant(1, xs));
  EXPECT_NEAR(p.mean, mean, 1e-10);
  EXPECT_NEAR(p.latent_variance, 1.0 - quad, 1e-10);
  EXPECT_NEAR(p.variance, 1.0 - quad + 0.01, 1e-10);
}

TEST(Fit, RandomProblemsMatchDenseSolve) {
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 12;
    const auto X = random_inputs(rng, n, 3, -2, 2);
    const auto y = random_vector(rng, n);
    const auto h = hp({u(rng), u(rng), u(rng)}, u(rng), 0.1 + 0.2 * u(rng));
    const auto gp = GPRegressor::fit(X, y, h);
    const auto xs = random_inputs(rng, 1, 3, -2, 2).row(0).transpose();
    const auto ours = gp.predict(xs);
    const auto oracle = dense_posterior(X, y, h, xs);
    EXPECT_NEAR(ours.mean, oracle.mean, 1e-10) << trial;
    EXPECT_NEAR(ours.variance, oracle.variance, 1e-10) << trial;
  }
}

TEST(Fit, DuplicateInputsStillFactorize) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(20, 2);
  const auto gp = GPRegressor::fit(X, Eigen::VectorXd::Ones(20), hp({1, 1}, 1.0, 1e-7));
  EXPECT_TRUE(gp.fitted());
  EXPECT_TRUE(std::isfinite(gp.predict(Eigen::Vector2d(0, 0)).mean));
}

TEST(Fit, RejectsBadInput) {
  EXPECT_THROW(GPRegressor::fit(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), hp({1, 1}, 1, 0.1)),
               InvalidInput);
  Eigen::MatrixXd X(1, 2);
  X << std::nan(""), 0;
  EXPECT_THROW(GPRegressor::fit(X, Eigen::VectorXd::Zero(1), hp({1, 1}, 1, 0.1)), InvalidInput);
}

TEST(Predict, VarianceWithinPriorBounds) {
  std::mt19937_64 rng(8);
  const auto X = random_inputs(rng, 25, 2, -1, 1);
  const auto h = hp({0.3, 0.5}, 1.2, 0.05);
  const auto gp = GPRegressor::fit(X, random_vector(rng, 25), h);
  const double prior = 1.2 * 1.2 + 0.05 * 0.05;
  for (int i = 0; i < 200; ++i) {
    const auto p = gp.predict(random_inputs(rng, 1, 2, -3, 3).row(0).transpose());
    EXPECT_GT(p.variance, 0.0);
    EXPECT_LE(p.variance, prior + 1e-12);
    EXPECT_GE(p.latent_variance, kMinVariance);
  }
}

TEST(LogMarginalLikelihood, SingleDatumFormula) {
  Eigen::MatrixXd X(1, 2);
  X << 0.2, 0.1;
  const double y = 0.7, sf = 1.3, sn = 0.2;
  const auto gp = GPRegressor::fit(X, Eigen::VectorXd::Constant(1, y), hp({1, 2}, sf, sn));
  const double v = sf * sf + sn * sn;
  const double expected = -0.5 * y * y / v - 0.5 * std::log(2 * std::numbers::pi * v);
  EXPECT_NEAR(gp.log_marginal_likelihood().value, expected, 1e-12);
}

TEST(LogMarginalLikelihood, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto X = random_inputs(rng, 10, 3, -2, 2);
    const auto y = random_vector(rng, 10);
    Hyperparams h;
    h.log_lengths = Eigen::Vector3d(u(rng), u(rng), u(rng));
    h.log_signal = u(rng);
    h.log_noise = -1.5 + 0.5 * u(rng);
    const auto ll = log_marginal_likelihood(X, y, h);
    const auto p = h.packed();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double step = 1e-5;
      Eigen::VectorXd up = p, dn = p;
      up[i] += step;
      dn[i] -= step;
      const double fd = (log_marginal_likelihood(X, y, Hyperparams::unpack(up)).value -
                         log_marginal_likelihood(X, y, Hyperparams::unpack(dn)).value) /
                        (2 * step);
      const double rel = std::abs(fd - ll.gradient[i]) / std::max(1.0, std::abs(fd));
      EXPECT_LT(rel, 1e-4) << "trial " << trial << " component " << i;
    }
  }
}

TEST(LogMarginalLikelihood, DuplicatedDataIsReproducible) {
  std::mt19937_64 rng(13);
  const auto X = random_inputs(rng, 6, 2, -1, 1);
  const auto y = random_vector(rng, 6);
  Eigen::MatrixXd X2(12, 2);
  X2 << X, X;
  Eigen::VectorXd y2(12);
  y2 << y, y;
  const auto h = hp({1, 1}, 1, 0.2);
  const double a = log_marginal_likelihood(X2, y2, h).value;
  EXPECT_EQ(a, log_marginal_likelihood(X2, y2, h).value);
  EXPECT_NE(a, log_marginal_likelihood(X, y, h).value);
}

TEST(Optimize, NeverWorseThanInitAndBounded) {
  std::mt19937_64 rng(21);
  const auto X = random_inputs(rng, 30, 2, -2, 2);
  Eigen::VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) y[i] = std::sin(X(i, 0)) + 0.05 * random_vector(rng, 1)[0];
  const auto init = default_init(X, 0.1);
  const auto r = optimize_hyperparams(X, y, init, 2, 5);
  const double at_init = log_marginal_likelihood(X, y, init).value;
  EXPECT_GE(r.log_likelihood, at_init - 1e-12);
  const auto p = r.hyperparams.packed();
  EXPECT_LE(p.maxCoeff(), kLogBound);
  EXPECT_GE(p.minCoeff(), -kLogBound);
}

TEST(Optimize, StationaryInitIsKept) {
  std::mt19937_64 rng(22);
  const auto X = random_inputs(rng, 20, 1, -2, 2);
  Eigen::VectorXd y(20);
  for (Eigen::Index i = 0; i < 20; ++i) y[i] = std::cos(X(i, 0));
  const auto first = optimize_hyperparams(X, y, default_init(X, 0.1), 0, 1);
  const auto again = optimize_hyperparams(X, y, first.hyperparams, 0, 1);
  EXPECT_NEAR(again.log_likelihood, first.log_likelihood, 1e-6);
  EXPECT_GE(again.log_likelihood, first.log_likelihood - 1e-12);
}

TEST(Optimize, RecoversArdRelevanceOrdering) {
  std::mt19937_64 rng(31);
  const Eigen::Index n = 120;
  const auto X = random_inputs(rng, n, 2, 0, 10);
  const auto truth = hp({1.0, 5.0}, 1.0, 0.05);
  Eigen::MatrixXd K = gram(X, truth);
  K.diagonal().array() += 0.05 * 0.05 + 1e-8;
  const Eigen::LLT<Eigen::MatrixXd> llt(K);
  const Eigen::VectorXd y = llt.matrixL() * random_vector(rng, n);
  const auto r = optimize_hyperparams(X, y, default_init(X, 0.1), 2, 3);
  const auto l = r.hyperparams.lengths();
  EXPECT_GT(l[1] / l[0], 2.0) << "l = " << l.transpose();
}

TEST(Optimize, DeterministicForFixedSeed) {
  std::mt19937_64 rng(41);
  const auto X = random_inputs(rng, 25, 2, -2, 2);
  const auto y = random_vector(rng, 25);
  const auto a = optimize_hyperparams(X, y, default_init(X, 0.1), 3, 9);
  const auto b = optimize_hyperparams(X, y, default_init(X, 0.1), 3, 9);
  EXPECT_TRUE(a.hyperparams == b.hyperparams);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(Optimize, ConstantFeatureLengthIsLeftAtInit) {
  std::mt19937_64 rng(42);
  Eigen::MatrixXd X = random_inputs(rng, 20, 2, -2, 2);
  X.col(1).setConstant(1.0);
  const auto y = random_vector(rng, 20);
  const auto init = default_init(X, 0.1);
  EXPECT_EQ(init.log_lengths[1], 0.0);
  const auto r = optimize_hyperparams(X, y, init, 1, 2);
  EXPECT_EQ(r.hyperparams.log_lengths[1], init.log_lengths[1]);
}

TEST(Subsample, SortedDistinctAndCapped) {
  const auto idx = subsample_indices(100, 30, 4);
  ASSERT_EQ(idx.size(), 30u);
  for (std::size_t i = 1; i < idx.size(); ++i) EXPECT_LT(idx[i - 1], idx[i]);
  EXPECT_EQ(subsample_indices(10, 30, 4).size(), 10u);
  EXPECT_EQ(idx, subsample_indices(100, 30, 4));
}

namespace {

GPMotionPattern small_pattern(std::mt19937_64& rng) {
  const auto X = random_inputs(rng, 8, 2, -1, 1);
  const auto h = hp({0.7, 0.9}, 1.0, 0.2);
  return {GPRegressor::fit(X, random_vector(rng, 8), h), GPRegressor::fit(X, random_vector(rng, 8), h)};
}

}  // namespace

TEST(TrajectoryLogLikelihood, AtPosteriorMeanWithEqualVariances) {
  // Single training point far away: both posteriors equal the prior.
  Eigen::MatrixXd X(1, 2);
  X << 100, 100;
  const auto h = hp({1, 1}, 0.8, 0.3);
  GPMotionPattern pat{GPRegressor::fit(X, Eigen::VectorXd::Constant(1, 0.5), h),
                      GPRegressor::fit(X, Eigen::VectorXd::Constant(1, -0.5), h)};
  MotionSample s{Eigen::Vector2d(0, 0), 0.0, 0.0};
  const auto px = pat.gp_x.predict(s.features);
  const auto py = pat.gp_y.predict(s.features);
  s.vx = px.mean;
  s.vy = py.mean;
  ASSERT_NEAR(px.variance, py.variance, 1e-15);
  const std::vector<MotionSample> obs{s};
  EXPECT_NEAR(trajectory_log_likelihood(obs, pat),
              -std::log(2 * std::numbers::pi * px.variance), 1e-12);
}

TEST(TrajectoryLogLikelihood, DecreasesAwayFromMean) {
  std::mt19937_64 rng(51);
  const auto pat = small_pattern(rng);
  MotionSample s{Eigen::Vector2d(0.1, 0.2), 0, 0};
  s.vx = pat.gp_x.predict(s.features).mean;
  s.vy = pat.gp_y.predict(s.features).mean;
  double prev = trajectory_log_likelihood(std::vector<MotionSample>{s}, pat);
  for (int i = 0; i < 10; ++i) {
    s.vx += 0.1;
    const double v = trajectory_log_likelihood(std::vector<MotionSample>{s}, pat);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(TrajectoryLogLikelihood, MatchesHighPrecisionProduct) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pat = small_pattern(rng);
    std::vector<MotionSample> obs;
    for (int i = 0; i < 5; ++i) {
      const auto v = random_vector(rng, 2);
      obs.push_back({random_inputs(rng, 1, 2, -1, 1).row(0).transpose(), v[0], v[1]});
    }
    long double prod = 1.0L;
    for (const auto& s : obs) {
      for (auto [gp, v] : {std::pair{&pat.gp_x, s.vx}, std::pair{&pat.gp_y, s.vy}}) {
        const auto p = gp->predict(s.features);
        const long double var = p.variance;
        const long double d = static_cast<long double>(v) - p.mean;
        prod *= std::exp(-d * d / (2 * var)) / std::sqrt(2 * std::numbers::pi_v<long double> * var);
      }
    }
    EXPECT_NEAR(trajectory_log_likelihood(obs, pat), static_cast<double>(std::log(prod)), 1e-9);
  }
}

TEST(TrajectoryLogLikelihood, EmptyThrows) {
  std::mt19937_64 rng(53);
  const auto pat = small_pattern(rng);
  EXPECT_THROW(trajectory_log_likelihood(std::span<const MotionSample>{}, pat), InvalidInput);
}

TEST(MotionPattern, ComponentsAreIndependent) {
  std::mt19937_64 rng(54);
  const auto X = random_inputs(rng, 10, 2, -1, 1);
  const auto h = hp({0.7, 0.9}, 1.0, 0.2);
  const auto yx = random_vector(rng, 10);
  const GPMotionPattern a{GPRegressor::fit(X, yx, h), GPRegressor::fit(X, random_vector(rng, 10), h)};
  const GPMotionPattern b{GPRegressor::fit(X, yx, h), GPRegressor::fit(X, random_vector(rng, 10), h)};
  const Eigen::Vector2d q(0.3, -0.2);
  EXPECT_EQ(a.gp_x.predict(q).mean, b.gp_x.predict(q).mean);
  EXPECT_EQ(a.gp_x.predict(q).variance, b.gp_x.predict(q).variance);
  EXPECT_NE(a.gp_y.predict(q).mean, b.gp_y.predict(q).mean);
}
