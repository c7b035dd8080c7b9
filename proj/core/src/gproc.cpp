#include "casnsc/gproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "casnsc/errors.hpp"

namespace casnsc::gp {

namespace {

constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

// Factorizes K + (sn^2 + jitter) I with jitter escalation.
Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& K, double noise_var,
                                      double& jitter_used) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += noise_var + jitter;
    llt.compute(A);
    if (llt.info() == Eigen::Success) {
      jitter_used = jitter;
      return llt;
    }
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed after jitter escalation to 1e-6 (n="
      << K.rows() << ", min diag=" << K.diagonal().minCoeff()
      << ", noise var=" << noise_var << ")";
  throw NumericalError(msg.str());
}

void check_training_set(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0) throw InvalidInput("GP needs at least one training pair");
  if (X.rows() != y.size()) throw InvalidInput("GP inputs and targets differ in length");
  if (!X.allFinite() || !y.allFinite()) {
    throw InvalidInput("GP training data has non-finite values");
  }
}

}  // namespace

Hyperparams Hyperparams::from_values(const Eigen::VectorXd& lengths, double signal_std,
                                     double noise_std) {
  Hyperparams h;
  h.log_lengths = lengths.array().log();
  h.log_signal = std::log(signal_std);
  h.log_noise = std::log(noise_std);
  h.validate();
  return h;
}

Eigen::VectorXd Hyperparams::packed() const {
  Eigen::VectorXd v(log_lengths.size() + 2);
  v << log_lengths, log_signal, log_noise;
  return v;
}

Hyperparams Hyperparams::unpack(const Eigen::VectorXd& v) {
  if (v.size() < 3) throw InvalidInput("packed hyperparameters need >= 3 entries");
  Hyperparams h;
  h.log_lengths = v.head(v.size() - 2);
  h.log_signal = v[v.size() - 2];
  h.log_noise = v[v.size() - 1];
  return h;
}

void Hyperparams::validate() const {
  if (log_lengths.size() == 0) throw InvalidInput("hyperparameters need >= 1 length scale");
  if (!log_lengths.allFinite() || !std::isfinite(log_signal) || !std::isfinite(log_noise)) {
    throw InvalidInput("hyperparameters must be finite and strictly positive");
  }
}

bool Hyperparams::operator==(const Hyperparams& o) const {
  return log_lengths.size() == o.log_lengths.size() && log_lengths == o.log_lengths &&
         log_signal == o.log_signal && log_noise == o.log_noise;
}

double kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b, const Hyperparams& h) {
  if (a.size() != b.size() || a.size() != h.log_lengths.size()) {
    throw InvalidInput("kernel inputs must match the number of length scales");
  }
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / std::exp(h.log_lengths[i]);
    r2 += d * d;
  }
  return std::exp(2.0 * h.log_signal - 0.5 * r2);
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Hyperparams& h) {
  if (X.cols() != h.log_lengths.size()) {
    throw InvalidInput("input dimension does not match the number of length scales");
  }
  const Eigen::Index n = X.rows();
  const Eigen::RowVectorXd inv_l = (-h.log_lengths.array()).exp().matrix().transpose();
  const Eigen::MatrixXd Xs = X.array().rowwise() * inv_l.array();
  const double sf2 = std::exp(2.0 * h.log_signal);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = sf2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r2 = (Xs.row(i) - Xs.row(j)).squaredNorm();
      const double v = sf2 * std::exp(-0.5 * r2);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

GPRegressor GPRegressor::fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets,
                             const Hyperparams& h) {
  check_training_set(inputs, targets);
  h.validate();
  if (inputs.cols() != h.log_lengths.size()) {
    throw InvalidInput("input dimension does not match the number of length scales");
  }
  GPRegressor gp;
  gp.X_ = std::move(inputs);
  gp.y_ = std::move(targets);
  gp.h_ = h;
  const Eigen::MatrixXd K = gram(gp.X_, h);
  gp.llt_ = factorize(K, std::exp(2.0 * h.log_noise), gp.jitter_);
  gp.alpha_ = gp.llt_.solve(gp.y_);
  gp.fitted_ = true;
  return gp;
}

Posterior GPRegressor::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (!fitted_) throw ModelError("GP regressor used before fit");
  if (x.size() != X_.cols()) throw InvalidInput("query dimension mismatch");
  const Eigen::Index n = X_.rows();
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks[i] = kernel(X_.row(i).transpose(), x, h_);

  Posterior out;
  out.mean = ks.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(ks);
  double latent = std::exp(2.0 * h_.log_signal) - v.squaredNorm();
  if (latent < kMinVariance) {
    latent = kMinVariance;
    clamps_.bump();
  }
  out.latent_variance = latent;
  out.variance = latent + std::exp(2.0 * h_.log_noise);
  return out;
}

namespace {

LogLikelihood lml_from_factor(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Hyperparams& h, const Eigen::LLT<Eigen::MatrixXd>& llt,
                              const Eigen::VectorXd& alpha) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  LogLikelihood out;
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.value = -0.5 * y.dot(alpha) - 0.5 * log_det -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // d/dtheta = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta)
  Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(n, n));
  W = alpha * alpha.transpose() - W;

  const Eigen::VectorXd inv_l2 = (-2.0 * h.log_lengths.array()).exp();
  const double sf2 = std::exp(2.0 * h.log_signal);
  out.gradient = Eigen::VectorXd::Zero(m + 2);
  double g_signal = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    g_signal += W(j, j) * sf2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < m; ++d) {
        const double diff = X(i, d) - X(j, d);
        r2 += diff * diff * inv_l2[d];
      }
      const double kf = sf2 * std::exp(-0.5 * r2);
      const double wk = 2.0 * W(i, j) * kf;  // symmetric pair (i,j) and (j,i)
      g_signal += wk;
      for (Eigen::Index d = 0; d < m; ++d) {
        const double diff = X(i, d) - X(j, d);
        out.gradient[d] += 0.5 * wk * diff * diff * inv_l2[d];
      }
    }
  }
  out.gradient[m] = g_signal;  // 0.5 * sum W .* (2 Kf)
  out.gradient[m + 1] = std::exp(2.0 * h.log_noise) * W.trace();
  return out;
}

}  // namespace

LogLikelihood GPRegressor::log_marginal_likelihood() const {
  if (!fitted_) throw ModelError("GP regressor used before fit");
  return lml_from_factor(X_, y_, h_, llt_, alpha_);
}

LogLikelihood log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const Hyperparams& h) {
  check_training_set(X, y);
  const Eigen::MatrixXd K = gram(X, h);
  double jitter = 0.0;
  const auto llt = factorize(K, std::exp(2.0 * h.log_noise), jitter);
  const Eigen::VectorXd alpha = llt.solve(y);
  return lml_from_factor(X, y, h, llt, alpha);
}

Hyperparams default_init(const Eigen::MatrixXd& X, double noise_std) {
  Hyperparams h;
  h.log_lengths.resize(X.cols());
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    const double spread = X.rows() > 1 ? std::sqrt((X.col(d).array() - X.col(d).mean())
                                                       .square()
                                                       .sum() /
                                                   static_cast<double>(X.rows() - 1))
                                       : 0.0;
    const double l = spread > 0.0 ? spread : 1.0;
    h.log_lengths[d] = std::clamp(std::log(l), -kLogBound, kLogBound);
  }
  h.log_signal = 0.0;
  h.log_noise = std::clamp(std::log(noise_std), -kLogBound, kLogBound);
  return h;
}

namespace {

struct AscentRun {
  Eigen::VectorXd best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

// iRprop- ascent inside the [lower, upper] box; keeps the best iterate.
AscentRun rprop_ascent(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       Eigen::VectorXd theta, const std::vector<bool>& frozen,
                       const OptimizerOptions& opts) {
  AscentRun run;
  const Eigen::Index k = theta.size();
  Eigen::VectorXd step = Eigen::VectorXd::Constant(k, 0.1);
  Eigen::VectorXd prev_grad = Eigen::VectorXd::Zero(k);
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    LogLikelihood ll;
    try {
      ll = log_marginal_likelihood(X, y, Hyperparams::unpack(theta));
      ++run.evaluations;
    } catch (const NumericalError&) {
      ++run.evaluations;
      break;
    }
    if (!std::isfinite(ll.value)) break;
    if (ll.value > run.best_value) {
      run.best_value = ll.value;
      run.best = theta;
    }
    for (Eigen::Index d = 0; d < k; ++d) {
      if (frozen[static_cast<std::size_t>(d)]) ll.gradient[d] = 0.0;
    }
    if (ll.gradient.cwiseAbs().maxCoeff() < opts.grad_tol) break;

    for (Eigen::Index d = 0; d < k; ++d) {
      double g = ll.gradient[d];
      const double sign_change = prev_grad[d] * g;
      if (sign_change > 0.0) {
        step[d] = std::min(step[d] * 1.2, 1.0);
      } else if (sign_change < 0.0) {
        step[d] = std::max(step[d] * 0.5, 1e-6);
        g = 0.0;
      }
      if (g > 0.0) theta[d] += step[d];
      if (g < 0.0) theta[d] -= step[d];
      theta[d] = std::clamp(theta[d], opts.lower, opts.upper);
      prev_grad[d] = g;
    }
    if (step.maxCoeff() <= 1e-6) break;
  }
  return run;
}

}  // namespace

OptimizationResult optimize_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const Hyperparams& init, std::size_t restarts,
                                        std::uint64_t seed, const OptimizerOptions& opts) {
  check_training_set(X, y);
  if (X.rows() < 2) throw InvalidInput("hyperparameter optimization needs >= 2 pairs");
  init.validate();
  if (X.cols() != init.log_lengths.size()) {
    throw InvalidInput("input dimension does not match the number of length scales");
  }

  const Eigen::Index m = X.cols();
  std::vector<bool> frozen(static_cast<std::size_t>(m + 2), false);
  for (Eigen::Index d = 0; d < m; ++d) {
    frozen[static_cast<std::size_t>(d)] = X.col(d).maxCoeff() == X.col(d).minCoeff();
  }

  OptimizationResult result;
  result.hyperparams = init;
  const Eigen::VectorXd theta0 = init.packed();
  try {
    result.init_log_likelihood = log_marginal_likelihood(X, y, init).value;
  } catch (const NumericalError&) {
    result.init_log_likelihood = -std::numeric_limits<double>::infinity();
  }
  result.log_likelihood = result.init_log_likelihood;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, opts.perturbation_std);
  for (std::size_t r = 0; r <= restarts; ++r) {
    Eigen::VectorXd start = theta0;
    if (r > 0) {
      for (Eigen::Index d = 0; d < start.size(); ++d) {
        const double z = normal(rng);
        if (!frozen[static_cast<std::size_t>(d)]) start[d] += z;
      }
    }
    start = start.cwiseMax(opts.lower).cwiseMin(opts.upper);
    const AscentRun run = rprop_ascent(X, y, start, frozen, opts);
    result.evaluations += run.evaluations;
    if (run.best.size() > 0 && run.best_value > result.log_likelihood) {
      result.log_likelihood = run.best_value;
      result.hyperparams = Hyperparams::unpack(run.best);
    }
  }
  if (!std::isfinite(result.log_likelihood)) {
    result.hyperparams = init;
    result.fell_back_to_init = true;
  }
  return result;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap,
                                           std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n <= cap) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double log_normal_pdf(double v, double mean, double variance) {
  const double d = v - mean;
  return -0.5 * d * d / variance - 0.5 * std::log(2.0 * std::numbers::pi * variance);
}

double trajectory_log_likelihood(std::span<const MotionSample> observed,
                                 const GPMotionPattern& pattern) {
  if (observed.empty()) throw InvalidInput("observed trajectory is empty");
  double total = 0.0;
  for (const auto& s : observed) {
    const Posterior px = pattern.gp_x.predict(s.features);
    const Posterior py = pattern.gp_y.predict(s.features);
    total += log_normal_pdf(s.vx, px.mean, px.variance) +
             log_normal_pdf(s.vy, py.mean, py.variance);
  }
  return total;
}

}  // namespace casnsc::gp
