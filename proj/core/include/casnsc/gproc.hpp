#pragma once

// Exact Gaussian-process regression with a squared-exponential ARD kernel
//
//   k(a, b) = sf^2 * exp(-sum_i (a_i - b_i)^2 / (2 l_i^2))
//
// plus i.i.d. observation noise sn^2. Hyperparameters live in log space.
// A motion pattern is a pair of independent GPs mapping transition features
// to the x and y components of the (unit-normalized) velocity.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace casnsc::gp {

struct Hyperparams {
  Eigen::VectorXd log_lengths;
  double log_signal = 0.0;
  double log_noise = std::log(0.1);

  static Hyperparams from_values(const Eigen::VectorXd& lengths, double signal_std,
                                 double noise_std);

  std::size_t dim() const { return static_cast<std::size_t>(log_lengths.size()); }
  Eigen::VectorXd lengths() const { return log_lengths.array().exp(); }
  double signal_std() const { return std::exp(log_signal); }
  double noise_std() const { return std::exp(log_noise); }

  /// [log l_1 .. log l_m, log sf, log sn]
  Eigen::VectorXd packed() const;
  static Hyperparams unpack(const Eigen::VectorXd& v);

  void validate() const;
  bool operator==(const Hyperparams& o) const;
};

/// Throws InvalidInput on dimension mismatch.
double kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b, const Hyperparams& h);

/// Noise-free gram matrix of the rows of X.
Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Hyperparams& h);

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;         // latent + noise
  double latent_variance = 0.0;  // clamped below at kMinVariance
};

struct LogLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;  // w.r.t. Hyperparams::packed()
};

inline constexpr double kMinVariance = 1e-15;
inline constexpr double kLogBound = 3.0;

/// Counter that survives copies of the regressor (copies start from the
/// source's current count).
class EventCounter {
 public:
  EventCounter() = default;
  EventCounter(const EventCounter& o) : n_(o.n_.load()) {}
  EventCounter& operator=(const EventCounter& o) {
    n_.store(o.n_.load());
    return *this;
  }
  void bump() const { n_.fetch_add(1, std::memory_order_relaxed); }
  std::size_t value() const { return n_.load(); }

 private:
  mutable std::atomic<std::size_t> n_{0};
};

class GPRegressor {
 public:
  GPRegressor() = default;

  /// Factorizes K + sn^2 I, escalating diagonal jitter 1e-10 .. 1e-6 when the
  /// plain factorization fails. Inputs are one feature vector per row.
  static GPRegressor fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets,
                         const Hyperparams& h);

  Posterior predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  LogLikelihood log_marginal_likelihood() const;

  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& targets() const { return y_; }
  const Hyperparams& hyperparams() const { return h_; }
  double jitter() const { return jitter_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  bool fitted() const { return fitted_; }
  std::size_t clamp_events() const { return clamps_.value(); }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Hyperparams h_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  bool fitted_ = false;
  EventCounter clamps_;
};

/// Log marginal likelihood and its gradient over the packed log
/// hyperparameters, without keeping the factorization.
LogLikelihood log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const Hyperparams& h);

struct OptimizerOptions {
  std::size_t max_iters = 80;
  double lower = -kLogBound;
  double upper = kLogBound;
  double perturbation_std = 1.0;  // log-space restart spread
  double grad_tol = 1e-6;
};

struct OptimizationResult {
  Hyperparams hyperparams;
  double log_likelihood = 0.0;
  double init_log_likelihood = 0.0;
  std::size_t evaluations = 0;
  bool fell_back_to_init = false;
};

/// Multi-start maximization of the log marginal likelihood with a bounded
/// resilient-propagation ascent. Start 0 is `init`; `restarts` more starts
/// perturb it with a seeded normal draw. Length scales of features that are
/// constant in the data are not identifiable and are left at their init.
OptimizationResult optimize_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const Hyperparams& init, std::size_t restarts,
                                        std::uint64_t seed,
                                        const OptimizerOptions& opts = {});

/// Data-driven starting point: l_i = spread of feature i (1 when constant),
/// sf = 1, sn = noise_std; all clipped into the log bounds.
Hyperparams default_init(const Eigen::MatrixXd& X, double noise_std);

/// Sorted uniform sample of min(n, cap) indices out of n.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap,
                                           std::uint64_t seed);

struct MotionSample {
  Eigen::VectorXd features;
  double vx = 0.0;
  double vy = 0.0;
};

struct GPMotionPattern {
  GPRegressor gp_x;
  GPRegressor gp_y;
};

/// sum over samples of log N(vx; mu_x, s_x^2) + log N(vy; mu_y, s_y^2).
double trajectory_log_likelihood(std::span<const MotionSample> observed,
                                 const GPMotionPattern& pattern);

double log_normal_pdf(double v, double mean, double variance);

}  // namespace casnsc::gp
