#pragma once

#include "ionbench/core.hpp"
#include "ionbench/optimize.hpp"

#include <cstdint>

namespace ionbench {

/// Squared-exponential kernel with one length scale per input dimension.
struct GPHyperparameters {
  double signal_variance = 1.0;
  Vector length_scales;
  double noise_variance = 1e-2;
};

/// Prior mean: the training average, or an ordinary least-squares plane in the
/// inputs (the GP then models what the plane leaves over).
enum class GPMean { constant, linear };

struct GPOptions {
  GPMean mean = GPMean::constant;
  int restarts = 4;                 // random starts on top of the default start
  std::uint64_t seed = 1;
  double min_length = 1e-2, max_length = 1e2;
  double min_signal = 1e-3, max_signal = 1e2;
  double min_noise = 1e-8, max_noise = 1.0;
  double max_jitter = 1e-4;         // relative to the signal variance
  NelderMeadOptions search{600, 1e-10, 0.15};
};

struct GPPrediction {
  Vector mean;
  Vector variance;  // latent function variance, noise excluded
};

/// Exact GP regression with a constant mean equal to the training average.
class GaussianProcess {
 public:
  /// Hyperparameters maximise the log marginal likelihood over a multi-start
  /// bounded Nelder-Mead search in log space.
  static GaussianProcess fit(const Matrix& X, const Vector& y, const GPOptions& options = {});

  /// Conditions on the data with the given hyperparameters, no search.
  static GaussianProcess condition(const Matrix& X, const Vector& y, const GPHyperparameters& hyper,
                                   double max_jitter = 1e-4, GPMean mean = GPMean::constant);

  GPPrediction predict(const Matrix& Xs) const;

  const GPHyperparameters& hyperparameters() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }
  GPMean mean_kind() const { return mean_; }
  /// Intercept followed by one slope per input (slopes are zero for a constant mean).
  const Vector& mean_coefficients() const { return beta_; }
  double jitter() const { return jitter_; }
  const Matrix& inputs() const { return X_; }
  const Vector& targets() const { return y_; }

 private:
  Matrix X_;
  Vector y_;
  GPHyperparameters hyper_;
  GPMean mean_ = GPMean::constant;
  Vector beta_;
  double jitter_ = 0;
  double lml_ = 0;
  Eigen::LLT<Matrix> chol_;
  Vector alpha_;
};

/// k(a, b) = s^2 exp(-0.5 sum ((a_d - b_d) / l_d)^2) between the rows of A and B.
Matrix se_kernel(const Matrix& A, const Matrix& B, const GPHyperparameters& hyper);

/// Log marginal likelihood; throws Errc::non_positive_definite when the
/// covariance cannot be factorised even with the largest allowed jitter.
double gp_log_marginal_likelihood(const Matrix& X, const Vector& y, const GPHyperparameters& hyper,
                                  double max_jitter = 1e-4, GPMean mean = GPMean::constant);

/// Prior-mean coefficients for the training data, and their evaluation.
Vector gp_mean_coefficients(const Matrix& X, const Vector& y, GPMean mean);
Vector gp_mean_values(const Matrix& X, const Vector& beta);

}  // namespace ionbench
