#include "ionbench/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace ionbench {

namespace {

struct Factor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0;
};

// Cholesky of K + noise I, escalating a diagonal jitter by decades from
// 1e-10 s^2 until it succeeds or passes the cap.
Factor factorize(const Matrix& K, const GPHyperparameters& hyper, double max_jitter) {
  const Eigen::Index n = K.rows();
  Matrix C = K;
  C.diagonal().array() += hyper.noise_variance;
  Factor f;
  f.llt.compute(C);
  if (f.llt.info() == Eigen::Success) return f;
  for (double rel = 1e-10; rel <= max_jitter * (1 + 1e-12); rel *= 10) {
    f.jitter = rel * hyper.signal_variance;
    f.llt.compute(C + f.jitter * Matrix::Identity(n, n));
    if (f.llt.info() == Eigen::Success) return f;
  }
  throw Error(Errc::non_positive_definite, "GP covariance is not positive definite even with jitter");
}

double lml_from(const Factor& f, const Vector& r) {
  const Vector alpha = f.llt.solve(r);
  const double log_det = 2.0 * f.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * r.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(r.size()) * std::log(2 * std::numbers::pi);
}

void check_data(const Matrix& X, const Vector& y) {
  if (X.rows() < 2) throw Error(Errc::domain, "GP needs at least two training points");
  if (X.rows() != y.size()) throw Error(Errc::domain, "GP inputs and targets differ in length");
  if (!X.allFinite() || !y.allFinite()) throw Error(Errc::domain, "GP training data must be finite");
}

}  // namespace

Vector gp_mean_coefficients(const Matrix& X, const Vector& y, GPMean mean) {
  Vector beta = Vector::Zero(X.cols() + 1);
  if (mean == GPMean::constant) {
    beta[0] = y.mean();
    return beta;
  }
  // Least squares on centred inputs; a tiny ridge keeps collinear inputs solvable.
  const Vector xm = X.colwise().mean().transpose();
  const Matrix Xc = X.rowwise() - xm.transpose();
  Matrix G = Xc.transpose() * Xc;
  G.diagonal().array() += 1e-10 * std::max(G.trace(), 1.0);
  const Vector slope = G.ldlt().solve(Xc.transpose() * (y.array() - y.mean()).matrix());
  beta[0] = y.mean() - xm.dot(slope);
  beta.tail(X.cols()) = slope;
  return beta;
}

Vector gp_mean_values(const Matrix& X, const Vector& beta) {
  return (X * beta.tail(X.cols())).array() + beta[0];
}

Matrix se_kernel(const Matrix& A, const Matrix& B, const GPHyperparameters& hyper) {
  const Eigen::ArrayXd inv = hyper.length_scales.array().inverse();
  const Matrix As = A * inv.matrix().asDiagonal();
  const Matrix Bs = B * inv.matrix().asDiagonal();
  Matrix K(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    K.col(j) = ((As.rowwise() - Bs.row(j)).rowwise().squaredNorm().array() * -0.5).exp();
  }
  return hyper.signal_variance * K;
}

double gp_log_marginal_likelihood(const Matrix& X, const Vector& y, const GPHyperparameters& hyper,
                                  double max_jitter, GPMean mean) {
  check_data(X, y);
  const Vector r = y - gp_mean_values(X, gp_mean_coefficients(X, y, mean));
  return lml_from(factorize(se_kernel(X, X, hyper), hyper, max_jitter), r);
}

GaussianProcess GaussianProcess::condition(const Matrix& X, const Vector& y, const GPHyperparameters& hyper,
                                           double max_jitter, GPMean mean) {
  check_data(X, y);
  if (hyper.length_scales.size() != X.cols()) throw Error(Errc::domain, "GP length scales do not match inputs");
  if (!(hyper.signal_variance > 0 && hyper.noise_variance >= 0 && (hyper.length_scales.array() > 0).all())) {
    throw Error(Errc::domain, "GP hyperparameters must be positive");
  }
  GaussianProcess gp;
  gp.X_ = X;
  gp.y_ = y;
  gp.hyper_ = hyper;
  gp.mean_ = mean;
  gp.beta_ = gp_mean_coefficients(X, y, mean);
  const Vector r = y - gp_mean_values(X, gp.beta_);
  Factor f = factorize(se_kernel(X, X, hyper), hyper, max_jitter);
  gp.lml_ = lml_from(f, r);
  gp.jitter_ = f.jitter;
  gp.chol_ = std::move(f.llt);
  gp.alpha_ = gp.chol_.solve(r);
  return gp;
}

GaussianProcess GaussianProcess::fit(const Matrix& X, const Vector& y, const GPOptions& opt) {
  check_data(X, y);
  const Eigen::Index d = X.cols();
  // Search vector: log s^2, log l_1..l_d, log noise.
  Vector lo(d + 2), hi(d + 2);
  lo[0] = std::log(opt.min_signal);
  hi[0] = std::log(opt.max_signal);
  lo.segment(1, d).setConstant(std::log(opt.min_length));
  hi.segment(1, d).setConstant(std::log(opt.max_length));
  lo[d + 1] = std::log(opt.min_noise);
  hi[d + 1] = std::log(opt.max_noise);

  auto unpack = [d](const Vector& z) {
    GPHyperparameters h;
    h.signal_variance = std::exp(z[0]);
    h.length_scales = z.segment(1, d).array().exp();
    h.noise_variance = std::exp(z[d + 1]);
    return h;
  };
  const Objective nlml = [&](const Vector& z) {
    try {
      return -gp_log_marginal_likelihood(X, y, unpack(z), opt.max_jitter, opt.mean);
    } catch (const Error&) {
      return 1e300;
    }
  };

  // Default start: data variance, unit-ish length scales from the input
  // spread, 1% noise.
  Vector start(d + 2);
  const Vector r = y - gp_mean_values(X, gp_mean_coefficients(X, y, opt.mean));
  const double var_y = std::max(r.squaredNorm() / static_cast<double>(r.size()), opt.min_signal);
  start[0] = std::log(var_y);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double spread = X.col(k).maxCoeff() - X.col(k).minCoeff();
    start[1 + k] = std::log(std::clamp(spread > 0 ? 0.5 * spread : 1.0, opt.min_length, opt.max_length));
  }
  start[d + 1] = std::log(std::clamp(1e-2 * var_y, opt.min_noise, opt.max_noise));
  start = start.cwiseMax(lo).cwiseMin(hi);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector best = start;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= opt.restarts; ++s) {
    Vector z0 = start;
    if (s > 0) {
      for (Eigen::Index k = 0; k < z0.size(); ++k) z0[k] = lo[k] + unit(rng) * (hi[k] - lo[k]);
    }
    const OptimizationResult r = nelder_mead(nlml, z0, lo, hi, opt.search);
    if (r.best_cost < best_cost) {
      best_cost = r.best_cost;
      best = r.best;
    }
  }
  if (!(best_cost < 1e300)) {
    throw Error(Errc::non_positive_definite, "GP covariance could not be factorised for any start");
  }
  return condition(X, y, unpack(best), opt.max_jitter, opt.mean);
}

GPPrediction GaussianProcess::predict(const Matrix& Xs) const {
  if (Xs.cols() != X_.cols()) throw Error(Errc::domain, "GP query has the wrong input dimension");
  const Matrix Ks = se_kernel(X_, Xs, hyper_);
  GPPrediction p;
  p.mean = Ks.transpose() * alpha_ + gp_mean_values(Xs, beta_);
  const Matrix v = chol_.matrixL().solve(Ks);
  p.variance = (hyper_.signal_variance - v.colwise().squaredNorm().array()).cwiseMax(0.0).matrix().transpose();
  return p;
}

}  // namespace ionbench
