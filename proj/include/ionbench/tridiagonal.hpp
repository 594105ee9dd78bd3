#pragma once

#include "ionbench/core.hpp"

namespace ionbench {

/// Thomas algorithm for a tridiagonal system.
///
/// Row i reads lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1] = rhs[i];
/// lower[0] and upper[n-1] are ignored. The systems assembled by the finite
/// volume operators here are diagonally dominant, so no pivoting is done.
template <typename Scalar>
VectorX<Scalar> solve_tridiagonal(const VectorX<Scalar>& lower,
                                  const VectorX<Scalar>& diag,
                                  const VectorX<Scalar>& upper,
                                  const VectorX<Scalar>& rhs) {
  const Eigen::Index n = diag.size();
  VectorX<Scalar> c_prime(n);
  VectorX<Scalar> x(n);
  Scalar denom = diag[0];
  if (denom == Scalar(0)) {
    throw Error(Errc::singular_system, "tridiagonal solve: zero pivot");
  }
  c_prime[0] = n > 1 ? upper[0] / denom : Scalar(0);
  x[0] = rhs[0] / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c_prime[i - 1];
    if (denom == Scalar(0)) {
      throw Error(Errc::singular_system, "tridiagonal solve: zero pivot");
    }
    c_prime[i] = i + 1 < n ? upper[i] / denom : Scalar(0);
    x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    x[i] -= c_prime[i] * x[i + 1];
  }
  return x;
}

}  // namespace ionbench
