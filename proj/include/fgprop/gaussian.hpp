#pragma once

#include "fgprop/network.hpp"

namespace fgprop {

/// Multivariate Gaussian with a full covariance. The stored covariance is
/// always exactly symmetric and positive semidefinite.
class Gaussian {
 public:
  /// Validates that `cov` is symmetric within 1e-9 and has no eigenvalue
  /// below -1e-9 (both relative to max(1, max|cov|)), then symmetrizes and
  /// clamps negative eigenvalues to zero. Throws CovarianceError otherwise.
  Gaussian(Vector mean, Matrix cov);

  /// Accepts moment estimates that may be indefinite (e.g. unscented
  /// transforms with a negative centre weight): symmetrizes and clamps without
  /// validation. The removed magnitude is available through clamped().
  static Gaussian from_moments(Vector mean, Matrix cov);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  int dim() const { return static_cast<int>(mean_.size()); }

  /// Absolute value of the most negative eigenvalue removed by clamping.
  double clamped() const { return clamped_; }

 private:
  Gaussian() = default;
  void assign(Vector mean, Matrix cov);

  Vector mean_;
  Matrix cov_;
  double clamped_ = 0.0;
};

Matrix symmetrize(const Matrix& m);

/// Symmetric part of `m` with negative eigenvalues set to zero. If `removed`
/// is given it receives the magnitude of the most negative eigenvalue.
Matrix clamp_psd(const Matrix& m, double* removed = nullptr);

/// Relative Frobenius error ||a - b||_F / max(||b||_F, floor).
double relative_frobenius(const Matrix& a, const Matrix& b, double floor = 1e-300);

}  // namespace fgprop
