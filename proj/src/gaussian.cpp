#include "fgprop/gaussian.hpp"

#include "fgprop/error.hpp"

#include <algorithm>
#include <cmath>

namespace fgprop {

namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kEigenTol = 1e-9;

double scale_of(const Matrix& m) { return std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0); }

}  // namespace

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix clamp_psd(const Matrix& m, double* removed) {
  Matrix sym = symmetrize(m);
  if (removed) *removed = 0.0;
  if (sym.size() == 0) return sym;
  // Cholesky succeeds for every strictly positive definite matrix; only fall
  // back to an eigendecomposition when it does not.
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return sym;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector values = eig.eigenvalues();
  if (values.minCoeff() >= 0.0) return sym;
  if (removed) *removed = -values.minCoeff();
  const Matrix& vectors = eig.eigenvectors();
  return symmetrize(vectors * values.cwiseMax(0.0).asDiagonal() * vectors.transpose());
}

double relative_frobenius(const Matrix& a, const Matrix& b, double floor) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

Gaussian::Gaussian(Vector mean, Matrix cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ShapeError("covariance shape does not match mean length");
  }
  if (!mean.allFinite() || !cov.allFinite()) throw CovarianceError("Gaussian has non-finite entries");
  const double scale = scale_of(cov);
  if (cov.size() && (cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw CovarianceError("covariance is not symmetric");
  }
  assign(std::move(mean), std::move(cov));
  if (clamped_ > kEigenTol * scale) throw CovarianceError("covariance is not positive semidefinite");
}

Gaussian Gaussian::from_moments(Vector mean, Matrix cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ShapeError("covariance shape does not match mean length");
  }
  if (!mean.allFinite() || !cov.allFinite()) throw CovarianceError("Gaussian has non-finite entries");
  Gaussian g;
  g.assign(std::move(mean), std::move(cov));
  return g;
}

void Gaussian::assign(Vector mean, Matrix cov) {
  mean_ = std::move(mean);
  cov_ = clamp_psd(cov, &clamped_);
}

}  // namespace fgprop
