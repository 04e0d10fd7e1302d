#include "fgprop/metrics.hpp"

#include "fgprop/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fgprop {

Matrix psd_sqrt(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("psd_sqrt needs a square matrix");
  if (m.size() == 0) return m;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) throw CovarianceError("psd_sqrt input is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  const Vector& values = eig.eigenvalues();
  if (values.minCoeff() < -1e-9 * std::max(1.0, values.cwiseAbs().maxCoeff())) {
    throw CovarianceError("psd_sqrt input is not positive semidefinite");
  }
  const Matrix& vectors = eig.eigenvectors();
  const Matrix root = vectors * values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * vectors.transpose();
  return 0.5 * (root + root.transpose());
}

double wasserstein2(const Gaussian& a, const Gaussian& b, bool include_means) {
  if (a.dim() != b.dim()) throw ShapeError("wasserstein2 needs Gaussians of equal dimension");
  // tr((S_b^1/2 S_a S_b^1/2)^1/2) is the nuclear norm of S_a^1/2 S_b^1/2,
  // which avoids a second eigendecomposition of a rounded product.
  const Matrix product = psd_sqrt(a.cov()) * psd_sqrt(b.cov());
  const double cross = Eigen::JacobiSVD<Matrix>(product).singularValues().sum();
  const double traces = a.cov().trace() + b.cov().trace();
  double squared = traces - 2.0 * cross;
  // Below the rounding resolution of the trace terms the difference is noise;
  // taking its square root would turn 1e-15 into 3e-8.
  if (squared <= 8.0 * a.dim() * std::numeric_limits<double>::epsilon() * traces) squared = 0.0;
  if (include_means) squared += (a.mean() - b.mean()).squaredNorm();
  return std::sqrt(std::max(0.0, squared));
}

}  // namespace fgprop
