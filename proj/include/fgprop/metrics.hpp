#pragma once

#include "fgprop/gaussian.hpp"

namespace fgprop {

/// Symmetric square root S of a PSD matrix (S S = M) by eigendecomposition.
/// Eigenvalues in [-1e-9, 0) are clamped to zero; anything more negative
/// (relative to max(1, max|eigenvalue|)) raises CovarianceError, as does an
/// asymmetry above 1e-9.
Matrix psd_sqrt(const Matrix& m);

/// 2-Wasserstein distance between Gaussians:
///   W2^2 = [include_means] ||mu_a - mu_b||^2
///          + tr(S_a + S_b - 2 (S_b^{1/2} S_a S_b^{1/2})^{1/2}).
/// By default only the covariances are compared.
double wasserstein2(const Gaussian& a, const Gaussian& b, bool include_means = false);

}  // namespace fgprop
