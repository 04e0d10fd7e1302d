#pragma once

#include "fgprop/gaussian.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fgprop {

/// White-noise standard deviation plus box-blur kernel size (k = 1: no blur).
struct NoiseSetting {
  double sigma = 0.0;
  int kernel = 1;

  /// Throws ConfigError for negative sigma or an even / non-positive kernel.
  void validate() const;
  std::string label() const;  // e.g. "s0.2_k5"
};

/// The four corruption cases: sigma in {0.05, 0.2} x kernel in {1, 5}.
std::vector<NoiseSetting> standard_noise_settings();

struct ImageShape {
  int height = 0;
  int width = 0;
  int pixels() const { return height * width; }
};

/// Linear operator of a k x k uniform blur over an image with half-sample
/// symmetric (reflect) padding. Every row sums to one.
struct BlurOperator {
  ImageShape shape;
  int kernel = 1;
  Matrix matrix;

  static BlurOperator box(int kernel, ImageShape shape);
};

/// B (image + eta) with eta ~ N(0, sigma^2 I); pixels are not clipped.
Vector corrupt(const Vector& image, const NoiseSetting& setting, ImageShape shape, std::uint64_t seed);

/// sigma^2 B B^T, the covariance of corrupt() around B image.
Matrix input_covariance(const NoiseSetting& setting, ImageShape shape);

/// Gaussian of corrupt(image, ...): mean B image, covariance sigma^2 B B^T.
Gaussian corrupted_input(const Vector& image, const NoiseSetting& setting, ImageShape shape);

/// Unbiased (n - 1) sample covariance of residual vectors, symmetrized.
Matrix empirical_covariance(std::span<const Vector> residuals);

}  // namespace fgprop
