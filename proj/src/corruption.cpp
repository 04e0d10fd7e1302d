#include "fgprop/corruption.hpp"

#include "fgprop/error.hpp"

#include <cstdio>
#include <random>

namespace fgprop {

namespace {

int reflect(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

void check_image(const Vector& image, ImageShape shape) {
  if (shape.height < 1 || shape.width < 1) throw ShapeError("image shape must be positive");
  if (image.size() != shape.pixels()) throw ShapeError("image length does not match its declared shape");
}

}  // namespace

void NoiseSetting::validate() const {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("blur kernel must be a positive odd integer");
}

std::string NoiseSetting::label() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "s%g_k%d", sigma, kernel);
  return buf;
}

std::vector<NoiseSetting> standard_noise_settings() { return {{0.05, 1}, {0.05, 5}, {0.2, 1}, {0.2, 5}}; }

BlurOperator BlurOperator::box(int kernel, ImageShape shape) {
  NoiseSetting{0.0, kernel}.validate();
  if (shape.height < 1 || shape.width < 1) throw ShapeError("image shape must be positive");
  BlurOperator op{shape, kernel, Matrix::Zero(shape.pixels(), shape.pixels())};
  const int r = kernel / 2;
  const double weight = 1.0 / (kernel * kernel);
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      const int row = y * shape.width + x;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          op.matrix(row, reflect(y + dy, shape.height) * shape.width + reflect(x + dx, shape.width)) += weight;
        }
      }
    }
  }
  return op;
}

Vector corrupt(const Vector& image, const NoiseSetting& setting, ImageShape shape, std::uint64_t seed) {
  setting.validate();
  check_image(image, shape);
  Vector noisy = image;
  if (setting.sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, setting.sigma);
    for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy[i] += normal(rng);
  }
  if (setting.kernel == 1) return noisy;
  // Same sum as BlurOperator::box(...).matrix * noisy without building the matrix.
  const int r = setting.kernel / 2;
  const double weight = 1.0 / (setting.kernel * setting.kernel);
  Vector out(noisy.size());
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          acc += weight * noisy[reflect(y + dy, shape.height) * shape.width + reflect(x + dx, shape.width)];
        }
      }
      out[y * shape.width + x] = acc;
    }
  }
  return out;
}

Matrix input_covariance(const NoiseSetting& setting, ImageShape shape) {
  setting.validate();
  if (setting.kernel == 1) return setting.sigma * setting.sigma * Matrix::Identity(shape.pixels(), shape.pixels());
  const Matrix b = BlurOperator::box(setting.kernel, shape).matrix;
  return symmetrize(setting.sigma * setting.sigma * b * b.transpose());
}

Gaussian corrupted_input(const Vector& image, const NoiseSetting& setting, ImageShape shape) {
  setting.validate();
  check_image(image, shape);
  Vector mean = setting.kernel == 1 ? image : Vector(BlurOperator::box(setting.kernel, shape).matrix * image);
  return Gaussian(std::move(mean), input_covariance(setting, shape));
}

Matrix empirical_covariance(std::span<const Vector> residuals) {
  if (residuals.size() < 2) throw ConfigError("empirical covariance needs at least two residuals");
  const auto dim = residuals.front().size();
  Vector mean = Vector::Zero(dim);
  for (const auto& r : residuals) {
    if (r.size() != dim) throw ShapeError("residual vectors differ in length");
    mean += r;
  }
  mean /= static_cast<double>(residuals.size());
  Matrix cov = Matrix::Zero(dim, dim);
  for (const auto& r : residuals) {
    const Vector centred = r - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centred);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  return symmetrize(cov / static_cast<double>(residuals.size() - 1));
}

}  // namespace fgprop
