#pragma once

#include "fgprop/gaussian.hpp"
#include "fgprop/network.hpp"

#include <random>

namespace fgprop::testing {

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = normal(rng);
  }
  return m;
}

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  return random_matrix(n, 1, rng, scale).col(0);
}

// Well-conditioned SPD matrix: A A^T / n + shift I.
inline Matrix random_spd(int n, std::mt19937_64& rng, double shift = 0.1) {
  const Matrix a = random_matrix(n, n, rng);
  return a * a.transpose() / n + shift * Matrix::Identity(n, n);
}

inline Network affine_net(const Matrix& w, const Vector& b) {
  Network net(static_cast<int>(w.cols()));
  net.add_affine(kNetworkInput, w, b);
  return net;
}

inline Network random_affine_chain(int in, int layers, std::mt19937_64& rng) {
  Network net(in);
  int src = kNetworkInput, dim = in;
  for (int i = 0; i < layers; ++i) {
    const int out = 1 + static_cast<int>(rng() % 6);
    src = net.add_affine(src, random_matrix(out, dim, rng, 0.7), random_vector(out, rng));
    dim = out;
  }
  return net;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline double relative_max_norm(const Matrix& a, const Matrix& b) {
  return max_abs(a - b) / std::max(max_abs(b), 1e-12);
}

}  // namespace fgprop::testing
