#pragma once

#include "fgprop/factor_graph.hpp"
#include "fgprop/gaussian.hpp"
#include "fgprop/network.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fgprop {

using VectorFunction = std::function<Vector(const Vector&)>;

struct FgConfig {
  int input_nodes = 4;          // m
  double factor_noise = 1e-6;   // between-factor covariance is factor_noise * I
  std::uint64_t seed = 0;       // draws the input-node initial values
  OptimizerConfig optimizer;
};

struct FgOutcome {
  Gaussian output;
  OptimizeResult optimizer;
};

/// Factor-graph propagation. Builds m input nodes initialized at samples of
/// `input`, each with a prior N(input.mean, input.cov), and one output node
/// initialized at the network output of the mean, joined by an n-ary between
/// factor. The output marginal is read from the information matrix
/// linearized at the sampled inputs; the graph is then optimized for the MAP
/// output mean. The returned covariance is m * marginal - noise / m, which is
/// exactly J Sigma J^T for affine networks and any m.
///
/// `target` selects an intermediate layer (the network is truncated there).
/// Singular input covariances are handled by placing the input nodes in the
/// coordinates of the covariance's eigen square root.
FgOutcome propagate_fg_detailed(const Network& net, const Gaussian& input, const FgConfig& config,
                                std::optional<int> target = std::nullopt);
Gaussian propagate_fg(const Network& net, const Gaussian& input, const FgConfig& config = {},
                      std::optional<int> target = std::nullopt);

/// First-order layer-by-layer propagation with full covariance. A square-root
/// factor S (Sigma = S S^T) is pushed through each layer's Jacobian so add
/// layers combine correlated branches exactly.
Gaussian propagate_ekf(const Network& net, const Gaussian& input, std::optional<int> target = std::nullopt);

struct UtParams {
  double alpha = 1.0;
  double beta = 0.0;
  /// When unset, kappa = 3 - n so that n + lambda = 3.
  std::optional<double> kappa;
  /// Overrides alpha/kappa when set.
  std::optional<double> lambda;

  double lambda_for(int n) const;
  static UtParams with_lambda(double lambda) { return {1.0, 0.0, std::nullopt, lambda}; }
};

/// Whole-function unscented transform with 2n + 1 sigma points built from the
/// columns of the symmetric (eigen) square root of (n + lambda) Sigma.
Gaussian unscented_transform(const VectorFunction& f, const Gaussian& input, const UtParams& params = {});
Gaussian propagate_ut(const Network& net, const Gaussian& input, const UtParams& params = {},
                      std::optional<int> target = std::nullopt);

/// Sample mean and unbiased sample covariance of f over seeded draws.
Gaussian monte_carlo(const VectorFunction& f, const Gaussian& input, int samples, std::uint64_t seed);
Gaussian propagate_mc(const Network& net, const Gaussian& input, int samples, std::uint64_t seed,
                      std::optional<int> target = std::nullopt);

/// Draws from N(mean, cov) as mean + sqrt(cov) z using the symmetric square root.
std::vector<Vector> sample_gaussian(const Gaussian& g, int count, std::mt19937_64& rng);

enum class Method { kFg, kEkf, kUt, kMc };

std::string method_name(Method method);
Method parse_method(const std::string& name);  // ConfigError on unknown names

struct MethodOptions {
  FgConfig fg;
  UtParams ut;
  int mc_samples = 3000;
  std::uint64_t mc_seed = 0;
};

Gaussian propagate(Method method, const Network& net, const Gaussian& input, const MethodOptions& options,
                   std::optional<int> target = std::nullopt);

}  // namespace fgprop
