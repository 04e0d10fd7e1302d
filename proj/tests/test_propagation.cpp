#include "fgprop/error.hpp"
#include "fgprop/metrics.hpp"
#include "fgprop/propagation.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace fgprop;
using namespace fgprop::testing;

namespace {

struct AffineCase {
  Network net;
  Matrix w;
  Vector b;
  Gaussian input;
};

// Random affine chain collapsed to a single W, b for the closed form.
AffineCase affine_case(std::uint64_t seed, int in) {
  std::mt19937_64 rng(seed);
  Network net = random_affine_chain(in, 2, rng);
  const Vector b = evaluate(net, Vector::Zero(in));
  const Matrix w = jacobian(net, Vector::Zero(in));
  Gaussian input(random_vector(in, rng), random_spd(in, rng, 0.05));
  return {std::move(net), w, b, std::move(input)};
}

void expect_small_clamp(const Gaussian& g) {
  EXPECT_LT(g.clamped(), 1e-6 * std::max(1.0, g.cov().norm()));
}

}  // namespace

TEST(Fg, AffineExactForEveryNodeCount) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = affine_case(seed, 2 + 3 * static_cast<int>(seed));
    const Matrix expected = c.w * c.input.cov() * c.w.transpose();
    for (int m = 1; m <= 9; ++m) {
      FgConfig cfg;
      cfg.input_nodes = m;
      cfg.seed = seed;
      const Gaussian out = propagate_fg(c.net, c.input, cfg);
      EXPECT_LT(relative_frobenius(out.cov(), expected), 1e-5) << "seed " << seed << " m " << m;
      EXPECT_LE(max_abs(out.mean() - (c.w * c.input.mean() + c.b)), 1e-6);
      expect_small_clamp(out);
    }
  }
}

TEST(Fg, NodeCountInvariantOnAffineNets) {
  const auto c = affine_case(11, 6);
  FgConfig one, four;
  one.input_nodes = 1;
  four.input_nodes = 4;
  EXPECT_LE(max_abs(propagate_fg(c.net, c.input, one).cov() - propagate_fg(c.net, c.input, four).cov()), 1e-6);
}

TEST(Fg, IdentityNetReturnsInput) {
  std::mt19937_64 rng(2);
  const Gaussian input(random_vector(3, rng), random_spd(3, rng));
  FgConfig cfg;
  cfg.input_nodes = 1;
  cfg.factor_noise = 1e-8;
  const Gaussian out = propagate_fg(affine_net(Matrix::Identity(3, 3), Vector::Zero(3)), input, cfg);
  EXPECT_LT(relative_frobenius(out.cov(), input.cov()), 1e-6);
  EXPECT_LE(max_abs(out.mean() - input.mean()), 1e-6);
}

TEST(Fg, SingularInputCovariance) {
  std::mt19937_64 rng(3);
  const auto c = affine_case(3, 4);
  const Matrix low = random_matrix(4, 2, rng);
  const Gaussian rank_two(c.input.mean(), low * low.transpose());
  const Gaussian out = propagate_fg(c.net, rank_two, {});
  EXPECT_LT(relative_frobenius(out.cov(), c.w * rank_two.cov() * c.w.transpose()), 1e-5);

  const Gaussian point(c.input.mean(), Matrix::Zero(4, 4));
  const Gaussian zero = propagate_fg(c.net, point, {});
  EXPECT_LE(max_abs(zero.cov()), 1e-9);
  EXPECT_LE(max_abs(zero.mean() - evaluate(c.net, point.mean())), 1e-9);
}

TEST(Fg, RejectsBadConfig) {
  const auto c = affine_case(1, 2);
  FgConfig cfg;
  cfg.input_nodes = 0;
  EXPECT_THROW(propagate_fg(c.net, c.input, cfg), ConfigError);
  EXPECT_THROW(propagate_fg(c.net, Gaussian(Vector::Zero(5), Matrix::Identity(5, 5)), {}), ShapeError);
}

TEST(Fg, ReluNetBeatsEkfAgainstLargeMonteCarlo) {
  // Two units, one sitting just above its kink.
  Network net(2);
  net.add_relu(net.add_affine(kNetworkInput, Matrix{{1.0, 0.3}, {-0.4, 1.0}}, Vector{{0.05, 0.5}}));
  const Gaussian input(Vector{{0.0, 0.0}}, 0.04 * Matrix::Identity(2, 2));
  const Gaussian reference = propagate_mc(net, input, 1'000'000, 1);
  const Gaussian fg = propagate_fg(net, input, {});
  const Gaussian ekf = propagate_ekf(net, input);
  EXPECT_LE(wasserstein2(fg, reference), wasserstein2(ekf, reference));
}

TEST(Fg, IntermediateTargetMatchesTruncation) {
  const Network net = make_residual_mlp(3, 5, 1, 2, 4);
  std::mt19937_64 rng(5);
  const Gaussian input(random_vector(3, rng), random_spd(3, rng));
  FgConfig cfg;
  cfg.seed = 9;
  const Gaussian a = propagate_fg(net, input, cfg, 5);
  const Gaussian b = propagate_fg(truncate(net, 5), input, cfg);
  EXPECT_LE(max_abs(a.cov() - b.cov()), 1e-12);
  EXPECT_EQ(a.dim(), net.dim_of(5));
}

TEST(Ekf, AffineIsExact) {
  const auto c = affine_case(6, 5);
  const Gaussian out = propagate_ekf(c.net, c.input);
  EXPECT_LE(max_abs(out.mean() - (c.w * c.input.mean() + c.b)), 1e-10);
  EXPECT_LT(relative_frobenius(out.cov(), c.w * c.input.cov() * c.w.transpose()), 1e-10);
}

TEST(Ekf, ReluIndicatorCovariance) {
  Network net(2);
  net.add_relu(kNetworkInput);
  const Gaussian out = propagate_ekf(net, Gaussian(Vector{{2.0, -1.0}}, Matrix::Identity(2, 2)));
  EXPECT_EQ(out.cov(), (Matrix{{1.0, 0.0}, {0.0, 0.0}}));
}

TEST(Ekf, ChainRuleConsistency) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network net = make_residual_mlp(4, 6, 2, 3, seed);
    std::mt19937_64 rng(seed);
    const Gaussian input(random_vector(4, rng), random_spd(4, rng));
    const Matrix j = jacobian(net, input.mean());
    const Gaussian out = propagate_ekf(net, input);
    const Matrix expected = j * input.cov() * j.transpose();
    EXPECT_LE(max_abs(out.cov() - expected), 1e-10 * std::max(1.0, max_abs(expected)));
    EXPECT_LE(max_abs(out.mean() - evaluate(net, input.mean())), 1e-12);
  }
}

TEST(Ut, AffineIsExact) {
  const auto c = affine_case(7, 6);
  const Matrix expected = c.w * c.input.cov() * c.w.transpose();
  for (const UtParams& params : {UtParams{}, UtParams{0.5, 2.0, 0.0, std::nullopt}, UtParams::with_lambda(2.0)}) {
    const Gaussian out = propagate_ut(c.net, c.input, params);
    EXPECT_LE(max_abs(out.mean() - (c.w * c.input.mean() + c.b)), 1e-8);
    EXPECT_LT(relative_frobenius(out.cov(), expected), 1e-8);
  }
}

TEST(Ut, SquareOfStandardNormal) {
  // Sigma points {0, +sqrt 3, -sqrt 3}; weights 2/3, 1/6, 1/6; centre
  // covariance weight 2/3 + (1 - alpha^2 + beta) = 2/3.
  const double root3 = std::sqrt(3.0);
  const std::vector<double> points = {0.0, root3, -root3};
  const std::vector<double> wm = {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};
  const std::vector<double> wc = wm;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < 3; ++i) mean += wm[i] * points[i] * points[i];
  for (int i = 0; i < 3; ++i) var += wc[i] * (points[i] * points[i] - mean) * (points[i] * points[i] - mean);
  ASSERT_DOUBLE_EQ(mean, 1.0);
  ASSERT_DOUBLE_EQ(var, 2.0);

  const auto square = [](const Vector& x) { return Vector{{x[0] * x[0]}}; };
  const Gaussian out = unscented_transform(square, Gaussian(Vector{{0.0}}, Matrix{{1.0}}), UtParams::with_lambda(2.0));
  EXPECT_NEAR(out.mean()[0], mean, 1e-12);
  EXPECT_NEAR(out.cov()(0, 0), var, 1e-12);
}

TEST(Ut, CallsFunctionTwoNPlusOneTimes) {
  const int n = 784;
  int calls = 0;
  const auto f = [&](const Vector& x) {
    ++calls;
    return Vector{{x.sum()}};
  };
  unscented_transform(f, Gaussian(Vector::Zero(n), 1e-3 * Matrix::Identity(n, n)));
  EXPECT_EQ(calls, 2 * n + 1);
}

TEST(Ut, DefaultLambdaAndInvalidSpread) {
  EXPECT_DOUBLE_EQ(UtParams{}.lambda_for(5), -2.0);
  EXPECT_DOUBLE_EQ(UtParams{}.lambda_for(1), 2.0);
  const auto c = affine_case(1, 2);
  EXPECT_THROW(propagate_ut(c.net, c.input, UtParams::with_lambda(-2.0)), ConfigError);
}

TEST(Mc, AffineMillionSamplesWithinOnePercent) {
  const auto c = affine_case(8, 4);
  const Gaussian out = propagate_mc(c.net, c.input, 1'000'000, 3);
  EXPECT_LT(relative_frobenius(out.cov(), c.w * c.input.cov() * c.w.transpose()), 0.01);
}

TEST(Mc, DeterministicAndZeroCovariance) {
  const auto c = affine_case(9, 3);
  const Gaussian a = propagate_mc(c.net, c.input, 500, 42);
  const Gaussian b = propagate_mc(c.net, c.input, 500, 42);
  EXPECT_EQ(a.mean(), b.mean());
  EXPECT_EQ(a.cov(), b.cov());

  const Gaussian point(c.input.mean(), Matrix::Zero(3, 3));
  const Gaussian z = propagate_mc(c.net, point, 100, 1);
  EXPECT_EQ(z.cov(), Matrix::Zero(z.dim(), z.dim()));
  EXPECT_EQ(z.mean(), evaluate(c.net, point.mean()));
  EXPECT_THROW(propagate_mc(c.net, c.input, 1, 1), ConfigError);
}

TEST(Mc, ErrorShrinksWithSampleCount) {
  const auto c = affine_case(10, 4);
  const Gaussian exact(c.w * c.input.mean() + c.b, c.w * c.input.cov() * c.w.transpose());
  std::vector<double> mean_error;
  for (int n : {100, 1000, 10000}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) total += wasserstein2(propagate_mc(c.net, c.input, n, seed), exact);
    mean_error.push_back(total / 20);
  }
  EXPECT_GT(mean_error[0], mean_error[1]);
  EXPECT_GT(mean_error[1], mean_error[2]);
}

TEST(Propagation, AffineAgreementUpToDim32) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int dim = 2 + static_cast<int>(seed) * 6;
    std::mt19937_64 rng(seed);
    const Matrix w = random_matrix(dim, dim, rng);
    const Vector b = random_vector(dim, rng);
    const Network net = affine_net(w, b);
    const Gaussian input(random_vector(dim, rng), random_spd(dim, rng));
    const Matrix expected = w * input.cov() * w.transpose();
    for (const Gaussian& g : {propagate_fg(net, input, {}), propagate_ekf(net, input), propagate_ut(net, input)}) {
      EXPECT_LT(relative_frobenius(g.cov(), expected), 1e-5) << "dim " << dim;
      expect_small_clamp(g);
    }
  }
}

TEST(Propagation, OutputsAreSymmetricPsdOnNonlinearNets) {
  const Network net = make_residual_mlp(6, 8, 1, 3, 2);
  std::mt19937_64 rng(12);
  const Gaussian input(random_vector(6, rng), random_spd(6, rng));
  MethodOptions options;
  options.mc_samples = 500;
  for (Method method : {Method::kFg, Method::kEkf, Method::kUt, Method::kMc}) {
    const Gaussian g = propagate(method, net, input, options);
    EXPECT_EQ(g.cov(), g.cov().transpose());
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(g.cov()).eigenvalues().minCoeff(), -1e-12);
    expect_small_clamp(g);
  }
}

TEST(Propagation, MethodNames) {
  for (Method m : {Method::kFg, Method::kEkf, Method::kUt, Method::kMc}) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("lpn"), ConfigError);
}
