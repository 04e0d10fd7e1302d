#include "fgprop/error.hpp"
#include "fgprop/metrics.hpp"
#include "fgprop/stats.hpp"
#include "test_util.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

using namespace fgprop;
using namespace fgprop::testing;

namespace {

Gaussian random_gaussian(int dim, std::mt19937_64& rng) {
  return Gaussian(random_vector(dim, rng), random_spd(dim, rng, 0.01));
}

ScoreTable random_table(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  ScoreTable t{{}, Matrix(rows, cols)};
  for (int c = 0; c < cols; ++c) t.methods.push_back("m" + std::to_string(c));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) t.scores(r, c) = uni(rng);
  }
  return t;
}

// P(range of c standard normals <= q) at infinite degrees of freedom:
// c * integral phi(z) (Phi(z + q) - Phi(z))^(c-1) dz.
double range_cdf(double q, int c) {
  const boost::math::normal unit;
  const auto integrand = [&](double z) {
    return boost::math::pdf(unit, z) * std::pow(boost::math::cdf(unit, z + q) - boost::math::cdf(unit, z), c - 1);
  };
  return c * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -12.0, 12.0, 15, 1e-13);
}

double range_quantile(double p, int c) {
  const auto f = [&](double q) { return range_cdf(q, c) - p; };
  boost::math::tools::eps_tolerance<double> tol(40);
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::bisect(f, 0.1, 12.0, tol, iters);
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(PsdSqrt, KnownCases) {
  EXPECT_LE(max_abs(psd_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)), 1e-15);
  EXPECT_LE(max_abs(psd_sqrt(Matrix{{4.0, 0.0}, {0.0, 9.0}}) - Matrix{{2.0, 0.0}, {0.0, 3.0}}), 1e-14);
  EXPECT_THROW(psd_sqrt(Matrix{{1.0, 0.0}, {0.0, -1e-3}}), CovarianceError);
  EXPECT_EQ(psd_sqrt(Matrix::Zero(2, 2)), Matrix::Zero(2, 2));
}

TEST(PsdSqrt, ReconstructsRandomSpd) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_spd(1 + trial % 9, rng);
    const Matrix s = psd_sqrt(m);
    EXPECT_EQ(s, s.transpose());
    EXPECT_LT(relative_frobenius(s * s, m), 1e-8);
  }
}

TEST(PsdSqrt, ElementwiseOnDiagonals) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(0.0, 10.0);
  Vector d(6);
  for (int i = 0; i < 6; ++i) d[i] = uni(rng);
  const Matrix s = psd_sqrt(Matrix(d.asDiagonal()));
  EXPECT_LE(max_abs(s - Matrix(d.cwiseSqrt().asDiagonal())), 1e-14);
}

TEST(Wasserstein, KnownValues) {
  std::mt19937_64 rng(3);
  const Gaussian a = random_gaussian(4, rng);
  EXPECT_EQ(wasserstein2(a, a), 0.0);
  EXPECT_NEAR(wasserstein2(Gaussian(Vector{{5.0}}, Matrix{{1.0}}), Gaussian(Vector{{-3.0}}, Matrix{{4.0}})), 1.0, 1e-12);
  const Gaussian d1(Vector::Zero(2), Matrix(Vector{{1.0, 4.0}}.asDiagonal()));
  const Gaussian d2(Vector::Zero(2), Matrix(Vector{{9.0, 16.0}}.asDiagonal()));
  EXPECT_NEAR(wasserstein2(d1, d2), std::sqrt(8.0), 1e-10);
  EXPECT_THROW(wasserstein2(d1, Gaussian(Vector::Zero(3), Matrix::Identity(3, 3))), ShapeError);
}

TEST(Wasserstein, MeansOnlyWhenCovariancesMatch) {
  std::mt19937_64 rng(4);
  const Matrix cov = random_spd(3, rng);
  const Gaussian a(random_vector(3, rng), cov), b(random_vector(3, rng), cov);
  EXPECT_NEAR(wasserstein2(a, b, true), (a.mean() - b.mean()).norm(), 1e-7);
}

TEST(Wasserstein, SymmetricAndTriangle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = 1 + trial % 8;
    const Gaussian a = random_gaussian(dim, rng), b = random_gaussian(dim, rng), c = random_gaussian(dim, rng);
    EXPECT_NEAR(wasserstein2(a, b), wasserstein2(b, a), 1e-10);
    EXPECT_LE(wasserstein2(a, c), wasserstein2(a, b) + wasserstein2(b, c) + 1e-8);
  }
}

TEST(Ranks, AverageTies) {
  EXPECT_EQ(rank_row(Vector{{0.3, 0.1, 0.2}}), (std::vector<double>{3.0, 1.0, 2.0}));
  EXPECT_EQ(rank_row(Vector{{0.5, 0.1, 0.5, 0.5}}), (std::vector<double>{3.0, 1.0, 3.0, 3.0}));
}

TEST(Friedman, HandRankedTable) {
  ScoreTable t{{"a", "b", "c"}, Matrix{{0.1, 0.2, 0.3}, {1.0, 5.0, 9.0}, {0.0, 0.5, 0.6}, {2.0, 3.0, 4.0}}};
  const auto r = friedman_test(t);
  EXPECT_DOUBLE_EQ(r.statistic, 8.0);
  EXPECT_EQ(r.mean_ranks, (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_NEAR(r.p_value, std::exp(-4.0), 1e-14);  // chi-square(2) tail is exp(-x/2)
}

TEST(Friedman, IdenticalColumnsAreDegenerate) {
  ScoreTable t{{"a", "b"}, Matrix::Constant(5, 2, 0.4)};
  const auto r = friedman_test(t);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Friedman, InvariantUnderIncreasingRowTransforms) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    ScoreTable t = random_table(10 + trial % 7, 3 + trial % 4, rng);
    ScoreTable u = t;
    for (int r = 0; r < u.trials(); ++r) {
      const double shift = r, scale = 0.5 + r;
      for (int c = 0; c < u.method_count(); ++c) u.scores(r, c) = std::exp(scale * t.scores(r, c)) + shift;
    }
    EXPECT_DOUBLE_EQ(friedman_test(t).statistic, friedman_test(u).statistic);
  }
}

TEST(Friedman, RejectsBadTables) {
  EXPECT_THROW(friedman_test({{"a"}, Matrix::Ones(3, 1)}), ConfigError);
  EXPECT_THROW(friedman_test({{"a", "b"}, Matrix::Ones(1, 2)}), ConfigError);
  Matrix bad = Matrix::Ones(3, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(friedman_test({{"a", "b"}, bad}), ConfigError);
}

TEST(Nemenyi, QTableMatchesStudentizedRange) {
  for (double alpha : {0.05, 0.01, 0.001}) {
    for (int c = 2; c <= 10; ++c) {
      EXPECT_NEAR(nemenyi_q(c, alpha), range_quantile(1.0 - alpha, c) / std::sqrt(2.0), 2e-5)
          << "c " << c << " alpha " << alpha;
    }
  }
  EXPECT_THROW(nemenyi_q(11, 0.05), LookupError);
  EXPECT_THROW(nemenyi_q(3, 0.1), LookupError);
}

TEST(Nemenyi, CriticalDifferenceAndSignificance) {
  ScoreTable same{{"a", "b"}, Matrix::Constant(50, 2, 1.0)};
  EXPECT_FALSE(nemenyi_test(same, 0.05).significant[0][1]);

  Matrix scores(500, 2);
  scores.col(0).setConstant(0.1);
  scores.col(1).setConstant(0.2);
  const auto r = nemenyi_test({{"a", "b"}, scores}, 0.001);
  EXPECT_NEAR(r.critical_difference, nemenyi_q(2, 0.001) * std::sqrt(2.0 * 3.0 / (6.0 * 500)), 1e-15);
  EXPECT_TRUE(r.significant[0][1]);

  std::mt19937_64 rng(7);
  const auto random = nemenyi_test(random_table(40, 5, rng), 0.05);
  for (int i = 0; i < 5; ++i) {
    EXPECT_FALSE(random.significant[i][i]);
    for (int j = 0; j < 5; ++j) EXPECT_EQ(random.significant[i][j], random.significant[j][i]);
  }
}

TEST(GaussianType, ValidatesAndClamps) {
  EXPECT_THROW(Gaussian(Vector::Zero(2), Matrix{{1.0, 0.1}, {0.0, 1.0}}), CovarianceError);
  EXPECT_THROW(Gaussian(Vector::Zero(2), Matrix{{1.0, 0.0}, {0.0, -1e-3}}), CovarianceError);
  EXPECT_THROW(Gaussian(Vector::Zero(3), Matrix::Identity(2, 2)), ShapeError);
  const Gaussian tiny(Vector::Zero(2), Matrix{{1.0, 0.0}, {0.0, -1e-12}});
  EXPECT_GE(tiny.cov()(1, 1), 0.0);
  const Gaussian moments = Gaussian::from_moments(Vector::Zero(2), Matrix{{1.0, 0.0}, {0.0, -0.5}});
  EXPECT_NEAR(moments.clamped(), 0.5, 1e-12);
}
