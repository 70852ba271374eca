#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ood/error.hpp"
#include "ood/linalg.hpp"
#include "ood/rng.hpp"

using namespace ood;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int n, int d) {
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

oracle::Matrix to_oracle(const Eigen::MatrixXd& m) {
  oracle::Matrix out(m.rows(), std::vector<double>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

TEST(Cosine, Examples) {
  const std::vector<double> a{1, 0}, b{0, 1}, c{-2, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), -1.0);
}

TEST(Cosine, ZeroNorm) {
  const std::vector<double> a{0, 0}, b{1, 0};
  EXPECT_THROW(cosine_similarity(a, b), Error);
}

TEST(CosineProperty, PositiveScaleInvariance) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(5), b(5), sa(5), sb(5);
    const double alpha = std::exp(rng.uniform(-5, 5)), beta = std::exp(rng.uniform(-5, 5));
    for (int j = 0; j < 5; ++j) {
      a[j] = rng.normal();
      b[j] = rng.normal();
      sa[j] = alpha * a[j];
      sb[j] = beta * b[j];
    }
    EXPECT_NEAR(cosine_similarity(a, b), cosine_similarity(sa, sb), 1e-9);
  }
}

TEST(Pca, RankOneLine) {
  Eigen::MatrixXd x(5, 2);
  for (int i = 0; i < 5; ++i) x.row(i) << i - 1.5, i - 1.5;
  const auto m = fit_pca(x, PcaTarget::fraction(0.99));
  ASSERT_EQ(m.output_dim(), 1u);
  EXPECT_NEAR(m.components(0, 0), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(m.components(0, 1), 1 / std::sqrt(2.0), 1e-12);
  // Coordinates are signed distances along (1,1)/sqrt2 from the mean.
  const auto z = m.transform(x);
  for (int i = 0; i < 5; ++i) {
    const double expected = ((x(i, 0) - m.mean(0)) + (x(i, 1) - m.mean(1))) / std::sqrt(2.0);
    EXPECT_NEAR(z(i, 0), expected, 1e-12);
  }
}

TEST(Pca, FullRankReconstruction) {
  Rng rng(2);
  const auto x = random_matrix(rng, 40, 6);
  const auto m = fit_pca(x, PcaTarget::fixed(6));
  const auto back = m.inverse_transform(m.transform(x));
  EXPECT_LE((back - x).norm() / x.norm(), 1e-6);
}

TEST(Pca, MeanMapsToZero) {
  Rng rng(3);
  const auto x = random_matrix(rng, 30, 5);
  const auto m = fit_pca(x, PcaTarget::fixed(3));
  EXPECT_LE(m.transform(m.mean.transpose()).norm(), 1e-12);
}

TEST(Pca, FullBasisIsIsometry) {
  Rng rng(4);
  const auto x = random_matrix(rng, 30, 5);
  const auto m = fit_pca(x, PcaTarget::fixed(5));
  const auto z = m.transform(x);
  for (int i = 0; i < 30; ++i) {
    EXPECT_NEAR(z.row(i).norm(), (x.row(i) - m.mean.transpose()).norm(), 1e-6);
  }
}

TEST(Pca, ThreeFactorModelMatchesJacobi) {
  Rng rng(5);
  const auto loadings = random_matrix(rng, 3, 10);
  Eigen::MatrixXd x = random_matrix(rng, 200, 3) * loadings;
  x += 1e-3 * random_matrix(rng, 200, 10);
  const auto m = fit_pca(x, PcaTarget::fraction(0.999));
  ASSERT_EQ(m.output_dim(), 3u);
  const auto ev = oracle::jacobi_eigenvalues(oracle::sample_covariance(to_oracle(x)));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(m.explained_variance(i), ev[i], 1e-6 * ev[i]);
  }
}

TEST(PcaProperty, OrthonormalEigenvaluesAndReconstruction) {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const int n = 20 + int(rng.below(40)), d = 2 + int(rng.below(14));
    Eigen::MatrixXd x = random_matrix(rng, n, d) * random_matrix(rng, d, d);
    const int p_max = std::min(n - 1, d);
    const auto full = fit_pca(x, PcaTarget::fixed(p_max));
    const Eigen::MatrixXd gram = full.components * full.components.transpose();
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(p_max, p_max)).cwiseAbs().maxCoeff(), 1e-8);

    const auto ev = oracle::jacobi_eigenvalues(oracle::sample_covariance(to_oracle(x)));
    for (int i = 0; i < p_max; ++i) EXPECT_NEAR(full.explained_variance(i), ev[i], 1e-6 * ev[i]);

    double previous = INFINITY;
    for (int p = 1; p <= p_max; ++p) {
      const auto m = fit_pca(x, PcaTarget::fixed(p));
      const double err = (m.inverse_transform(m.transform(x)) - x).squaredNorm();
      EXPECT_LE(err, previous * (1 + 1e-12) + 1e-12);
      previous = err;
    }
  }
}

TEST(Pca, TooFewSamples) {
  Eigen::MatrixXd x(1, 3);
  x << 1, 2, 3;
  EXPECT_THROW(fit_pca(x, PcaTarget::fraction(0.9)), Error);
}

TEST(Gaussian, TwoPoints) {
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 2, 0;
  const auto g = fit_gaussian(x, 1e-3);
  EXPECT_TRUE(g.centroid().isApprox(Eigen::Vector2d(1, 0)));
  Eigen::Matrix2d s;
  s << 2, 0, 0, 0;
  EXPECT_LE((g.covariance() - s).norm(), 1e-15);
}

TEST(Gaussian, SingleRowFactorsRidge) {
  Eigen::MatrixXd x(1, 2);
  x << 5, 5;
  const auto g = fit_gaussian(x, 1e-3);
  EXPECT_TRUE(g.centroid().isApprox(Eigen::Vector2d(5, 5)));
  EXPECT_EQ(g.covariance().norm(), 0.0);
  EXPECT_GT(g.ridge(), 0.0);
  EXPECT_TRUE(std::isfinite(mahalanobis(Eigen::Vector2d(6, 5), g)));
}

TEST(Gaussian, MonteCarloCovariance) {
  Rng rng(7);
  Eigen::Matrix2d sigma;
  sigma << 2, 0.5, 0.5, 1;
  const Eigen::Matrix2d l = sigma.llt().matrixL();
  Eigen::MatrixXd x(500, 2);
  for (int i = 0; i < 500; ++i) x.row(i) = (l * Eigen::Vector2d(rng.normal(), rng.normal())).transpose() + Eigen::RowVector2d(3, -1);
  const auto g = fit_gaussian(x, 1e-3);
  EXPECT_LE((g.covariance() - sigma).cwiseAbs().maxCoeff(), 0.2);
}

TEST(Mahalanobis, Examples) {
  const ClusterGaussian g(Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0.5).asDiagonal().toDenseMatrix(), 1e-300, 10);
  EXPECT_EQ(mahalanobis(Eigen::Vector2d(0, 0), g), 0.0);
  EXPECT_NEAR(mahalanobis(Eigen::Vector2d(1, 1), g), std::sqrt(2.5), 1e-9);
  EXPECT_NEAR(mahalanobis(Eigen::Vector2d(1, 1), g), 1.58114, 1e-5);
}

TEST(Mahalanobis, IdentityIsEuclidean) {
  // ridge = scale * trace / p; with S = (1 - r) I and scale chosen so S + rI = I.
  const double r = 0.25;
  const ClusterGaussian g(Eigen::Vector3d(1, 2, 3), (1 - r) * Eigen::Matrix3d::Identity(), r / (1 - r), 5);
  ASSERT_NEAR(g.ridge(), r, 1e-15);
  const Eigen::Vector3d x(4, -2, 3.5);
  EXPECT_NEAR(mahalanobis(x, g), (x - Eigen::Vector3d(1, 2, 3)).norm(), 1e-12);
}

TEST(MahalanobisProperty, MatchesExplicitInverse) {
  Rng rng(8);
  for (int t = 0; t < 300; ++t) {
    const int d = 2 + int(rng.below(15));
    const Eigen::MatrixXd a = random_matrix(rng, d + 3, d);
    const Eigen::MatrixXd s = a.transpose() * a / double(d + 2);
    const Eigen::VectorXd mu = random_matrix(rng, d, 1), x = random_matrix(rng, d, 1);
    const ClusterGaussian g(mu, s, 1e-3, 20);
    auto reg = to_oracle(s);
    for (int i = 0; i < d; ++i) reg[i][i] += g.ridge();
    std::vector<double> diff(d);
    for (int i = 0; i < d; ++i) diff[i] = x(i) - mu(i);
    const double expected = std::sqrt(oracle::quadratic_form(oracle::inverse(reg), diff));
    EXPECT_NEAR(mahalanobis(x, g), expected, 1e-6 * expected);
  }
}

TEST(MahalanobisProperty, RotationInvariant) {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + int(rng.below(8));
    const Eigen::MatrixXd a = random_matrix(rng, d + 2, d);
    const Eigen::MatrixXd s = a.transpose() * a;
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(rng, d, d)).householderQ();
    const Eigen::VectorXd mu = random_matrix(rng, d, 1), x = random_matrix(rng, d, 1);
    const ClusterGaussian g(mu, s, 1e-3, 20);
    const ClusterGaussian gr(q * mu, q * s * q.transpose(), 1e-3, 20);
    EXPECT_NEAR(mahalanobis(x, g), mahalanobis(q * x, gr), 1e-9 * (1 + mahalanobis(x, g)));
  }
}
