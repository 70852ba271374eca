#include <gtest/gtest.h>

#include <cmath>

#include "ood/error.hpp"
#include "ood/synth.hpp"

using namespace ood;

TEST(Synth, Deterministic) {
  MixtureSpec s;
  s.seed = 3;
  s.holdout_per_cluster = 5;
  const auto a = generate(s), b = generate(s);
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(a.ood, b.ood);
  EXPECT_EQ(*a.id_holdout, *b.id_holdout);
  s.seed = 4;
  EXPECT_FALSE(generate(s).id == a.id);
}

TEST(Synth, HoldoutDoesNotPerturbTrainingRows) {
  MixtureSpec s;
  const auto a = generate(s);
  s.holdout_per_cluster = 20;
  const auto b = generate(s);
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(a.ood, b.ood);
}

TEST(Synth, ShapesAndLabels) {
  MixtureSpec s;
  s.cluster_count = 3;
  s.dim = 5;
  s.samples_per_cluster = 4;
  s.ood.samples = 7;
  const auto d = generate(s);
  EXPECT_EQ(d.id.rows(), 12u);
  EXPECT_EQ(d.id.cols(), 5u);
  EXPECT_EQ(d.ood.rows(), 7u);
  EXPECT_EQ(d.id_labels, (LabelVector{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2}));
  EXPECT_FALSE(d.id_holdout.has_value());
}

TEST(Synth, ZeroSpreadSitsOnCenters) {
  MixtureSpec s;
  s.within_std = 0.0;
  s.samples_per_cluster = 3;
  const auto d = generate(s);
  for (std::size_t i = 0; i < d.id.rows(); ++i)
    for (std::size_t j = 0; j < d.id.cols(); ++j)
      EXPECT_EQ(d.id(i, j), float(d.centers(d.id_labels[i], j)));
}

TEST(Synth, ClusterMeansConverge) {
  MixtureSpec s;
  s.cluster_count = 2;
  s.samples_per_cluster = 20000;
  const auto d = generate(s);
  const auto x = d.id.to_eigen();
  for (int c = 0; c < 2; ++c) {
    const Eigen::RowVectorXd mean = x.middleRows(c * 20000, 20000).colwise().mean();
    EXPECT_LE((mean - d.centers.row(c)).cwiseAbs().maxCoeff(), 0.05);
  }
}

TEST(Synth, ShiftedOodIsDisplaced) {
  MixtureSpec s;
  s.ood.magnitude = 8.0;
  const auto d = generate(s);
  const auto nearest = [&](const EmbeddingMatrix& m, std::size_t i) {
    double best = 1e300;
    for (int c = 0; c < d.centers.rows(); ++c) {
      double dist = 0;
      for (std::size_t j = 0; j < m.cols(); ++j) dist += std::pow(m(i, j) - d.centers(c, j), 2);
      best = std::min(best, dist);
    }
    return best;
  };
  double id = 0, ood = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    id += nearest(d.id, i * 10) / 200;
    ood += nearest(d.ood, i) / 200;
  }
  // Expected squared distance is d * std^2 for ID and d + 64 for a shift of 8 std.
  EXPECT_NEAR(id, 32.0, 4.0);
  EXPECT_GT(ood, id + 20.0);
}

TEST(Synth, InvalidMixture) {
  MixtureSpec s;
  s.cluster_count = 0;
  EXPECT_THROW(generate(s), Error);
}
