#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "ood/error.hpp"
#include "ood/metrics.hpp"
#include "ood/pipeline.hpp"
#include "ood/rng.hpp"

using namespace ood;

namespace {

std::vector<double> draw(Rng& rng, std::size_t n, double shift, int levels) {
  std::vector<double> v(n);
  for (auto& x : v) {
    x = rng.normal() + shift;
    if (levels > 0) x = std::round(x * levels) / levels;  // injects ties
  }
  return v;
}

}  // namespace

TEST(Auroc, Examples) {
  EXPECT_EQ(auroc(std::vector<double>{1, 2}, std::vector<double>{3, 4}), 1.0);
  EXPECT_EQ(auroc(std::vector<double>{1, 2, 2}, std::vector<double>{2, 1, 2}), 0.5);
  EXPECT_EQ(auroc(std::vector<double>{1, 3}, std::vector<double>{2, 4}), 0.75);
}

TEST(Aupr, Examples) {
  EXPECT_EQ(aupr(std::vector<double>{1, 2}, std::vector<double>{3, 4}), 1.0);
  EXPECT_EQ(aupr(std::vector<double>{5, 5, 5}, std::vector<double>{5, 5, 5}), 0.5);
  // Ranking O I O I from the top: AP = (1/2)(1 + 2/3) = 5/6.
  EXPECT_NEAR(aupr(std::vector<double>{3, 1}, std::vector<double>{4, 2}), 5.0 / 6.0, 1e-15);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(auroc(std::vector<double>{}, std::vector<double>{1}), Error);
  EXPECT_THROW(aupr(std::vector<double>{1}, std::vector<double>{}), Error);
  EXPECT_THROW(auroc(std::vector<double>{NAN}, std::vector<double>{1}), Error);
}

TEST(MetricsProperty, AurocEqualsPairCount) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto id = draw(rng, 1 + rng.below(500), 0, int(rng.below(4)));
    const auto ood = draw(rng, 1 + rng.below(500), rng.uniform(-1, 2), int(rng.below(4)));
    const auto [twice, pairs] = oracle::auroc_pairs_twice(id, ood);
    EXPECT_EQ(auroc(id, ood), double(twice) / double(2 * pairs));
  }
}

TEST(MetricsProperty, ApMatchesCurveWalk) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto id = draw(rng, 1 + rng.below(300), 0, int(rng.below(4)));
    const auto ood = draw(rng, 1 + rng.below(300), rng.uniform(-1, 2), int(rng.below(4)));
    EXPECT_NEAR(aupr(id, ood), oracle::average_precision(id, ood), 1e-12);
  }
}

TEST(MetricsProperty, SwappingRolesComplementsAuroc) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto a = draw(rng, 50, 0, 2), b = draw(rng, 70, 0.5, 2);
    EXPECT_NEAR(auroc(a, b) + auroc(b, a), 1.0, 1e-12);
  }
}

TEST(MetricsProperty, MonotoneTransformInvariant) {
  Rng rng(4);
  const auto a = draw(rng, 80, 0, 3), b = draw(rng, 60, 0.7, 3);
  std::vector<double> ea, eb;
  for (double x : a) ea.push_back(std::exp(x));
  for (double x : b) eb.push_back(std::exp(x));
  EXPECT_EQ(auroc(a, b), auroc(ea, eb));
  EXPECT_NEAR(aupr(a, b), aupr(ea, eb), 1e-15);
}

TEST(Accuracy, CountsMatches) {
  ScoreReport r;
  r.scores = {0, 0, 0, 0};
  r.nearest_cluster = {0, 0, 0, 0};
  r.is_ood = {false, true, true, false};
  EXPECT_EQ(accuracy(r, {0, 1, 0, 0}), 0.75);
  r.is_ood[0] = std::nullopt;
  EXPECT_THROW(accuracy(r, {0, 1, 0, 0}), Error);
  EXPECT_THROW(accuracy(r, {0, 1}), Error);
}

TEST(EvalReport, JsonHasFields) {
  auto rep = evaluate(std::vector<double>{1, 2}, std::vector<double>{3, 4});
  const auto j = rep.to_json();
  EXPECT_NE(j.find("\"auroc\""), std::string::npos);
  EXPECT_NE(j.find("\"n_ood\""), std::string::npos);
}
