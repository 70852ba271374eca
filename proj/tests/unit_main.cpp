#include <gtest/gtest.h>

#include <iostream>

#include "ood/community.hpp"

// Runs every suite, then checks that no Louvain move or pass lowered
// modularity and no Lloyd step raised inertia anywhere in the run.
int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  int status = RUN_ALL_TESTS();
  const auto louvain = ood::louvain_monotonicity_violations();
  const auto kmeans = ood::kmeans_monotonicity_violations();
  std::cout << "louvain monotonicity violations: " << louvain << "\n"
            << "kmeans monotonicity violations: " << kmeans << "\n";
  if (louvain != 0 || kmeans != 0) status = 1;
  return status;
}
