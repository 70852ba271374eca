#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ood/io.hpp"
#include "ood/knn_graph.hpp"

namespace ood {

inline constexpr std::int32_t kUnassigned = -1;

/// Cluster id per node in [0, cluster_count), or kUnassigned for nodes left
/// out of clustering (isolated graph nodes).
struct Partition {
  std::vector<std::int32_t> assignment;
  std::size_t cluster_count = 0;
  /// Modularity on the graph the partition was computed from; absent for
  /// partitions that did not come from a graph.
  std::optional<double> modularity;

  std::vector<std::size_t> cluster_sizes() const;
};

/// Weighted Newman-Girvan modularity with resolution gamma:
///   Q = sum_c [ in_c / 2m - gamma * (tot_c / 2m)^2 ]
/// where in_c sums A_uv over ordered pairs inside c and tot_c sums degrees.
double modularity(const KnnGraph& g, const std::vector<std::int32_t>& assignment,
                  double resolution = 1.0);

struct LouvainOptions {
  double resolution = 1.0;
  std::uint64_t seed = 0;
  /// Minimum modularity gain per local-moving pass to run another pass.
  double min_pass_gain = 1e-7;
};

/// Multi-level Louvain: seeded-order local moving followed by community
/// aggregation until a level produces no merge. Isolated nodes stay
/// unassigned.
Partition louvain(const KnnGraph& g, const LouvainOptions& options = {});

/// Times a Louvain level lowered modularity. Stays at zero unless the
/// implementation is broken; exposed so test suites can assert on it.
std::size_t louvain_monotonicity_violations();

struct KMeansResult {
  Partition partition;
  Eigen::MatrixXd centers;  // cluster_count x d
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd iterations from greedy k-means++ seeding. Stops when assignments
/// repeat or after max_iters; an emptied cluster is re-seeded with the point
/// farthest from its current center.
KMeansResult kmeans(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 300);
KMeansResult kmeans(const EmbeddingMatrix& rows, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 300);

/// Times an assignment step raised inertia; see louvain_monotonicity_violations.
std::size_t kmeans_monotonicity_violations();

/// Renumbers ids so clusters appear in order of their smallest member.
std::size_t relabel_by_first_member(std::vector<std::int32_t>& assignment);

}  // namespace ood
