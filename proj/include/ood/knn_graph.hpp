#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "ood/io.hpp"

namespace ood {

struct Neighbor {
  std::uint32_t node;
  double weight;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// How directed candidate edges become undirected ones.
enum class Symmetrization {
  kUnion,   // keep (u, v) if either endpoint selected the other
  kMutual,  // keep (u, v) only if both did
};

/// Undirected weighted graph with per-node adjacency sorted by neighbor id.
/// Weights are cosine similarities, strictly positive, no self-loops.
class KnnGraph {
 public:
  KnnGraph() = default;
  explicit KnnGraph(std::vector<std::vector<Neighbor>> adjacency);

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  /// Sum of undirected edge weights (m in the modularity formula).
  double total_weight() const { return total_weight_; }
  const std::vector<Neighbor>& neighbors(std::size_t u) const { return adjacency_[u]; }
  double degree(std::size_t u) const;

  friend bool operator==(const KnnGraph&, const KnnGraph&) = default;

 private:
  std::vector<std::vector<Neighbor>> adjacency_;
  std::size_t edge_count_ = 0;
  double total_weight_ = 0.0;
};

/// Exact brute-force cosine KNN graph. Ties in similarity go to the lower
/// index; candidate edges with weight <= 0 are dropped.
KnnGraph build_knn_graph(const Eigen::MatrixXd& rows, std::size_t k,
                         Symmetrization mode = Symmetrization::kUnion);
KnnGraph build_knn_graph(const EmbeddingMatrix& rows, std::size_t k,
                         Symmetrization mode = Symmetrization::kUnion);

/// Nodes with no incident edges, ascending.
std::vector<std::size_t> isolated_nodes(const KnnGraph& g);

/// One "u v w" line per undirected edge with u < v.
void export_edge_list(const KnnGraph& g, const std::filesystem::path& path);

}  // namespace ood
