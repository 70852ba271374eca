#include "ood/knn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>

#include "ood/error.hpp"
#include "ood/linalg.hpp"
#include "ood/parallel.hpp"

namespace ood {
namespace {

constexpr Eigen::Index kBlockRows = 256;

struct Candidate {
  double sim;
  std::uint32_t node;
};

bool closer(const Candidate& a, const Candidate& b) {
  return a.sim > b.sim || (a.sim == b.sim && a.node < b.node);
}

}  // namespace

KnnGraph::KnnGraph(std::vector<std::vector<Neighbor>> adjacency) : adjacency_(std::move(adjacency)) {
  std::size_t directed = 0;
  double weight_sum = 0.0;
  for (std::size_t u = 0; u < adjacency_.size(); ++u) {
    auto& list = adjacency_[u];
    std::sort(list.begin(), list.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    for (const auto& e : list) {
      if (e.node == u) throw Error(ErrorCode::kInvalidArgument, "self-loop at " + std::to_string(u));
      if (e.node >= adjacency_.size()) {
        throw Error(ErrorCode::kIndexOutOfRange, "edge to " + std::to_string(e.node));
      }
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw Error(ErrorCode::kInvalidArgument, "edge weights must be positive and finite");
      }
      if (u < e.node) weight_sum += e.weight;
    }
    directed += list.size();
  }
  // Symmetry: every (u, v, w) has a matching (v, u, w).
  for (std::size_t u = 0; u < adjacency_.size(); ++u) {
    for (const auto& e : adjacency_[u]) {
      const auto& back = adjacency_[e.node];
      auto it = std::lower_bound(back.begin(), back.end(), u,
                                 [](const Neighbor& n, std::size_t id) { return n.node < id; });
      if (it == back.end() || it->node != u || it->weight != e.weight) {
        throw Error(ErrorCode::kInvalidArgument, "adjacency is not symmetric at (" +
                                                     std::to_string(u) + ", " +
                                                     std::to_string(e.node) + ")");
      }
    }
  }
  edge_count_ = directed / 2;
  total_weight_ = weight_sum;
}

double KnnGraph::degree(std::size_t u) const {
  double s = 0.0;
  for (const auto& e : adjacency_[u]) s += e.weight;
  return s;
}

KnnGraph build_knn_graph(const Eigen::MatrixXd& rows, std::size_t k, Symmetrization mode) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (n < 2) throw Error(ErrorCode::kTooFewNodes, "graph needs at least 2 nodes");
  if (k < 1 || k > n - 1) {
    throw Error(ErrorCode::kKTooLarge,
                "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n - 1) + "]");
  }

  Eigen::MatrixXd unit = rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = rows.row(static_cast<Eigen::Index>(i)).norm();
    if (norm < kMinNorm) throw Error(ErrorCode::kZeroNorm, "row " + std::to_string(i));
    unit.row(static_cast<Eigen::Index>(i)) /= norm;
  }

  // Fixed block boundaries keep the similarity arithmetic independent of
  // the worker count.
  const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  std::vector<std::vector<std::uint32_t>> chosen(n);
  parallel_for(blocks, [&](std::size_t b) {
    const auto begin = static_cast<Eigen::Index>(b) * kBlockRows;
    const auto count = std::min<Eigen::Index>(kBlockRows, static_cast<Eigen::Index>(n) - begin);
    const Eigen::MatrixXd sims = unit.middleRows(begin, count) * unit.transpose();
    std::vector<Candidate> pool;
    pool.reserve(n - 1);
    for (Eigen::Index r = 0; r < count; ++r) {
      const auto u = static_cast<std::size_t>(begin + r);
      pool.clear();
      for (std::size_t v = 0; v < n; ++v) {
        if (v != u) pool.push_back({sims(r, static_cast<Eigen::Index>(v)), static_cast<std::uint32_t>(v)});
      }
      std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(), closer);
      auto& out = chosen[u];
      out.reserve(k);
      for (std::size_t t = 0; t < k; ++t) out.push_back(pool[t].node);
    }
  });

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(n * k);
  for (std::size_t u = 0; u < n; ++u) {
    for (auto v : chosen[u]) {
      pairs.emplace_back(std::min<std::uint32_t>(static_cast<std::uint32_t>(u), v),
                         std::max<std::uint32_t>(static_cast<std::uint32_t>(u), v));
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<std::vector<Neighbor>> adjacency(n);
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j] == pairs[i]) ++j;
    const bool keep = mode == Symmetrization::kUnion || (j - i) >= 2;
    if (keep) {
      const auto [a, b] = pairs[i];
      const double w = std::clamp(unit.row(a).dot(unit.row(b)), -1.0, 1.0);
      if (w > 0.0) {
        adjacency[a].push_back({b, w});
        adjacency[b].push_back({a, w});
      }
    }
    i = j;
  }
  return KnnGraph(std::move(adjacency));
}

KnnGraph build_knn_graph(const EmbeddingMatrix& rows, std::size_t k, Symmetrization mode) {
  return build_knn_graph(rows.to_eigen(), k, mode);
}

std::vector<std::size_t> isolated_nodes(const KnnGraph& g) {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    if (g.neighbors(u).empty()) out.push_back(u);
  }
  return out;
}

void export_edge_list(const KnnGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out.precision(17);
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    for (const auto& e : g.neighbors(u)) {
      if (u < e.node) out << u << ' ' << e.node << ' ' << e.weight << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace ood
