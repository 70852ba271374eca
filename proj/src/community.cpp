#include "ood/community.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ood/error.hpp"
#include "ood/parallel.hpp"
#include "ood/rng.hpp"

namespace ood {
namespace {

std::atomic<std::size_t> g_louvain_violations{0};
std::atomic<std::size_t> g_kmeans_violations{0};

// Graph at one Louvain level. self_loop holds A_ii (both directions of every
// collapsed internal edge); degree includes it.
struct LevelGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency;
  std::vector<double> self_loop;
  std::vector<double> degree;
  double two_m = 0.0;

  std::size_t size() const { return adjacency.size(); }
};

// Moves nodes between communities in seeded order until a pass gains less
// than min_gain. Returns the community of each node.
std::vector<std::uint32_t> local_moving(const LevelGraph& g, const LouvainOptions& opt, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<std::uint32_t> comm(n);
  std::iota(comm.begin(), comm.end(), 0u);
  std::vector<double> tot(g.degree);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);

  std::vector<double> link(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> touched;
  const double m = g.two_m / 2.0;

  while (true) {
    rng.shuffle(std::span<std::uint32_t>(order));
    double pass_gain = 0.0;
    std::size_t moves = 0;
    for (const auto i : order) {
      const double ki = g.degree[i];
      const std::uint32_t current = comm[i];

      touched.clear();
      touched.push_back(current);
      seen[current] = 1;
      for (const auto& [j, w] : g.adjacency[i]) {
        const auto c = comm[j];
        if (!seen[c]) {
          seen[c] = 1;
          touched.push_back(c);
        }
        link[c] += w;
      }

      tot[current] -= ki;
      const auto score = [&](std::uint32_t c) {
        return link[c] - opt.resolution * tot[c] * ki / g.two_m;
      };
      const double stay = score(current);
      std::uint32_t best = current;
      double best_score = stay;
      for (const auto c : touched) {
        const double s = score(c);
        if (s > best_score || (s == best_score && c < best)) {
          best = c;
          best_score = s;
        }
      }
      // Equal-score alternatives never displace the current community.
      if (best != current && !(best_score - stay > 1e-12 * std::max(ki, 1e-300))) {
        best = current;
      }
      if (best != current) {
        const double gain = (best_score - stay) / m;
        assert(gain > 0.0);
        pass_gain += gain;
        ++moves;
      }
      tot[best] += ki;
      comm[i] = best;
      for (const auto c : touched) {
        link[c] = 0.0;
        seen[c] = 0;
      }
    }
    if (moves == 0 || pass_gain <= opt.min_pass_gain) break;
  }
  return comm;
}

// Renumbers communities 0..C-1 by smallest node and returns C.
std::size_t compact(std::vector<std::uint32_t>& comm) {
  std::vector<std::int64_t> remap(comm.size(), -1);
  std::uint32_t next = 0;
  for (auto& c : comm) {
    if (remap[c] < 0) remap[c] = next++;
    c = static_cast<std::uint32_t>(remap[c]);
  }
  return next;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<std::uint32_t>& comm, std::size_t count) {
  LevelGraph out;
  out.adjacency.resize(count);
  out.self_loop.assign(count, 0.0);
  out.degree.assign(count, 0.0);
  out.two_m = g.two_m;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> raw(count);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto ci = comm[i];
    out.self_loop[ci] += g.self_loop[i];
    out.degree[ci] += g.degree[i];
    for (const auto& [j, w] : g.adjacency[i]) {
      const auto cj = comm[j];
      if (ci == cj) {
        out.self_loop[ci] += w;
      } else {
        raw[ci].emplace_back(cj, w);
      }
    }
  }
  for (std::size_t c = 0; c < count; ++c) {
    auto& list = raw[c];
    std::sort(list.begin(), list.end());
    for (std::size_t a = 0; a < list.size();) {
      std::size_t b = a;
      double w = 0.0;
      while (b < list.size() && list[b].first == list[a].first) w += list[b++].second;
      out.adjacency[c].emplace_back(list[a].first, w);
      a = b;
    }
  }
  return out;
}

}  // namespace

std::vector<std::size_t> Partition::cluster_sizes() const {
  std::vector<std::size_t> sizes(cluster_count, 0);
  for (auto c : assignment) {
    if (c != kUnassigned) ++sizes[static_cast<std::size_t>(c)];
  }
  return sizes;
}

std::size_t relabel_by_first_member(std::vector<std::int32_t>& assignment) {
  std::vector<std::int32_t> remap;
  std::int32_t next = 0;
  for (auto& c : assignment) {
    if (c == kUnassigned) continue;
    const auto idx = static_cast<std::size_t>(c);
    if (idx >= remap.size()) remap.resize(idx + 1, kUnassigned);
    if (remap[idx] == kUnassigned) remap[idx] = next++;
    c = remap[idx];
  }
  return static_cast<std::size_t>(next);
}

double modularity(const KnnGraph& g, const std::vector<std::int32_t>& assignment, double resolution) {
  if (assignment.size() != g.node_count()) {
    throw Error(ErrorCode::kLengthMismatch, "assignment covers " + std::to_string(assignment.size()) +
                                                " of " + std::to_string(g.node_count()) + " nodes");
  }
  const double two_m = 2.0 * g.total_weight();
  if (!(two_m > 0.0)) throw Error(ErrorCode::kEmptyGraph, "graph has no edge weight");

  std::int32_t max_id = -1;
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    if (assignment[u] == kUnassigned || assignment[u] < 0) {
      if (!g.neighbors(u).empty()) {
        throw Error(ErrorCode::kUnassignedNode, "node " + std::to_string(u));
      }
      continue;
    }
    max_id = std::max(max_id, assignment[u]);
  }
  std::vector<double> inside(static_cast<std::size_t>(max_id + 1), 0.0);
  std::vector<double> total(inside.size(), 0.0);
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    if (g.neighbors(u).empty()) continue;
    const auto cu = static_cast<std::size_t>(assignment[u]);
    for (const auto& e : g.neighbors(u)) {
      total[cu] += e.weight;
      if (assignment[e.node] == assignment[u]) inside[cu] += e.weight;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < inside.size(); ++c) {
    const double share = total[c] / two_m;
    q += inside[c] / two_m - resolution * share * share;
  }
  return q;
}

std::size_t louvain_monotonicity_violations() { return g_louvain_violations.load(); }
std::size_t kmeans_monotonicity_violations() { return g_kmeans_violations.load(); }

Partition louvain(const KnnGraph& g, const LouvainOptions& options) {
  if (g.edge_count() == 0) throw Error(ErrorCode::kEmptyGraph, "louvain needs at least one edge");
  if (!(options.resolution > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "resolution must be positive");
  }

  // Level 0 holds the non-isolated nodes in ascending order.
  std::vector<std::int64_t> level_of(g.node_count(), -1);
  LevelGraph level;
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    if (g.neighbors(u).empty()) continue;
    level_of[u] = static_cast<std::int64_t>(level.adjacency.size());
    level.adjacency.emplace_back();
  }
  level.self_loop.assign(level.size(), 0.0);
  level.degree.assign(level.size(), 0.0);
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    if (level_of[u] < 0) continue;
    const auto lu = static_cast<std::size_t>(level_of[u]);
    for (const auto& e : g.neighbors(u)) {
      level.adjacency[lu].emplace_back(static_cast<std::uint32_t>(level_of[e.node]), e.weight);
      level.degree[lu] += e.weight;
    }
  }
  level.two_m = 2.0 * g.total_weight();

  std::vector<std::int32_t> assignment(g.node_count(), kUnassigned);
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    if (level_of[u] >= 0) assignment[u] = static_cast<std::int32_t>(level_of[u]);
  }

  Rng rng(options.seed);
  double q = modularity(g, assignment, options.resolution);
  while (true) {
    auto comm = local_moving(level, options, rng);
    const std::size_t count = compact(comm);
    for (auto& c : assignment) {
      if (c != kUnassigned) c = static_cast<std::int32_t>(comm[static_cast<std::size_t>(c)]);
    }
    const double next_q = modularity(g, assignment, options.resolution);
    if (next_q < q - 1e-10) {
      g_louvain_violations.fetch_add(1);
      assert(false && "louvain level decreased modularity");
    }
    q = next_q;
    if (count == level.size()) break;
    level = aggregate(level, comm, count);
  }

  Partition p;
  p.cluster_count = relabel_by_first_member(assignment);
  p.assignment = std::move(assignment);
  p.modularity = modularity(g, p.assignment, options.resolution);
  return p;
}

KMeansResult kmeans(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  if (k > n) {
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  }
  Rng rng(seed);
  const auto row = [&](std::size_t i) { return rows.row(static_cast<Eigen::Index>(i)); };

  // Greedy k-means++: several D^2-weighted candidates per step, keep the one
  // that lowers the potential most.
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), rows.cols());
  std::vector<double> nearest(n);
  const std::size_t first = rng.below(n);
  centers.row(0) = row(first);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = (row(i) - centers.row(0)).squaredNorm();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  for (std::size_t c = 1; c < k; ++c) {
    const double potential = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    std::size_t best_candidate = 0;
    double best_potential = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      std::size_t candidate = 0;
      if (potential > 0.0) {
        const double target = rng.uniform() * potential;
        double acc = 0.0;
        candidate = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += nearest[i];
          if (acc > target && nearest[i] > 0.0) {
            candidate = i;
            break;
          }
        }
      } else {
        candidate = rng.below(n);
      }
      double trial_potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        trial_potential += std::min(nearest[i], (row(i) - row(candidate)).squaredNorm());
      }
      if (trial_potential < best_potential) {
        best_potential = trial_potential;
        best_candidate = candidate;
      }
    }
    centers.row(static_cast<Eigen::Index>(c)) = row(best_candidate);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (row(i) - row(best_candidate)).squaredNorm());
    }
  }

  std::vector<std::int32_t> assign(n, kUnassigned);
  std::vector<double> dist(n, 0.0);
  const auto assign_step = [&] {
    bool changed = false;
    std::vector<std::int32_t> next(n);
    parallel_for(n, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      std::int32_t arg = 0;
      for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const double d2 = (row(i) - centers.row(c)).squaredNorm();
        if (d2 < best) {
          best = d2;
          arg = static_cast<std::int32_t>(c);
        }
      }
      next[i] = arg;
      dist[i] = best;
    });
    for (std::size_t i = 0; i < n; ++i) changed |= next[i] != assign[i];
    assign.swap(next);
    return changed;
  };
  const auto inertia_of = [&] { return std::accumulate(dist.begin(), dist.end(), 0.0); };

  KMeansResult result;
  assign_step();
  double inertia = inertia_of();
  std::size_t iter = 0;
  for (; iter < max_iters; ++iter) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centers.rows(), centers.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(assign[i]) += row(i);
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      if (counts[c] > 0) {
        centers.row(cc) = sums.row(cc) / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move its center onto the worst-served point.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      taken[far] = true;
      dist[far] = 0.0;
      centers.row(cc) = row(far);
    }
    const bool changed = assign_step();
    const double next_inertia = inertia_of();
    if (next_inertia > inertia * (1.0 + 1e-12) + 1e-300) {
      g_kmeans_violations.fetch_add(1);
      assert(false && "k-means inertia increased");
    }
    inertia = next_inertia;
    if (!changed) {
      ++iter;
      break;
    }
  }

  // Compact ids by first member; reorder centers to match.
  std::vector<std::int32_t> relabeled = assign;
  const std::size_t count = relabel_by_first_member(relabeled);
  Eigen::MatrixXd ordered(static_cast<Eigen::Index>(count), rows.cols());
  for (std::size_t i = 0; i < n; ++i) ordered.row(relabeled[i]) = centers.row(assign[i]);

  result.partition.assignment = std::move(relabeled);
  result.partition.cluster_count = count;
  result.centers = std::move(ordered);
  result.inertia = inertia;
  result.iterations = iter;
  return result;
}

KMeansResult kmeans(const EmbeddingMatrix& rows, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  return kmeans(rows.to_eigen(), k, seed, max_iters);
}

}  // namespace ood
