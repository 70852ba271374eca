#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ood/community.hpp"
#include "ood/io.hpp"
#include "ood/knn_graph.hpp"
#include "ood/linalg.hpp"

namespace ood {

enum class Clusterer { kLouvain, kKMeans };

std::string to_string(Clusterer c);
Clusterer parse_clusterer(const std::string& name);
std::string to_string(Symmetrization s);
Symmetrization parse_symmetrization(const std::string& name);

struct FitConfig {
  std::size_t k = 7;
  PcaTarget pca = PcaTarget::fraction(0.95, 128);
  double ridge_scale = 1e-3;
  std::uint64_t seed = 0;
  Clusterer clusterer = Clusterer::kLouvain;
  /// K-means cluster count; when unset, Louvain runs on the same graph and
  /// its cluster count is used.
  std::optional<std::size_t> kmeans_clusters;
  double resolution = 1.0;
  Symmetrization symmetrization = Symmetrization::kUnion;
};

struct FitMetadata {
  FitConfig config;
  std::size_t sample_count = 0;
  std::size_t reduced_dim = 0;
  std::size_t cluster_count = 0;
  std::size_t isolated_count = 0;
  std::size_t edge_count = 0;
  std::size_t pooled_fallback_count = 0;
  std::optional<double> modularity;
  /// Set when every input row was identical and the graph stage was skipped.
  bool degenerate = false;
  std::optional<std::string> calibration_source;
  std::optional<double> calibration_percentile;
};

struct OodModel {
  PcaModel pca;
  std::vector<ClusterGaussian> clusters;
  /// Per cluster: true when the small-cluster rule swapped in the pooled covariance.
  std::vector<bool> uses_pooled;
  ClusterGaussian pooled;
  std::optional<double> threshold;
  FitMetadata metadata;
};

struct FitResult {
  OodModel model;
  /// Cluster id per training row, kUnassigned for rows left out of clustering.
  Partition partition;
  std::vector<std::size_t> isolated;
  /// KNN graph over graph_rows (training row indices); empty on the degenerate path.
  KnnGraph graph;
  std::vector<std::size_t> graph_rows;
};

/// Clusters smaller than this borrow the pooled covariance.
std::size_t min_cluster_size(std::size_t reduced_dim);

/// PCA -> cosine KNN graph -> Louvain or K-means -> per-cluster Gaussians.
FitResult fit_detailed(const EmbeddingMatrix& id_rows, const FitConfig& config);
OodModel fit(const EmbeddingMatrix& id_rows, const FitConfig& config);

struct ScoreReport {
  std::vector<double> scores;
  std::vector<std::size_t> nearest_cluster;
  std::vector<std::optional<bool>> is_ood;

  std::size_t size() const { return scores.size(); }
};

/// Minimum Mahalanobis distance over clusters in the reduced space; ties
/// resolve to the smallest cluster id.
ScoreReport score(const OodModel& model, const EmbeddingMatrix& rows);

/// Nearest-rank percentile: element ceil(percentile/100 * n) (1-based) of the
/// ascending scores.
double percentile_threshold(std::vector<double> scores, double percentile);

/// Scores the holdout and stores its nearest-rank percentile as threshold.
OodModel calibrate_threshold(const OodModel& model, const EmbeddingMatrix& holdout,
                             double percentile = 95.0,
                             const std::string& source = "holdout");

/// is_ood = score > threshold (strict).
ScoreReport classify(const ScoreReport& report, double threshold);

/// Mean Euclidean distance from each query to its k nearest ID rows.
std::vector<double> knn_raw_baseline(const EmbeddingMatrix& id_rows, const EmbeddingMatrix& queries,
                                     std::size_t k);

std::string model_to_json(const OodModel& model);
OodModel model_from_json(const std::string& text);
void save_model(const OodModel& model, const std::filesystem::path& path);
OodModel load_model(const std::filesystem::path& path);

/// CSV with header index,score,nearest_cluster,is_ood; is_ood is empty
/// when the report is unclassified.
void save_score_report(const ScoreReport& report, const std::filesystem::path& path);

}  // namespace ood
