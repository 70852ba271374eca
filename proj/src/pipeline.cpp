#include "ood/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ood/error.hpp"
#include "ood/parallel.hpp"

namespace ood {
namespace {

using nlohmann::json;

constexpr int kModelSchemaVersion = 1;

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto r = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(r.size()) != cols) {
      throw Error(ErrorCode::kParseError, "ragged matrix in model file");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)];
  }
  return m;
}

json gaussian_to_json(const ClusterGaussian& g) {
  return {{"centroid", vector_to_json(g.centroid())},
          {"covariance", matrix_to_json(g.covariance())},
          {"ridge_scale", g.ridge_scale()},
          {"member_count", g.member_count()}};
}

ClusterGaussian gaussian_from_json(const json& j) {
  auto centroid = vector_from_json(j.at("centroid"));
  auto cov = matrix_from_json(j.at("covariance"), centroid.size());
  return {std::move(centroid), std::move(cov), j.at("ridge_scale").get<double>(),
          j.at("member_count").get<std::size_t>()};
}

// Reduced-space rows that can take part in the cosine graph.
std::vector<std::size_t> graphable_rows(const Eigen::MatrixXd& reduced) {
  std::vector<std::size_t> rows;
  for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
    if (reduced.row(i).norm() >= kMinNorm) rows.push_back(static_cast<std::size_t>(i));
  }
  return rows;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

FitResult fit_degenerate(const Eigen::MatrixXd& rows, const FitConfig& config) {
  const auto n = static_cast<std::size_t>(rows.rows());
  PcaModel pca;
  pca.mean = rows.colwise().mean().transpose();
  pca.components = Eigen::MatrixXd::Zero(1, rows.cols());
  pca.components(0, 0) = 1.0;
  pca.explained_variance = Eigen::VectorXd::Zero(1);
  const Eigen::MatrixXd reduced = pca.transform(rows);
  ClusterGaussian pooled = fit_gaussian(reduced, config.ridge_scale);

  FitMetadata meta;
  meta.config = config;
  meta.sample_count = n;
  meta.reduced_dim = 1;
  meta.cluster_count = 1;
  meta.pooled_fallback_count = 1;
  meta.degenerate = true;

  FitResult result{OodModel{std::move(pca), {pooled}, {true}, pooled, std::nullopt, meta}, {}, {}, {}, {}};
  result.partition.assignment.assign(n, 0);
  result.partition.cluster_count = 1;
  return result;
}

}  // namespace

std::string to_string(Clusterer c) { return c == Clusterer::kLouvain ? "louvain" : "kmeans"; }

Clusterer parse_clusterer(const std::string& name) {
  if (name == "louvain") return Clusterer::kLouvain;
  if (name == "kmeans") return Clusterer::kKMeans;
  throw Error(ErrorCode::kInvalidArgument, "unknown clusterer '" + name + "'");
}

std::string to_string(Symmetrization s) { return s == Symmetrization::kUnion ? "union" : "mutual"; }

Symmetrization parse_symmetrization(const std::string& name) {
  if (name == "union") return Symmetrization::kUnion;
  if (name == "mutual") return Symmetrization::kMutual;
  throw Error(ErrorCode::kInvalidArgument, "unknown symmetrization '" + name + "'");
}

std::size_t min_cluster_size(std::size_t reduced_dim) { return std::max<std::size_t>(10, reduced_dim); }

FitResult fit_detailed(const EmbeddingMatrix& id_rows, const FitConfig& config) {
  const std::size_t n = id_rows.rows();
  if (n < 10) {
    throw Error(ErrorCode::kTooFewSamples, "fit needs at least 10 samples, got " + std::to_string(n));
  }
  if (config.k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");

  const Eigen::MatrixXd rows = id_rows.to_eigen();
  PcaModel pca;
  try {
    pca = fit_pca(rows, config.pca);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateData) throw;
    return fit_degenerate(rows, config);
  }
  const Eigen::MatrixXd reduced = pca.transform(rows);
  const std::size_t p = pca.output_dim();

  // Rows sitting exactly on the mean have no direction; they join the
  // isolated set rather than the graph.
  const auto nodes = graphable_rows(reduced);
  if (nodes.size() < 2 || config.k > nodes.size() - 1) {
    if (nodes.size() < 2) throw Error(ErrorCode::kAllNodesIsolated, "fewer than two usable rows");
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(config.k) + " with " +
                                           std::to_string(nodes.size()) + " usable rows");
  }
  KnnGraph graph = build_knn_graph(take_rows(reduced, nodes), config.k, config.symmetrization);
  if (graph.edge_count() == 0) throw Error(ErrorCode::kAllNodesIsolated, "KNN graph has no edges");

  std::vector<std::size_t> isolated;
  std::vector<bool> in_graph(n, false);
  for (auto idx : nodes) in_graph[idx] = true;
  std::vector<bool> graph_isolated(nodes.size(), false);
  for (auto local : isolated_nodes(graph)) graph_isolated[local] = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_graph[i]) isolated.push_back(i);
  }
  for (std::size_t local = 0; local < nodes.size(); ++local) {
    if (graph_isolated[local]) isolated.push_back(nodes[local]);
  }
  std::sort(isolated.begin(), isolated.end());

  // K-means with an explicit count never needs the Louvain partition.
  Partition graph_partition;
  std::optional<double> graph_modularity;
  if (config.clusterer == Clusterer::kLouvain || !config.kmeans_clusters) {
    graph_partition = louvain(graph, LouvainOptions{config.resolution, config.seed});
    graph_modularity = graph_partition.modularity;
  }

  Partition partition;
  partition.assignment.assign(n, kUnassigned);
  if (config.clusterer == Clusterer::kLouvain) {
    for (std::size_t local = 0; local < nodes.size(); ++local) {
      partition.assignment[nodes[local]] = graph_partition.assignment[local];
    }
    partition.cluster_count = graph_partition.cluster_count;
    partition.modularity = graph_modularity;
  } else {
    // K-means clusters the same non-isolated rows the graph would have.
    std::vector<std::size_t> members;
    for (std::size_t local = 0; local < nodes.size(); ++local) {
      if (!graph_isolated[local]) members.push_back(nodes[local]);
    }
    const std::size_t count = config.kmeans_clusters.value_or(graph_partition.cluster_count);
    auto km = kmeans(take_rows(reduced, members), count, config.seed);
    for (std::size_t r = 0; r < members.size(); ++r) partition.assignment[members[r]] = km.partition.assignment[r];
    partition.cluster_count = km.partition.cluster_count;
    std::vector<std::int32_t> on_graph(nodes.size());
    for (std::size_t local = 0; local < nodes.size(); ++local) on_graph[local] = partition.assignment[nodes[local]];
    graph_modularity = modularity(graph, on_graph, config.resolution);
    partition.modularity = graph_modularity;
  }

  ClusterGaussian pooled = fit_gaussian(reduced, config.ridge_scale);
  std::vector<std::vector<std::size_t>> members(partition.cluster_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (partition.assignment[i] != kUnassigned) members[static_cast<std::size_t>(partition.assignment[i])].push_back(i);
  }
  std::vector<ClusterGaussian> clusters;
  std::vector<bool> uses_pooled;
  std::size_t fallback = 0;
  const std::size_t min_size = min_cluster_size(p);
  for (const auto& idx : members) {
    ClusterGaussian g = fit_gaussian(take_rows(reduced, idx), config.ridge_scale);
    const bool small = idx.size() < min_size;
    if (small) {
      g = g.with_covariance(pooled.covariance());
      ++fallback;
    }
    clusters.push_back(std::move(g));
    uses_pooled.push_back(small);
  }

  FitMetadata meta;
  meta.config = config;
  meta.sample_count = n;
  meta.reduced_dim = p;
  meta.cluster_count = partition.cluster_count;
  meta.isolated_count = isolated.size();
  meta.edge_count = graph.edge_count();
  meta.pooled_fallback_count = fallback;
  meta.modularity = graph_modularity;

  return FitResult{OodModel{std::move(pca), std::move(clusters), std::move(uses_pooled),
                            std::move(pooled), std::nullopt, std::move(meta)},
                   std::move(partition), std::move(isolated), std::move(graph), nodes};
}

OodModel fit(const EmbeddingMatrix& id_rows, const FitConfig& config) {
  return fit_detailed(id_rows, config).model;
}

ScoreReport score(const OodModel& model, const EmbeddingMatrix& rows) {
  if (rows.cols() != model.pca.input_dim()) {
    throw Error(ErrorCode::kDimMismatch, "model expects d=" + std::to_string(model.pca.input_dim()) +
                                             ", got d=" + std::to_string(rows.cols()));
  }
  const Eigen::MatrixXd reduced = model.pca.transform(rows.to_eigen());
  ScoreReport report;
  const std::size_t n = rows.rows();
  report.scores.resize(n);
  report.nearest_cluster.resize(n);
  report.is_ood.assign(n, std::nullopt);
  parallel_for(n, [&](std::size_t i) {
    const Eigen::VectorXd x = reduced.row(static_cast<Eigen::Index>(i)).transpose();
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < model.clusters.size(); ++c) {
      const double d = mahalanobis(x, model.clusters[c]);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    report.scores[i] = best;
    report.nearest_cluster[i] = arg;
  });
  return report;
}

double percentile_threshold(std::vector<double> scores, double percentile) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyHoldout, "no calibration scores");
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile must lie in (0, 100]");
  }
  std::sort(scores.begin(), scores.end());
  const double n = static_cast<double>(scores.size());
  // percentile * n is exact for integral percentiles; the slack absorbs
  // representation error for fractional ones such as 99.9.
  auto rank = static_cast<std::size_t>(std::ceil(percentile * n / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, scores.size());
  return scores[rank - 1];
}

OodModel calibrate_threshold(const OodModel& model, const EmbeddingMatrix& holdout, double percentile,
                             const std::string& source) {
  const auto report = score(model, holdout);
  double t = percentile_threshold(report.scores, percentile);
  // A zero distance cannot serve as a positive threshold; the smallest
  // positive double keeps every zero score in-distribution.
  if (!(t > 0.0)) t = std::numeric_limits<double>::denorm_min();
  OodModel out = model;
  out.threshold = t;
  out.metadata.calibration_source = source;
  out.metadata.calibration_percentile = percentile;
  return out;
}

ScoreReport classify(const ScoreReport& report, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be positive");
  ScoreReport out = report;
  for (std::size_t i = 0; i < out.size(); ++i) out.is_ood[i] = out.scores[i] > threshold;
  return out;
}

std::vector<double> knn_raw_baseline(const EmbeddingMatrix& id_rows, const EmbeddingMatrix& queries,
                                     std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  if (k > id_rows.rows()) {
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " exceeds " +
                                           std::to_string(id_rows.rows()) + " ID rows");
  }
  if (id_rows.cols() != queries.cols()) {
    throw Error(ErrorCode::kDimMismatch, "ID and query dimensions differ");
  }
  const Eigen::MatrixXd ref = id_rows.to_eigen();
  const Eigen::MatrixXd q = queries.to_eigen();
  std::vector<double> out(queries.rows());
  parallel_for(queries.rows(), [&](std::size_t i) {
    std::vector<double> d2(static_cast<std::size_t>(ref.rows()));
    for (Eigen::Index r = 0; r < ref.rows(); ++r) {
      d2[static_cast<std::size_t>(r)] = (ref.row(r) - q.row(static_cast<Eigen::Index>(i))).squaredNorm();
    }
    std::partial_sort(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k), d2.end());
    double sum = 0.0;
    for (std::size_t t = 0; t < k; ++t) sum += std::sqrt(d2[t]);
    out[i] = sum / static_cast<double>(k);
  });
  return out;
}

std::string model_to_json(const OodModel& model) {
  const auto& cfg = model.metadata.config;
  json pca_target = {{"variance_fraction", cfg.pca.variance_fraction},
                     {"max_components", cfg.pca.max_components}};
  pca_target["components"] = cfg.pca.components ? json(*cfg.pca.components) : json(nullptr);

  json meta = {{"k", cfg.k},
               {"seed", cfg.seed},
               {"ridge_scale", cfg.ridge_scale},
               {"clusterer", to_string(cfg.clusterer)},
               {"resolution", cfg.resolution},
               {"symmetrization", to_string(cfg.symmetrization)},
               {"pca_target", pca_target},
               {"sample_count", model.metadata.sample_count},
               {"reduced_dim", model.metadata.reduced_dim},
               {"cluster_count", model.metadata.cluster_count},
               {"isolated_count", model.metadata.isolated_count},
               {"edge_count", model.metadata.edge_count},
               {"pooled_fallback_count", model.metadata.pooled_fallback_count},
               {"degenerate", model.metadata.degenerate}};
  meta["kmeans_clusters"] = cfg.kmeans_clusters ? json(*cfg.kmeans_clusters) : json(nullptr);
  meta["modularity"] = model.metadata.modularity ? json(*model.metadata.modularity) : json(nullptr);
  meta["calibration_source"] =
      model.metadata.calibration_source ? json(*model.metadata.calibration_source) : json(nullptr);
  meta["calibration_percentile"] =
      model.metadata.calibration_percentile ? json(*model.metadata.calibration_percentile) : json(nullptr);

  json clusters = json::array();
  for (std::size_t c = 0; c < model.clusters.size(); ++c) {
    json g = gaussian_to_json(model.clusters[c]);
    g["uses_pooled_covariance"] = static_cast<bool>(model.uses_pooled[c]);
    clusters.push_back(std::move(g));
  }

  json doc = {{"schema", "ood-model"},
              {"version", kModelSchemaVersion},
              {"pca",
               {{"mean", vector_to_json(model.pca.mean)},
                {"components", matrix_to_json(model.pca.components)},
                {"explained_variance", vector_to_json(model.pca.explained_variance)}}},
              {"clusters", std::move(clusters)},
              {"pooled", gaussian_to_json(model.pooled)},
              {"fit_metadata", std::move(meta)}};
  doc["threshold"] = model.threshold ? json(*model.threshold) : json(nullptr);
  return doc.dump(1);
}

OodModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("model file: ") + e.what());
  }
  try {
    if (doc.value("schema", "") != "ood-model") throw Error(ErrorCode::kBadMagic, "not a model file");
    if (doc.at("version").get<int>() != kModelSchemaVersion) {
      throw Error(ErrorCode::kParseError, "unsupported model version");
    }
    PcaModel pca;
    const auto& pj = doc.at("pca");
    pca.mean = vector_from_json(pj.at("mean"));
    pca.components = matrix_from_json(pj.at("components"), pca.mean.size());
    pca.explained_variance = vector_from_json(pj.at("explained_variance"));

    std::vector<ClusterGaussian> clusters;
    std::vector<bool> uses_pooled;
    for (const auto& cj : doc.at("clusters")) {
      clusters.push_back(gaussian_from_json(cj));
      uses_pooled.push_back(cj.value("uses_pooled_covariance", false));
    }
    if (clusters.empty()) throw Error(ErrorCode::kParseError, "model has no clusters");

    const auto& mj = doc.at("fit_metadata");
    FitMetadata meta;
    auto& cfg = meta.config;
    cfg.k = mj.at("k").get<std::size_t>();
    cfg.seed = mj.at("seed").get<std::uint64_t>();
    cfg.ridge_scale = mj.at("ridge_scale").get<double>();
    cfg.clusterer = parse_clusterer(mj.at("clusterer").get<std::string>());
    cfg.resolution = mj.at("resolution").get<double>();
    cfg.symmetrization = parse_symmetrization(mj.at("symmetrization").get<std::string>());
    const auto& tj = mj.at("pca_target");
    cfg.pca.variance_fraction = tj.at("variance_fraction").get<double>();
    cfg.pca.max_components = tj.at("max_components").get<std::size_t>();
    if (!tj.at("components").is_null()) cfg.pca.components = tj.at("components").get<std::size_t>();
    if (!mj.at("kmeans_clusters").is_null()) cfg.kmeans_clusters = mj.at("kmeans_clusters").get<std::size_t>();
    meta.sample_count = mj.at("sample_count").get<std::size_t>();
    meta.reduced_dim = mj.at("reduced_dim").get<std::size_t>();
    meta.cluster_count = mj.at("cluster_count").get<std::size_t>();
    meta.isolated_count = mj.at("isolated_count").get<std::size_t>();
    meta.edge_count = mj.at("edge_count").get<std::size_t>();
    meta.pooled_fallback_count = mj.at("pooled_fallback_count").get<std::size_t>();
    meta.degenerate = mj.at("degenerate").get<bool>();
    if (!mj.at("modularity").is_null()) meta.modularity = mj.at("modularity").get<double>();
    if (!mj.at("calibration_source").is_null()) {
      meta.calibration_source = mj.at("calibration_source").get<std::string>();
    }
    if (!mj.at("calibration_percentile").is_null()) {
      meta.calibration_percentile = mj.at("calibration_percentile").get<double>();
    }

    std::optional<double> threshold;
    if (!doc.at("threshold").is_null()) {
      threshold = doc.at("threshold").get<double>();
      if (!(*threshold > 0.0)) throw Error(ErrorCode::kParseError, "threshold must be positive");
    }
    for (const auto& g : clusters) {
      if (g.dim() != pca.output_dim()) throw Error(ErrorCode::kDimMismatch, "cluster dim != PCA dim");
    }
    return OodModel{std::move(pca), std::move(clusters), std::move(uses_pooled),
                    gaussian_from_json(doc.at("pooled")), threshold, std::move(meta)};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("model file: ") + e.what());
  }
}

void save_model(const OodModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << model_to_json(model) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

OodModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

void save_score_report(const ScoreReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "index,score,nearest_cluster,is_ood\n";
  for (std::size_t i = 0; i < report.size(); ++i) {
    out << i << ',' << report.scores[i] << ',' << report.nearest_cluster[i] << ',';
    if (report.is_ood[i]) out << (*report.is_ood[i] ? 1 : 0);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace ood
