#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "ood/io.hpp"

namespace ood {

enum class OodMode {
  kShifted,   // ID draw displaced by magnitude * within_std along a seeded unit direction
  kInflated,  // ID cluster centers with noise scaled by magnitude
  kUniform,   // uniform over the center box widened by magnitude * within_std
};

std::string to_string(OodMode m);
OodMode parse_ood_mode(const std::string& name);

struct OodSpec {
  OodMode mode = OodMode::kShifted;
  double magnitude = 8.0;
  std::size_t samples = 1000;
};

/// Isotropic Gaussian mixture. Centers are uniform in
/// [-center_scale, center_scale]^dim; every cluster owns an RNG stream.
struct MixtureSpec {
  std::size_t cluster_count = 10;
  std::size_t dim = 32;
  std::size_t samples_per_cluster = 200;
  double center_scale = 2.0;
  double within_std = 1.0;
  std::uint64_t seed = 0;
  OodSpec ood;
  /// Extra per-cluster ID draws returned separately as a holdout set.
  std::size_t holdout_per_cluster = 0;
};

struct SyntheticData {
  EmbeddingMatrix id;
  EmbeddingMatrix ood;
  LabelVector id_labels;
  /// Set only when holdout_per_cluster > 0.
  std::optional<EmbeddingMatrix> id_holdout;
  std::optional<LabelVector> holdout_labels;
  /// cluster_count x dim.
  Eigen::MatrixXd centers;
};

SyntheticData generate(const MixtureSpec& spec);

}  // namespace ood
