#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace ood {

/// 2N views where rows 2t and 2t+1 are the two augmentations of sample t.
class ContrastiveBatch {
 public:
  ContrastiveBatch(Eigen::MatrixXd embeddings, double temperature);

  const Eigen::MatrixXd& embeddings() const { return embeddings_; }
  double temperature() const { return temperature_; }
  std::size_t batch_size() const { return static_cast<std::size_t>(embeddings_.rows()) / 2; }
  std::size_t view_count() const { return static_cast<std::size_t>(embeddings_.rows()); }

  /// Cosine similarity between views i and j.
  double similarity(std::size_t i, std::size_t j) const;

 private:
  Eigen::MatrixXd embeddings_;
  Eigen::MatrixXd unit_rows_;
  double temperature_;
};

/// -log( exp(s_ij / t) / sum_{k != i} exp(s_ik / t) ), evaluated as
/// log-sum-exp with the maximum logit subtracted.
double info_nce_pair_loss(const ContrastiveBatch& batch, std::size_t i, std::size_t j);

/// Mean pair loss over all 2N ordered positive pairs (2t, 2t+1) and (2t+1, 2t).
double info_nce_batch_loss(const ContrastiveBatch& batch);

}  // namespace ood
