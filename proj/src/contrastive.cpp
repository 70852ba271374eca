#include "ood/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ood/error.hpp"
#include "ood/linalg.hpp"

namespace ood {

ContrastiveBatch::ContrastiveBatch(Eigen::MatrixXd embeddings, double temperature)
    : embeddings_(std::move(embeddings)), temperature_(temperature) {
  const auto rows = embeddings_.rows();
  if (rows < 2 || rows % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "batch needs an even, non-zero number of views, got " + std::to_string(rows));
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  if (!embeddings_.allFinite()) throw Error(ErrorCode::kNonFiniteValue, "batch embeddings");
  unit_rows_ = embeddings_;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double norm = embeddings_.row(r).norm();
    if (norm < kMinNorm) throw Error(ErrorCode::kZeroNorm, "view " + std::to_string(r));
    unit_rows_.row(r) /= norm;
  }
}

double ContrastiveBatch::similarity(std::size_t i, std::size_t j) const {
  const double s = unit_rows_.row(static_cast<Eigen::Index>(i))
                       .dot(unit_rows_.row(static_cast<Eigen::Index>(j)));
  return std::clamp(s, -1.0, 1.0);
}

double info_nce_pair_loss(const ContrastiveBatch& batch, std::size_t i, std::size_t j) {
  const std::size_t views = batch.view_count();
  if (i >= views || j >= views) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "pair (" + std::to_string(i) + ", " + std::to_string(j) + ") with " +
                    std::to_string(views) + " views");
  }
  if (i == j) throw Error(ErrorCode::kSamePair, "anchor and positive are the same view");

  const double inv_t = 1.0 / batch.temperature();
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < views; ++k) {
    if (k != i) max_logit = std::max(max_logit, batch.similarity(i, k) * inv_t);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < views; ++k) {
    if (k != i) sum += std::exp(batch.similarity(i, k) * inv_t - max_logit);
  }
  const double positive = batch.similarity(i, j) * inv_t;
  // -positive + logsumexp, with the max folded out of both terms.
  const double loss = (max_logit - positive) + std::log(sum);
  return std::max(loss, 0.0);
}

double info_nce_batch_loss(const ContrastiveBatch& batch) {
  double total = 0.0;
  for (std::size_t t = 0; t < batch.batch_size(); ++t) {
    total += info_nce_pair_loss(batch, 2 * t, 2 * t + 1);
    total += info_nce_pair_loss(batch, 2 * t + 1, 2 * t);
  }
  return total / static_cast<double>(batch.view_count());
}

}  // namespace ood
