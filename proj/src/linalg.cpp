#include "ood/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ood/error.hpp"

namespace ood {
namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    aa += x * x;
    bb += y * y;
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (na < kMinNorm || nb < kMinNorm) throw Error(ErrorCode::kZeroNorm, "cosine of a zero vector");
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  return cosine_impl(a, b);
}

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != input_dim()) {
    throw Error(ErrorCode::kDimMismatch, "model expects d=" + std::to_string(input_dim()) +
                                             ", got d=" + std::to_string(rows.cols()));
  }
  return (rows.rowwise() - mean.transpose()) * components.transpose();
}

Eigen::MatrixXd PcaModel::inverse_transform(const Eigen::MatrixXd& coords) const {
  if (static_cast<std::size_t>(coords.cols()) != output_dim()) {
    throw Error(ErrorCode::kDimMismatch, "model expects p=" + std::to_string(output_dim()) +
                                             ", got p=" + std::to_string(coords.cols()));
  }
  return (coords * components).rowwise() + mean.transpose();
}

PcaModel fit_pca(const Eigen::MatrixXd& rows, const PcaTarget& target) {
  const auto n = rows.rows();
  const auto d = rows.cols();
  if (n < 2) throw Error(ErrorCode::kTooFewSamples, "PCA needs at least 2 samples");
  if (!target.components && !(target.variance_fraction > 0.0 && target.variance_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "variance fraction must lie in (0, 1]");
  }
  if ((target.components && *target.components == 0) || target.max_components == 0) {
    throw Error(ErrorCode::kInvalidArgument, "component count must be positive");
  }

  PcaModel model;
  model.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateData, "covariance eigendecomposition failed");
  }
  // Eigen returns ascending order.
  Eigen::VectorXd values = solver.eigenvalues().reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = std::max(values[i], 0.0);

  const double total = values.sum();
  if (!(total >= 1e-20)) throw Error(ErrorCode::kDegenerateData, "total variance is zero");

  const auto limit = std::min<std::size_t>({static_cast<std::size_t>(n - 1),
                                            static_cast<std::size_t>(d), target.max_components});
  std::size_t p = limit;
  if (target.components) {
    p = std::min(*target.components, limit);
  } else {
    const double goal = target.variance_fraction * total * (1.0 - 1e-12);
    double cumulative = 0.0;
    for (std::size_t i = 0; i < limit; ++i) {
      cumulative += values[static_cast<Eigen::Index>(i)];
      if (cumulative >= goal) {
        p = i + 1;
        break;
      }
    }
  }

  const auto pp = static_cast<Eigen::Index>(p);
  model.components = vectors.leftCols(pp).transpose();
  model.explained_variance = values.head(pp);
  for (Eigen::Index r = 0; r < pp; ++r) {
    Eigen::Index largest = 0;
    model.components.row(r).cwiseAbs().maxCoeff(&largest);
    if (model.components(r, largest) < 0.0) model.components.row(r) *= -1.0;
  }
  return model;
}

PcaModel fit_pca(const EmbeddingMatrix& rows, const PcaTarget& target) {
  return fit_pca(rows.to_eigen(), target);
}

EmbeddingMatrix pca_transform(const PcaModel& model, const EmbeddingMatrix& rows) {
  return EmbeddingMatrix::from_eigen(model.transform(rows.to_eigen()));
}

double ridge_for(const Eigen::MatrixXd& covariance, double ridge_scale) {
  const double trace = covariance.trace();
  if (trace > 0.0) return ridge_scale * trace / static_cast<double>(covariance.rows());
  return ridge_scale;
}

ClusterGaussian::ClusterGaussian(Eigen::VectorXd centroid, Eigen::MatrixXd covariance,
                                 double ridge_scale, std::size_t member_count)
    : centroid_(std::move(centroid)),
      covariance_(std::move(covariance)),
      ridge_scale_(ridge_scale),
      ridge_(ridge_for(covariance_, ridge_scale)),
      member_count_(member_count) {
  if (covariance_.rows() != centroid_.size() || covariance_.cols() != centroid_.size()) {
    throw Error(ErrorCode::kDimMismatch, "covariance shape does not match centroid");
  }
  if (!(ridge_scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ridge scale must be positive");
  if (member_count_ == 0) throw Error(ErrorCode::kInvalidArgument, "cluster has no members");
  Eigen::MatrixXd regularized = covariance_;
  regularized.diagonal().array() += ridge_;
  Eigen::LLT<Eigen::MatrixXd> llt(regularized);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateData, "regularized covariance is not positive definite");
  }
  factor_ = llt.matrixL();
}

ClusterGaussian ClusterGaussian::with_covariance(const Eigen::MatrixXd& covariance) const {
  return {centroid_, covariance, ridge_scale_, member_count_};
}

ClusterGaussian fit_gaussian(const Eigen::MatrixXd& rows, double ridge_scale) {
  const auto n = rows.rows();
  if (n < 1) throw Error(ErrorCode::kTooFewSamples, "gaussian needs at least one row");
  Eigen::VectorXd centroid = rows.colwise().mean().transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(rows.cols(), rows.cols());
  if (n >= 2) {
    const Eigen::MatrixXd centered = rows.rowwise() - centroid.transpose();
    cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    // The product is symmetric up to rounding; make it exact.
    cov = 0.5 * (cov + cov.transpose()).eval();
  }
  return {std::move(centroid), std::move(cov), ridge_scale, static_cast<std::size_t>(n)};
}

ClusterGaussian fit_gaussian(const EmbeddingMatrix& rows, double ridge_scale) {
  return fit_gaussian(rows.to_eigen(), ridge_scale);
}

double mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& x, const ClusterGaussian& g) {
  if (static_cast<std::size_t>(x.size()) != g.dim()) {
    throw Error(ErrorCode::kDimMismatch, "point has dim " + std::to_string(x.size()) +
                                             ", cluster has dim " + std::to_string(g.dim()));
  }
  const Eigen::VectorXd y =
      g.factor().triangularView<Eigen::Lower>().solve(x - g.centroid());
  return y.norm();
}

}  // namespace ood
