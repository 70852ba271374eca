#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "ood/io.hpp"

namespace ood {

/// (a.b) / (|a||b|), clamped to [-1, 1]. Throws ZeroNorm when either norm is
/// below 1e-12 and DimMismatch when the lengths differ.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const float> a, std::span<const float> b);

inline constexpr double kMinNorm = 1e-12;

/// How many principal axes to keep. A variance fraction picks the smallest
/// count whose cumulative explained variance reaches that share of the total;
/// max_components caps either mode.
struct PcaTarget {
  std::optional<std::size_t> components;
  double variance_fraction = 0.95;
  std::size_t max_components = 128;

  static PcaTarget fixed(std::size_t p) { return {p, 1.0, p}; }
  static PcaTarget fraction(double f, std::size_t cap = 128) { return {std::nullopt, f, cap}; }
};

struct PcaModel {
  Eigen::VectorXd mean;                // d
  Eigen::MatrixXd components;          // p x d, orthonormal rows
  Eigen::VectorXd explained_variance;  // p, non-increasing

  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(components.rows()); }

  /// Rows of X (n x d) projected to n x p.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const;
  /// Maps n x p coordinates back to the input space.
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& coords) const;
};

PcaModel fit_pca(const Eigen::MatrixXd& rows, const PcaTarget& target);
PcaModel fit_pca(const EmbeddingMatrix& rows, const PcaTarget& target);

EmbeddingMatrix pca_transform(const PcaModel& model, const EmbeddingMatrix& rows);

/// Gaussian summary of one cluster. The ridge-regularized covariance
/// S + lambda*I is factored once at construction; queries reuse the factor.
class ClusterGaussian {
 public:
  ClusterGaussian(Eigen::VectorXd centroid, Eigen::MatrixXd covariance, double ridge_scale,
                  std::size_t member_count);

  const Eigen::VectorXd& centroid() const { return centroid_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  double ridge_scale() const { return ridge_scale_; }
  double ridge() const { return ridge_; }
  std::size_t member_count() const { return member_count_; }
  std::size_t dim() const { return static_cast<std::size_t>(centroid_.size()); }
  /// Lower-triangular L with L L^T = S + lambda*I.
  const Eigen::MatrixXd& factor() const { return factor_; }

  /// Same centroid and membership, covariance replaced (small-cluster fallback).
  ClusterGaussian with_covariance(const Eigen::MatrixXd& covariance) const;

 private:
  Eigen::VectorXd centroid_;
  Eigen::MatrixXd covariance_;
  double ridge_scale_;
  double ridge_;
  std::size_t member_count_;
  Eigen::MatrixXd factor_;
};

/// lambda = ridge_scale * trace(S) / p, or ridge_scale when the trace is zero.
double ridge_for(const Eigen::MatrixXd& covariance, double ridge_scale);

/// Column mean and unbiased sample covariance (zero for a single row).
ClusterGaussian fit_gaussian(const Eigen::MatrixXd& rows, double ridge_scale);
ClusterGaussian fit_gaussian(const EmbeddingMatrix& rows, double ridge_scale);

/// sqrt((x - mu)^T (S + lambda*I)^-1 (x - mu)) via one triangular solve.
double mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& x, const ClusterGaussian& g);

}  // namespace ood
