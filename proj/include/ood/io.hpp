#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ood {

/// Row-major n x d matrix of 32-bit sample embeddings. Construction
/// validates shape and finiteness, so every instance is usable as-is.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

  /// Rounds each entry to float.
  static EmbeddingMatrix from_eigen(const Eigen::MatrixXd& m);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  float operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  const std::vector<float>& values() const noexcept { return values_; }

  /// Widened copy used by the numerical kernels.
  Eigen::MatrixXd to_eigen() const;

  /// Rows selected by index, in the given order.
  EmbeddingMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<float> values_;
};

/// Non-negative integer per sample: OOD flags (0/1) or cluster ids.
using LabelVector = std::vector<std::uint32_t>;

// OODE: "OODE" | u32 version=1 | u64 n | u64 d | n*d f32, all little-endian.
inline constexpr std::size_t kHeaderBytes = 24;
inline constexpr std::uint32_t kFormatVersion = 1;

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

LabelVector load_labels(const std::filesystem::path& path);
void save_labels(const LabelVector& labels, const std::filesystem::path& path);

/// Throws LengthMismatch unless labels.size() == expected.
void check_label_length(const LabelVector& labels, std::size_t expected);

/// CSV export, one row per line, shortest round-trip float formatting.
void save_embeddings_csv(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

}  // namespace ood
