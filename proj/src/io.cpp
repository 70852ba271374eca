#include "ood/io.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

#include "ood/error.hpp"

namespace ood {
namespace {

constexpr std::array<char, 4> kEmbeddingMagic{'O', 'O', 'D', 'E'};
constexpr std::array<char, 4> kLabelMagic{'O', 'O', 'D', 'L'};

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
  using U = std::make_unsigned_t<T>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return static_cast<T>(bits);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

bool has_magic(const std::string& bytes, const std::array<char, 4>& magic) {
  return bytes.size() >= magic.size() && std::memcmp(bytes.data(), magic.data(), magic.size()) == 0;
}

bool is_csv(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv";
}

struct Header {
  std::uint64_t count;
  std::uint64_t width;
};

Header read_header(const std::string& bytes, std::size_t fields, const std::filesystem::path& path) {
  const std::size_t header_bytes = 8 + 8 * fields;
  if (bytes.size() < header_bytes) {
    throw Error(ErrorCode::kTruncatedFile, path.string() + ": header is incomplete");
  }
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kParseError,
                path.string() + ": unsupported format version " + std::to_string(version));
  }
  Header h{get_le<std::uint64_t>(bytes, 8), 1};
  if (fields == 2) h.width = get_le<std::uint64_t>(bytes, 16);
  return h;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const std::filesystem::path& path) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw Error(ErrorCode::kParseError, path.string() + ": line " + std::to_string(line + 1) +
                                            ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

// Splits CSV text into non-empty lines of comma-separated fields.
std::vector<std::vector<std::string_view>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string_view>> lines;
  while (!text.empty()) {
    auto eol = text.find('\n');
    auto line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    while (true) {
      auto comma = line.find(',');
      fields.push_back(line.substr(0, comma));
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    lines.push_back(std::move(fields));
  }
  return lines;
}

EmbeddingMatrix parse_embeddings_csv(const std::string& text, const std::filesystem::path& path) {
  auto lines = split_csv(text);
  if (lines.empty()) throw Error(ErrorCode::kEmptyMatrix, path.string() + ": no rows");
  const std::size_t cols = lines.front().size();
  std::vector<float> values;
  values.reserve(lines.size() * cols);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() != cols) {
      throw Error(ErrorCode::kParseError, path.string() + ": line " + std::to_string(i + 1) +
                                              " has " + std::to_string(lines[i].size()) +
                                              " fields, expected " + std::to_string(cols));
    }
    for (auto field : lines[i]) values.push_back(parse_number<float>(field, i, path));
  }
  return EmbeddingMatrix(lines.size(), cols, std::move(values));
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows_ == 0 || cols_ == 0) {
    throw Error(ErrorCode::kEmptyMatrix, "matrix must have at least one row and one column");
  }
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kLengthMismatch, "expected " + std::to_string(rows_ * cols_) +
                                                " values, got " + std::to_string(values_.size()));
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw Error(ErrorCode::kNonFiniteValue, "row " + std::to_string(k / cols_) + ", col " +
                                                  std::to_string(k % cols_));
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::from_eigen(const Eigen::MatrixXd& m) {
  std::vector<float> values(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      values[static_cast<std::size_t>(i * m.cols() + j)] = static_cast<float>(m(i, j));
    }
  }
  return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), std::move(values)};
}

Eigen::MatrixXd EmbeddingMatrix::to_eigen() const {
  using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> view(values_.data(), static_cast<Eigen::Index>(rows_),
                                  static_cast<Eigen::Index>(cols_));
  return view.cast<double>();
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<float> values;
  values.reserve(indices.size() * cols_);
  for (auto i : indices) {
    if (i >= rows_) throw Error(ErrorCode::kIndexOutOfRange, "row " + std::to_string(i));
    auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
  }
  return {indices.size(), cols_, std::move(values)};
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (!has_magic(bytes, kEmbeddingMagic)) {
    if (is_csv(path)) return parse_embeddings_csv(bytes, path);
    throw Error(ErrorCode::kBadMagic, path.string() + ": not an OODE file");
  }
  const Header h = read_header(bytes, 2, path);
  if (h.count == 0 || h.width == 0) {
    throw Error(ErrorCode::kEmptyMatrix, path.string() + ": header declares an empty matrix");
  }
  // Checked before allocation so a corrupt header cannot request huge buffers.
  const std::size_t payload = bytes.size() - kHeaderBytes;
  if (h.width > payload / 4 || h.count > payload / 4 / h.width || h.count * h.width * 4 != payload) {
    throw Error(ErrorCode::kTruncatedFile,
                path.string() + ": header promises " + std::to_string(h.count) + "x" +
                    std::to_string(h.width) + " floats, file holds " + std::to_string(payload) +
                    " data bytes");
  }
  std::vector<float> values(h.count * h.width);
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, kHeaderBytes + 4 * k));
  }
  return EmbeddingMatrix(h.count, h.width, std::move(values));
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::string bytes;
  bytes.reserve(kHeaderBytes + 4 * matrix.values().size());
  bytes.append(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  put_le<std::uint32_t>(bytes, kFormatVersion);
  put_le<std::uint64_t>(bytes, matrix.rows());
  put_le<std::uint64_t>(bytes, matrix.cols());
  for (float v : matrix.values()) put_le<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(v));
  write_file(path, bytes);
}

void save_embeddings_csv(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::string text;
  char buf[32];
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      if (j) text.push_back(',');
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, matrix(i, j));
      text.append(buf, end);
    }
    text.push_back('\n');
  }
  write_file(path, text);
}

LabelVector load_labels(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.empty()) throw Error(ErrorCode::kEmptyVector, path.string() + ": empty file");
  if (!has_magic(bytes, kLabelMagic)) {
    if (!is_csv(path)) throw Error(ErrorCode::kBadMagic, path.string() + ": not an OODL file");
    LabelVector labels;
    auto lines = split_csv(bytes);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      for (auto field : lines[i]) labels.push_back(parse_number<std::uint32_t>(field, i, path));
    }
    if (labels.empty()) throw Error(ErrorCode::kEmptyVector, path.string() + ": no labels");
    return labels;
  }
  const Header h = read_header(bytes, 1, path);
  if (h.count == 0) throw Error(ErrorCode::kEmptyVector, path.string() + ": zero labels");
  const std::size_t payload = bytes.size() - 16;
  if (h.count > payload / 4 || h.count * 4 != payload) {
    throw Error(ErrorCode::kTruncatedFile, path.string() + ": header promises " +
                                               std::to_string(h.count) + " labels, file holds " +
                                               std::to_string(payload) + " data bytes");
  }
  LabelVector labels(h.count);
  for (std::size_t k = 0; k < labels.size(); ++k) labels[k] = get_le<std::uint32_t>(bytes, 16 + 4 * k);
  return labels;
}

void save_labels(const LabelVector& labels, const std::filesystem::path& path) {
  if (labels.empty()) throw Error(ErrorCode::kEmptyVector, "refusing to save zero labels");
  std::string bytes;
  bytes.append(kLabelMagic.data(), kLabelMagic.size());
  put_le<std::uint32_t>(bytes, kFormatVersion);
  put_le<std::uint64_t>(bytes, labels.size());
  for (auto v : labels) put_le<std::uint32_t>(bytes, v);
  write_file(path, bytes);
}

void check_label_length(const LabelVector& labels, std::size_t expected) {
  if (labels.size() != expected) {
    throw Error(ErrorCode::kLengthMismatch, "label count " + std::to_string(labels.size()) +
                                                " != sample count " + std::to_string(expected));
  }
}

}  // namespace ood
