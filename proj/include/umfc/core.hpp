// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_CORE_HPP
#define UMFC_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "umfc/error.hpp"

namespace umfc {

using Vector = std::vector<double>;

// Norms below this are treated as having no direction.
inline constexpr double kDegenerateNorm = 1e-12;

// Dense row-major matrix of doubles. Files store 32-bit floats; everything in
// memory is 64-bit so long accumulations stay exact enough for the
// running-mean equivalence checks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& values() const noexcept { return data_; }

  void append_row(std::span<const double> r);
  void set_row(std::size_t i, std::span<const double> r);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// N feature vectors plus optional per-row labels. A label of -1 inside a
// present label vector marks that single row as unlabeled.
struct EmbeddingMatrix {
  Matrix data;
  std::vector<std::string> ids;
  std::optional<std::vector<int>> class_labels;
  std::optional<std::vector<int>> domain_labels;

  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(Matrix m);

  std::size_t rows() const noexcept { return data.rows(); }
  std::size_t dim() const noexcept { return data.cols(); }

  // Throws NonFinite / LabelCountMismatch / InvalidArgument.
  void validate() const;

  EmbeddingMatrix subset(std::span<const std::size_t> indices) const;
};

struct TextBank {
  std::vector<std::string> names;
  Matrix features;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }

  // K >= 2, unique names, finite features, names.size() == K.
  void validate() const;
};

class Temperature {
 public:
  explicit Temperature(double tau);
  double value() const noexcept { return tau_; }

 private:
  double tau_;
};

enum PredictionFlag : std::uint32_t {
  kFlagNone = 0,
  kFlagDegenerate = 1u << 0,
  kFlagUncalibrated = 1u << 1,
};

struct Prediction {
  Vector probs;
  int label = 0;
  int cluster = -1;
  std::uint32_t flags = kFlagNone;
};

// Structure-of-arrays batch of predictions; probs is N x K row-major.
struct Predictions {
  std::size_t classes = 0;
  std::vector<double> probs;
  std::vector<int> labels;
  std::vector<int> clusters;
  std::vector<std::uint32_t> flags;

  Predictions() = default;
  Predictions(std::size_t n, std::size_t k);

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> probs_row(std::size_t i) const noexcept {
    return {probs.data() + i * classes, classes};
  }
  std::span<double> probs_row(std::size_t i) noexcept { return {probs.data() + i * classes, classes}; }
  void set(std::size_t i, const Prediction& p);
  Prediction at(std::size_t i) const;
  void append(const Predictions& other);
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double l2_norm(std::span<const double> v) noexcept;
bool all_finite(std::span<const double> v) noexcept;

Vector l2_normalize(std::span<const double> v);
void normalize_rows(Matrix& m);
double cosine_sim(std::span<const double> a, std::span<const double> b);

// Mean over the selected rows (all rows when no selector). Indices are sorted
// before the sequential reduction so the result does not depend on their order.
Vector mean_rows(const Matrix& m, std::optional<std::span<const std::size_t>> selector = std::nullopt);

Vector softmax_temp(std::span<const double> logits, Temperature tau);

// Index of the maximum element; the lowest index wins ties.
std::size_t argmax(std::span<const double> v) noexcept;

}  // namespace umfc

#endif  // UMFC_CORE_HPP
