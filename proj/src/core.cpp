// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include "umfc/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace umfc {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::DegenerateFeature: return "DegenerateFeature";
    case ErrorCode::AllShiftsDegenerate: return "AllShiftsDegenerate";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::WrongPayloadKind: return "WrongPayloadKind";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFinitePayload: return "NonFinitePayload";
    case ErrorCode::LabelCountMismatch: return "LabelCountMismatch";
    case ErrorCode::NameCountMismatch: return "NameCountMismatch";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::MalformedFile: return "MalformedFile";
  }
  return "Unknown";
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Matrix::append_row(std::span<const double> r) {
  if (rows_ == 0 && cols_ == 0) cols_ = r.size();
  if (r.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "row has wrong dimension");
  data_.insert(data_.end(), r.begin(), r.end());
  ++rows_;
}

void Matrix::set_row(std::size_t i, std::span<const double> r) {
  if (r.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "row has wrong dimension");
  std::copy(r.begin(), r.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
}

EmbeddingMatrix::EmbeddingMatrix(Matrix m) : data(std::move(m)) {
  ids.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) ids.push_back(std::to_string(i));
}

void EmbeddingMatrix::validate() const {
  if (ids.size() != rows()) throw Error(ErrorCode::LabelCountMismatch, "id count differs from row count");
  if (class_labels && class_labels->size() != rows())
    throw Error(ErrorCode::LabelCountMismatch, "class label count differs from row count");
  if (domain_labels && domain_labels->size() != rows())
    throw Error(ErrorCode::LabelCountMismatch, "domain label count differs from row count");
  if (rows() > 0 && dim() == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
  if (!all_finite(data.values())) throw Error(ErrorCode::NonFinite, "embedding contains NaN or Inf");
}

EmbeddingMatrix EmbeddingMatrix::subset(std::span<const std::size_t> indices) const {
  EmbeddingMatrix out;
  out.data = Matrix(indices.size(), dim());
  if (class_labels) out.class_labels.emplace();
  if (domain_labels) out.domain_labels.emplace();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= rows()) throw Error(ErrorCode::InvalidArgument, "subset index out of range");
    out.data.set_row(k, data.row(i));
    out.ids.push_back(ids[i]);
    if (class_labels) out.class_labels->push_back((*class_labels)[i]);
    if (domain_labels) out.domain_labels->push_back((*domain_labels)[i]);
  }
  return out;
}

void TextBank::validate() const {
  if (size() < 2) throw Error(ErrorCode::InvalidArgument, "text bank needs at least 2 classes");
  if (names.size() != size())
    throw Error(ErrorCode::NameCountMismatch,
                std::to_string(names.size()) + " names for " + std::to_string(size()) + " rows");
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw Error(ErrorCode::DuplicateName, "duplicate class name '" + n + "'");
  }
  if (!all_finite(features.values())) throw Error(ErrorCode::NonFinite, "text bank contains NaN or Inf");
}

Temperature::Temperature(double tau) : tau_(tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive and finite");
}

Predictions::Predictions(std::size_t n, std::size_t k)
    : classes(k), probs(n * k, 0.0), labels(n, 0), clusters(n, -1), flags(n, kFlagNone) {}

void Predictions::set(std::size_t i, const Prediction& p) {
  std::copy(p.probs.begin(), p.probs.end(), probs_row(i).begin());
  labels[i] = p.label;
  clusters[i] = p.cluster;
  flags[i] = p.flags;
}

Prediction Predictions::at(std::size_t i) const {
  const auto row = probs_row(i);
  return Prediction{Vector(row.begin(), row.end()), labels[i], clusters[i], flags[i]};
}

void Predictions::append(const Predictions& other) {
  if (size() == 0) classes = other.classes;
  if (other.size() > 0 && other.classes != classes)
    throw Error(ErrorCode::DimensionMismatch, "appending predictions with a different class count");
  probs.insert(probs.end(), other.probs.begin(), other.probs.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  clusters.insert(clusters.end(), other.clusters.begin(), other.clusters.end());
  flags.insert(flags.end(), other.flags.begin(), other.flags.end());
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector l2_normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n >= kDegenerateNorm)) throw Error(ErrorCode::DegenerateVector, "cannot normalize a zero-length vector");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

void normalize_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    const double n = l2_norm(r);
    if (!(n >= kDegenerateNorm))
      throw Error(ErrorCode::DegenerateVector, "row " + std::to_string(i) + " has zero length");
    for (double& x : r) x /= n;
  }
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with different lengths");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na >= kDegenerateNorm) || !(nb >= kDegenerateNorm))
    throw Error(ErrorCode::DegenerateVector, "cosine similarity with a zero-length vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vector mean_rows(const Matrix& m, std::optional<std::span<const std::size_t>> selector) {
  Vector sum(m.cols(), 0.0);
  std::size_t count = 0;
  if (selector) {
    if (selector->empty()) throw Error(ErrorCode::EmptySelection, "mean over an empty selection");
    std::vector<std::size_t> idx(selector->begin(), selector->end());
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) {
      if (i >= m.rows()) throw Error(ErrorCode::InvalidArgument, "selector index out of range");
      const auto r = m.row(i);
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += r[j];
    }
    count = idx.size();
  } else {
    if (m.rows() == 0) throw Error(ErrorCode::EmptySelection, "mean of a matrix with no rows");
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto r = m.row(i);
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += r[j];
    }
    count = m.rows();
  }
  const double n = static_cast<double>(count);
  for (double& x : sum) x /= n;
  return sum;
}

Vector softmax_temp(std::span<const double> logits, Temperature tau) {
  Vector out(logits.size());
  if (logits.empty()) return out;
  const double t = tau.value();
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - mx) / t);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

std::size_t argmax(std::span<const double> v) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace umfc
