// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include "umfc/calib.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "umfc/parallel.hpp"

namespace umfc {

CalibrationState make_calibration_state(Matrix cluster_means, Vector global_mean) {
  if (cluster_means.cols() != global_mean.size())
    throw Error(ErrorCode::DimensionMismatch, "global mean dimension differs from cluster means");
  CalibrationState s;
  s.text_shifts = compute_text_shifts(cluster_means, global_mean);
  s.cluster_means = std::move(cluster_means);
  s.global_mean = std::move(global_mean);
  return s;
}

Vector ifc_calibrate(std::span<const double> f, std::span<const double> mu) {
  if (f.size() != mu.size()) throw Error(ErrorCode::DimensionMismatch, "feature and mean dimensions differ");
  Vector r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i] - mu[i];
  const double n = l2_norm(r);
  if (!(n >= kDegenerateNorm)) throw Error(ErrorCode::DegenerateFeature, "feature coincides with its cluster mean");
  for (double& x : r) x /= n;
  return r;
}

Matrix compute_text_shifts(const Matrix& cluster_means, std::span<const double> global_mean) {
  if (cluster_means.cols() != global_mean.size())
    throw Error(ErrorCode::DimensionMismatch, "global mean dimension differs from cluster means");
  Matrix shifts(cluster_means.rows(), cluster_means.cols());
  for (std::size_t m = 0; m < cluster_means.rows(); ++m) {
    const auto src = cluster_means.row(m);
    auto dst = shifts.row(m);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = src[j] - global_mean[j];
  }
  return shifts;
}

TfcResult tfc_calibrate(std::span<const double> t, const Matrix& shifts, const TfcOptions& options) {
  if (shifts.rows() == 0) throw Error(ErrorCode::InvalidArgument, "text calibration needs at least one shift");
  if (shifts.cols() != t.size()) throw Error(ErrorCode::DimensionMismatch, "text and shift dimensions differ");
  TfcResult out;
  out.feature.assign(t.size(), 0.0);
  std::vector<Vector> terms;
  terms.reserve(shifts.rows());
  Vector term(t.size());
  for (std::size_t m = 0; m < shifts.rows(); ++m) {
    const auto s = shifts.row(m);
    double scale = 1.0;
    if (options.normalize_shifts) {
      const double sn = l2_norm(s);
      scale = sn >= kDegenerateNorm ? 1.0 / sn : 0.0;
    }
    for (std::size_t j = 0; j < t.size(); ++j) term[j] = t[j] - scale * s[j];
    const double n = l2_norm(term);
    if (!(n >= kDegenerateNorm)) {
      ++out.skipped;
      continue;
    }
    for (double& x : term) x /= n;
    terms.push_back(term);
  }
  // Canonical summation order, so relabeling clusters cannot change a bit.
  std::sort(terms.begin(), terms.end());
  for (const Vector& u : terms)
    for (std::size_t j = 0; j < t.size(); ++j) out.feature[j] += u[j];
  const std::size_t used = terms.size();
  if (used == 0) throw Error(ErrorCode::AllShiftsDegenerate, "every calibrated text term is degenerate");
  const double inv = static_cast<double>(used);
  for (double& x : out.feature) x /= inv;
  return out;
}

CalibratedTextBank calibrate_bank(const TextBank& bank, const Matrix& shifts, const TfcOptions& options) {
  CalibratedTextBank out;
  out.names = bank.names;
  out.features = Matrix(bank.size(), bank.dim());
  for (std::size_t k = 0; k < bank.size(); ++k) {
    TfcResult r = tfc_calibrate(bank.features.row(k), shifts, options);
    out.features.set_row(k, r.feature);
    out.skipped_terms += r.skipped;
  }
  return out;
}

CalibratedTextBank normalized_bank(const TextBank& bank) {
  CalibratedTextBank out;
  out.names = bank.names;
  out.features = bank.features;
  normalize_rows(out.features);
  return out;
}

Prediction classify(std::span<const double> f_cal, const CalibratedTextBank& bank, Temperature tau) {
  if (bank.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty text bank");
  Vector logits(bank.size());
  for (std::size_t k = 0; k < bank.size(); ++k) logits[k] = cosine_sim(f_cal, bank.features.row(k));
  Prediction p;
  p.probs = softmax_temp(logits, tau);
  p.label = static_cast<int>(argmax(p.probs));
  return p;
}

void classify_rows(const Matrix& features, const CalibratedTextBank& bank, Temperature tau, Predictions& out,
                   std::size_t offset) {
  const std::size_t n = features.rows();
  const std::size_t k = bank.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "empty text bank");
  if (out.classes != k) throw Error(ErrorCode::DimensionMismatch, "prediction buffer has the wrong class count");
  if (offset + n > out.size()) throw Error(ErrorCode::InvalidArgument, "prediction buffer too small");
  if (n == 0) return;
  if (features.cols() != bank.features.cols())
    throw Error(ErrorCode::DimensionMismatch, "feature and text dimensions differ");

  Matrix unit = bank.features;
  normalize_rows(unit);

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> f(features.data(), static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(features.cols()));
  Eigen::Map<const RowMajor> t(unit.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(unit.cols()));
  Eigen::Map<RowMajor> logits(out.probs.data() + offset * k, static_cast<Eigen::Index>(n),
                              static_cast<Eigen::Index>(k));
  logits.noalias() = f * t.transpose();

  const double inv_tau = 1.0 / tau.value();
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto row = out.probs_row(offset + i);
      double mx = -1.0;
      for (double& v : row) {
        v = std::clamp(v, -1.0, 1.0);
        mx = std::max(mx, v);
      }
      double total = 0.0;
      for (double& v : row) {
        v = std::exp((v - mx) * inv_tau);
        total += v;
      }
      for (double& v : row) v /= total;
      out.labels[offset + i] = static_cast<int>(argmax(row));
    }
  });
}

}  // namespace umfc
