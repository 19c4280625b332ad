// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_CALIB_HPP
#define UMFC_CALIB_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "umfc/core.hpp"

namespace umfc {

// Per-cluster image means, the global mean, and the text shifts derived from
// them (shift_i = mean_i - global_mean).
struct CalibrationState {
  Matrix cluster_means;  // M x D
  Vector global_mean;    // D
  Matrix text_shifts;    // M x D

  std::size_t clusters() const noexcept { return cluster_means.rows(); }
  std::size_t dim() const noexcept { return cluster_means.cols(); }
};

CalibrationState make_calibration_state(Matrix cluster_means, Vector global_mean);

// Class text vectors after domain-shift removal. Rows are averages of unit
// vectors and are deliberately not renormalized.
struct CalibratedTextBank {
  std::vector<std::string> names;
  Matrix features;
  // Clusters whose shift made a class term degenerate, one entry per skip.
  std::size_t skipped_terms = 0;

  std::size_t size() const noexcept { return features.rows(); }
};

// (f - mu) / ||f - mu||; DegenerateFeature when f sits on mu.
Vector ifc_calibrate(std::span<const double> f, std::span<const double> mu);

Matrix compute_text_shifts(const Matrix& cluster_means, std::span<const double> global_mean);

struct TfcOptions {
  // Subtract unit-length shift directions instead of the raw shifts.
  bool normalize_shifts = false;
};

struct TfcResult {
  Vector feature;
  std::size_t skipped = 0;
};

// Mean over clusters of normalize(t - shift_i). Degenerate terms are skipped
// and the divisor shrinks with them; AllShiftsDegenerate if none survive.
TfcResult tfc_calibrate(std::span<const double> t, const Matrix& shifts, const TfcOptions& options = {});

CalibratedTextBank calibrate_bank(const TextBank& bank, const Matrix& shifts, const TfcOptions& options = {});

// Plain row-normalized bank, used for zero-shot and uncalibrated paths.
CalibratedTextBank normalized_bank(const TextBank& bank);

// logits_j = cos(f, t'_j); probs = softmax(logits / tau).
Prediction classify(std::span<const double> f_cal, const CalibratedTextBank& bank, Temperature tau);

// Scores every row of `features` against `bank` with one matrix product and
// writes probabilities and labels into `out` rows [offset, offset + rows).
// Rows of `features` must be unit length (or the caller accepts logits that
// are dot products rather than cosines).
void classify_rows(const Matrix& features, const CalibratedTextBank& bank, Temperature tau, Predictions& out,
                   std::size_t offset = 0);

}  // namespace umfc

#endif  // UMFC_CALIB_HPP
