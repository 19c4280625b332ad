// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_ENGINE_HPP
#define UMFC_ENGINE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "umfc/calib.hpp"
#include "umfc/clustering.hpp"
#include "umfc/core.hpp"

namespace umfc {

enum class UpdateMode : std::uint32_t { Memory = 0, Ema = 1 };

std::string to_string(UpdateMode mode);
UpdateMode parse_update_mode(const std::string& s);

struct EngineConfig {
  std::size_t clusters = 6;
  double tau = 0.01;
  double eta = 0.1;
  UpdateMode mode = UpdateMode::Memory;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  double tol = 1e-4;
  bool normalize_input = true;
  bool normalize_shifts = false;
  // Use the additive prototype update c <- c + eta * c' instead of the convex EMA.
  bool ema_additive = false;

  void validate() const;
  KMeansOptions kmeans() const { return {clusters, seed, max_iters, tol, true}; }
  TfcOptions tfc() const { return {normalize_shifts}; }
};

// Applies the ingestion normalization of `cfg` (row L2-normalization when
// normalize_input is set).
Matrix ingest_features(const Matrix& raw, const EngineConfig& cfg);
TextBank ingest_bank(const TextBank& raw, const EngineConfig& cfg);

struct FitResult {
  CalibrationState state;
  ClusterModel model;
  CalibratedTextBank bank;
  Assignment assignment;
};

// Clusters the (unlabeled) training rows and derives the calibration state.
// The global mean is the mean over all rows; cluster means are the centroids.
FitResult fit_unsupervised(const EmbeddingMatrix& train, const TextBank& bank, const EngineConfig& cfg);

// Nearest-prototype assignment, image calibration, then classification. When
// the feature coincides with its cluster mean, the plain normalized feature is
// classified instead and kFlagDegenerate is set.
Prediction apply_state(const CalibrationState& state, const ClusterModel& model, std::span<const double> f,
                       const CalibratedTextBank& bank, const EngineConfig& cfg);

// Batch form of apply_state over every row of `features`.
Predictions apply_state_all(const CalibrationState& state, const ClusterModel& model, const Matrix& features,
                            const CalibratedTextBank& bank, const EngineConfig& cfg);

struct TransduceResult {
  Predictions predictions;
  FitResult fit;
};

TransduceResult transduce(const EmbeddingMatrix& test, const TextBank& bank, const EngineConfig& cfg);

// Uncalibrated baseline: normalized features against the normalized bank.
Predictions zero_shot(const EmbeddingMatrix& test, const TextBank& bank, const EngineConfig& cfg);

struct StreamState {
  EngineConfig config;
  std::optional<ClusterModel> model;  // prototypes; empty until bootstrapped
  Matrix running_sums;                // memory mode only, M x D
  std::vector<std::uint64_t> running_counts;
  Vector global_sum;                  // memory mode only
  std::uint64_t global_count = 0;
  CalibrationState calib;
  Matrix bootstrap_buffer;            // rows held until M samples exist
  std::uint64_t batches_seen = 0;
  std::uint64_t samples_seen = 0;

  bool bootstrapped() const noexcept { return model.has_value(); }
  friend bool operator==(const StreamState&, const StreamState&);
};

StreamState stream_init(const EngineConfig& cfg);

// One test-time adaptation step over `batch`; updates `state` in place.
Predictions stream_step(StreamState& state, const EmbeddingMatrix& batch, const TextBank& bank);

// Seeds a memory-mode (or EMA) stream from a completed fit, so a fitted
// calibration can be persisted and later continued as a stream.
StreamState stream_from_fit(const FitResult& fit, const EmbeddingMatrix& train, const EngineConfig& cfg);

// The calibrated text bank implied by the state's current shifts.
CalibratedTextBank stream_calibrated_bank(const StreamState& state, const TextBank& bank);

// Predicts rows with a frozen state (no statistics update).
Predictions stream_predict(const StreamState& state, const EmbeddingMatrix& test, const TextBank& bank,
                           std::optional<double> tau_override = std::nullopt);

}  // namespace umfc

#endif  // UMFC_ENGINE_HPP
