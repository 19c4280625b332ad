// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include "umfc/engine.hpp"

#include <algorithm>
#include <cmath>

#include "umfc/parallel.hpp"

namespace umfc {

std::string to_string(UpdateMode mode) { return mode == UpdateMode::Memory ? "memory" : "ema"; }

UpdateMode parse_update_mode(const std::string& s) {
  if (s == "memory") return UpdateMode::Memory;
  if (s == "ema") return UpdateMode::Ema;
  throw Error(ErrorCode::InvalidArgument, "unknown update mode '" + s + "' (expected memory or ema)");
}

void EngineConfig::validate() const {
  if (clusters < 1) throw Error(ErrorCode::InvalidArgument, "cluster count must be at least 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be at least 1");
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in (0, 1]");
  if (!(tol >= 0.0) || !std::isfinite(tol)) throw Error(ErrorCode::InvalidArgument, "tol must be non-negative");
  Temperature{tau};
}

Matrix ingest_features(const Matrix& raw, const EngineConfig& cfg) {
  if (!all_finite(raw.values())) throw Error(ErrorCode::NonFinite, "features contain NaN or Inf");
  Matrix m = raw;
  if (cfg.normalize_input) normalize_rows(m);
  return m;
}

TextBank ingest_bank(const TextBank& raw, const EngineConfig& cfg) {
  raw.validate();
  TextBank b = raw;
  if (cfg.normalize_input) normalize_rows(b.features);
  return b;
}

namespace {

void check_dims(const EmbeddingMatrix& x, const TextBank& bank) {
  if (x.rows() > 0 && x.dim() != bank.dim())
    throw Error(ErrorCode::DimensionMismatch, "image dimension " + std::to_string(x.dim()) +
                                                  " differs from text dimension " + std::to_string(bank.dim()));
}

// IFC over every row against its assigned mean; degenerate rows fall back to
// the plain normalized feature and are flagged.
Matrix calibrate_rows(const Matrix& x, const Assignment& labels, const Matrix& means,
                      std::vector<std::uint32_t>& flags) {
  Matrix out(x.rows(), x.cols());
  flags.assign(x.rows(), kFlagNone);
  parallel_for(x.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto f = x.row(i);
      const auto mu = means.row(static_cast<std::size_t>(labels[i]));
      auto dst = out.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = f[j] - mu[j];
      double n = l2_norm(dst);
      if (!(n >= kDegenerateNorm)) {
        flags[i] = kFlagDegenerate;
        std::copy(f.begin(), f.end(), dst.begin());
        n = l2_norm(dst);
        if (!(n >= kDegenerateNorm))
          throw Error(ErrorCode::DegenerateVector, "row " + std::to_string(i) + " has zero length");
      }
      for (double& v : dst) v /= n;
    }
  }, 256);
  return out;
}

Predictions uncalibrated_predictions(const Matrix& x_ingested, const TextBank& bank_ingested, Temperature tau,
                                     std::uint32_t flag) {
  Matrix unit = x_ingested;
  normalize_rows(unit);
  Predictions p(unit.rows(), bank_ingested.size());
  classify_rows(unit, normalized_bank(bank_ingested), tau, p);
  std::fill(p.flags.begin(), p.flags.end(), flag);
  return p;
}

FitResult fit_ingested(const Matrix& x, const TextBank& b, const EngineConfig& cfg) {
  KMeansResult km = kmeans_fit(x, cfg.kmeans());
  FitResult out;
  out.state = make_calibration_state(km.model.centroids, mean_rows(x));
  out.bank = calibrate_bank(b, out.state.text_shifts, cfg.tfc());
  out.model = std::move(km.model);
  out.assignment = std::move(km.assignment);
  return out;
}

Predictions apply_ingested(const CalibrationState& state, const ClusterModel& model, const Matrix& x,
                           const CalibratedTextBank& bank, const EngineConfig& cfg) {
  Predictions p(x.rows(), bank.size());
  if (x.rows() == 0) return p;
  const Assignment labels = assign_all(model, x);
  const Matrix fc = calibrate_rows(x, labels, state.cluster_means, p.flags);
  const auto flags = p.flags;
  classify_rows(fc, bank, Temperature(cfg.tau), p);
  p.flags = flags;
  p.clusters = labels;
  return p;
}

}  // namespace

FitResult fit_unsupervised(const EmbeddingMatrix& train, const TextBank& bank, const EngineConfig& cfg) {
  cfg.validate();
  train.validate();
  check_dims(train, bank);
  return fit_ingested(ingest_features(train.data, cfg), ingest_bank(bank, cfg), cfg);
}

Prediction apply_state(const CalibrationState& state, const ClusterModel& model, std::span<const double> f,
                       const CalibratedTextBank& bank, const EngineConfig& cfg) {
  if (!all_finite(f)) throw Error(ErrorCode::NonFinite, "feature contains NaN or Inf");
  const Vector x = cfg.normalize_input ? l2_normalize(f) : Vector(f.begin(), f.end());
  const int l = assign_nearest(model, x);
  Prediction p;
  try {
    const Vector fc = ifc_calibrate(x, state.cluster_means.row(static_cast<std::size_t>(l)));
    p = classify(fc, bank, Temperature(cfg.tau));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateFeature) throw;
    p = classify(l2_normalize(x), bank, Temperature(cfg.tau));
    p.flags |= kFlagDegenerate;
  }
  p.cluster = l;
  return p;
}

Predictions apply_state_all(const CalibrationState& state, const ClusterModel& model, const Matrix& features,
                            const CalibratedTextBank& bank, const EngineConfig& cfg) {
  return apply_ingested(state, model, ingest_features(features, cfg), bank, cfg);
}

TransduceResult transduce(const EmbeddingMatrix& test, const TextBank& bank, const EngineConfig& cfg) {
  TransduceResult out;
  cfg.validate();
  test.validate();
  check_dims(test, bank);
  const Matrix x = ingest_features(test.data, cfg);
  out.fit = fit_ingested(x, ingest_bank(bank, cfg), cfg);
  out.predictions = apply_ingested(out.fit.state, out.fit.model, x, out.fit.bank, cfg);
  return out;
}

Predictions zero_shot(const EmbeddingMatrix& test, const TextBank& bank, const EngineConfig& cfg) {
  test.validate();
  check_dims(test, bank);
  const Matrix x = ingest_features(test.data, cfg);
  return uncalibrated_predictions(x, ingest_bank(bank, cfg), Temperature(cfg.tau), kFlagNone);
}

bool operator==(const StreamState& a, const StreamState& b) {
  const auto same_model = [](const std::optional<ClusterModel>& x, const std::optional<ClusterModel>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (x->centroids == y->centroids && x->counts == y->counts);
  };
  const EngineConfig& ca = a.config;
  const EngineConfig& cb = b.config;
  const bool same_cfg = ca.clusters == cb.clusters && ca.tau == cb.tau && ca.eta == cb.eta && ca.mode == cb.mode &&
                        ca.batch_size == cb.batch_size && ca.seed == cb.seed && ca.max_iters == cb.max_iters &&
                        ca.tol == cb.tol && ca.normalize_input == cb.normalize_input &&
                        ca.normalize_shifts == cb.normalize_shifts && ca.ema_additive == cb.ema_additive;
  return same_cfg && same_model(a.model, b.model) && a.running_sums == b.running_sums &&
         a.running_counts == b.running_counts && a.global_sum == b.global_sum && a.global_count == b.global_count &&
         a.calib.cluster_means == b.calib.cluster_means && a.calib.global_mean == b.calib.global_mean &&
         a.calib.text_shifts == b.calib.text_shifts && a.bootstrap_buffer == b.bootstrap_buffer &&
         a.batches_seen == b.batches_seen && a.samples_seen == b.samples_seen;
}

StreamState stream_init(const EngineConfig& cfg) {
  cfg.validate();
  StreamState s;
  s.config = cfg;
  if (cfg.mode == UpdateMode::Memory) s.running_counts.assign(cfg.clusters, 0);
  return s;
}

namespace {

void initialize_model(StreamState& s, Matrix prototypes) {
  const std::size_t m = prototypes.rows();
  const std::size_t d = prototypes.cols();
  s.model = ClusterModel{prototypes, std::vector<std::uint64_t>(m, 0)};
  s.calib = make_calibration_state(prototypes, mean_rows(prototypes));
  if (s.config.mode == UpdateMode::Memory) {
    s.running_sums = Matrix(m, d);
    s.running_counts.assign(m, 0);
    s.global_sum.assign(d, 0.0);
    s.global_count = 0;
  }
}

// Prototype, global-mean, and shift update for an assigned batch. Clusters
// with no samples in the batch keep both their prototype and their shift.
void absorb(StreamState& s, const Matrix& x, const Assignment& labels) {
  const EngineConfig& cfg = s.config;
  ClusterModel& model = *s.model;
  const std::size_t m_count = model.size();
  const BatchMeans bm = batch_cluster_means(x, labels, m_count);

  for (std::size_t m = 0; m < m_count; ++m) {
    if (!bm.present(m)) continue;
    model.counts[m] += bm.counts[m];
    auto proto = model.centroids.row(m);
    if (cfg.mode == UpdateMode::Memory) {
      auto sum = s.running_sums.row(m);
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += bm.sums[m][j];
      s.running_counts[m] += bm.counts[m];
      const double c = static_cast<double>(s.running_counts[m]);
      for (std::size_t j = 0; j < sum.size(); ++j) proto[j] = sum[j] / c;
    } else {
      const auto batch_mean = bm.means.row(m);
      for (std::size_t j = 0; j < proto.size(); ++j) {
        proto[j] = cfg.ema_additive ? proto[j] + cfg.eta * batch_mean[j]
                                    : (1.0 - cfg.eta) * proto[j] + cfg.eta * batch_mean[j];
      }
    }
  }

  if (cfg.mode == UpdateMode::Memory) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto r = x.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) s.global_sum[j] += r[j];
    }
    s.global_count += x.rows();
    const double c = static_cast<double>(s.global_count);
    s.calib.global_mean.resize(s.global_sum.size());
    for (std::size_t j = 0; j < s.global_sum.size(); ++j) s.calib.global_mean[j] = s.global_sum[j] / c;
  } else {
    s.calib.global_mean = mean_rows(model.centroids);
  }

  s.calib.cluster_means = model.centroids;
  for (std::size_t m = 0; m < m_count; ++m) {
    if (!bm.present(m)) continue;
    const auto mean = s.calib.cluster_means.row(m);
    auto shift = s.calib.text_shifts.row(m);
    for (std::size_t j = 0; j < shift.size(); ++j) shift[j] = mean[j] - s.calib.global_mean[j];
  }
}

}  // namespace

Predictions stream_step(StreamState& s, const EmbeddingMatrix& batch, const TextBank& bank) {
  const EngineConfig& cfg = s.config;
  batch.validate();
  if (batch.rows() == 0) throw Error(ErrorCode::InvalidArgument, "stream batch is empty");
  check_dims(batch, bank);
  if (s.model && batch.dim() != s.model->dim())
    throw Error(ErrorCode::DimensionMismatch, "batch dimension differs from the stream's prototypes");
  const Matrix x = ingest_features(batch.data, cfg);
  const TextBank b = ingest_bank(bank, cfg);
  const Temperature tau(cfg.tau);

  if (!s.model) {
    const bool first_batch_suffices = s.bootstrap_buffer.empty() && x.rows() >= cfg.clusters;
    if (first_batch_suffices) {
      KMeansResult km = kmeans_fit(x, cfg.kmeans());
      initialize_model(s, std::move(km.model.centroids));
    } else {
      for (std::size_t i = 0; i < x.rows(); ++i) s.bootstrap_buffer.append_row(x.row(i));
      Predictions p = uncalibrated_predictions(x, b, tau, kFlagUncalibrated);
      if (s.bootstrap_buffer.rows() >= cfg.clusters) {
        Matrix first(cfg.clusters, x.cols());
        for (std::size_t m = 0; m < cfg.clusters; ++m) first.set_row(m, s.bootstrap_buffer.row(m));
        initialize_model(s, std::move(first));
        const Matrix buffered = std::move(s.bootstrap_buffer);
        s.bootstrap_buffer = Matrix();
        absorb(s, buffered, assign_all(*s.model, buffered));
      }
      ++s.batches_seen;
      s.samples_seen += x.rows();
      return p;
    }
  }

  const Assignment labels = assign_all(*s.model, x);
  absorb(s, x, labels);
  const CalibratedTextBank cb = calibrate_bank(b, s.calib.text_shifts, cfg.tfc());

  Predictions p(x.rows(), b.size());
  const Matrix fc = calibrate_rows(x, labels, s.calib.cluster_means, p.flags);
  const auto flags = p.flags;
  classify_rows(fc, cb, tau, p);
  p.flags = flags;
  p.clusters = labels;
  ++s.batches_seen;
  s.samples_seen += x.rows();
  return p;
}

StreamState stream_from_fit(const FitResult& fit, const EmbeddingMatrix& train, const EngineConfig& cfg) {
  StreamState s = stream_init(cfg);
  s.model = fit.model;
  s.calib = fit.state;
  s.batches_seen = 1;
  s.samples_seen = train.rows();
  if (cfg.mode == UpdateMode::Memory) {
    const Matrix x = ingest_features(train.data, cfg);
    const BatchMeans bm = batch_cluster_means(x, fit.assignment, fit.model.size());
    s.running_sums = Matrix(fit.model.size(), x.cols());
    for (std::size_t m = 0; m < fit.model.size(); ++m) s.running_sums.set_row(m, bm.sums[m]);
    s.running_counts = bm.counts;
    s.global_sum.assign(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto r = x.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) s.global_sum[j] += r[j];
    }
    s.global_count = x.rows();
  }
  return s;
}

CalibratedTextBank stream_calibrated_bank(const StreamState& state, const TextBank& bank) {
  const TextBank b = ingest_bank(bank, state.config);
  if (!state.model) return normalized_bank(b);
  if (b.dim() != state.calib.dim())
    throw Error(ErrorCode::DimensionMismatch, "text dimension differs from the calibration state");
  return calibrate_bank(b, state.calib.text_shifts, state.config.tfc());
}

Predictions stream_predict(const StreamState& state, const EmbeddingMatrix& test, const TextBank& bank,
                           std::optional<double> tau_override) {
  test.validate();
  check_dims(test, bank);
  EngineConfig cfg = state.config;
  if (tau_override) cfg.tau = *tau_override;
  Temperature{cfg.tau};
  if (!state.model) {
    const Matrix x = ingest_features(test.data, cfg);
    return uncalibrated_predictions(x, ingest_bank(bank, cfg), Temperature(cfg.tau), kFlagUncalibrated);
  }
  return apply_state_all(state.calib, *state.model, test.data, stream_calibrated_bank(state, bank), cfg);
}

}  // namespace umfc
