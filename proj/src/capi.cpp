// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include "umfc/umfc.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <new>
#include <string>

#include "umfc/diagnostics.hpp"
#include "umfc/engine.hpp"
#include "umfc/io.hpp"
#include "umfc/synth.hpp"

struct umfc_matrix {
  umfc::EmbeddingMatrix m;
};

struct umfc_bank {
  umfc::TextBank b;
};

struct umfc_predictions {
  umfc::Predictions p;
};

struct umfc_stream {
  umfc::StreamState s;
};

namespace {

thread_local std::string g_last_error;

umfc_status to_status(umfc::ErrorCode code) {
  using umfc::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return UMFC_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return UMFC_ERR_DIMENSION_MISMATCH;
    case ErrorCode::NonFinite: return UMFC_ERR_NON_FINITE;
    case ErrorCode::DegenerateVector: return UMFC_ERR_DEGENERATE_VECTOR;
    case ErrorCode::DegenerateFeature: return UMFC_ERR_DEGENERATE_FEATURE;
    case ErrorCode::AllShiftsDegenerate: return UMFC_ERR_ALL_SHIFTS_DEGENERATE;
    case ErrorCode::EmptySelection: return UMFC_ERR_EMPTY_SELECTION;
    case ErrorCode::TooFewSamples: return UMFC_ERR_TOO_FEW_SAMPLES;
    case ErrorCode::MissingLabels: return UMFC_ERR_MISSING_LABELS;
    case ErrorCode::EmptyDomain: return UMFC_ERR_EMPTY_DOMAIN;
    case ErrorCode::DimensionTooSmall: return UMFC_ERR_DIMENSION_TOO_SMALL;
    case ErrorCode::Io: return UMFC_ERR_IO;
    case ErrorCode::BadMagic: return UMFC_ERR_BAD_MAGIC;
    case ErrorCode::UnsupportedVersion: return UMFC_ERR_UNSUPPORTED_VERSION;
    case ErrorCode::WrongPayloadKind: return UMFC_ERR_WRONG_PAYLOAD_KIND;
    case ErrorCode::TruncatedPayload: return UMFC_ERR_TRUNCATED_PAYLOAD;
    case ErrorCode::NonFinitePayload: return UMFC_ERR_NON_FINITE_PAYLOAD;
    case ErrorCode::LabelCountMismatch: return UMFC_ERR_LABEL_COUNT_MISMATCH;
    case ErrorCode::NameCountMismatch: return UMFC_ERR_NAME_COUNT_MISMATCH;
    case ErrorCode::DuplicateName: return UMFC_ERR_DUPLICATE_NAME;
    case ErrorCode::MalformedFile: return UMFC_ERR_MALFORMED_FILE;
  }
  return UMFC_ERR_INTERNAL;
}

template <class F>
umfc_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return UMFC_OK;
  } catch (const umfc::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return UMFC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return UMFC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return UMFC_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw umfc::Error(umfc::ErrorCode::InvalidArgument, what);
}

umfc::EngineConfig to_config(const umfc_config* c) {
  umfc::EngineConfig cfg;
  if (!c) return cfg;
  cfg.clusters = c->clusters;
  cfg.tau = c->tau;
  cfg.eta = c->eta;
  if (c->mode != UMFC_MODE_MEMORY && c->mode != UMFC_MODE_EMA)
    throw umfc::Error(umfc::ErrorCode::InvalidArgument, "unknown update mode");
  cfg.mode = c->mode == UMFC_MODE_EMA ? umfc::UpdateMode::Ema : umfc::UpdateMode::Memory;
  cfg.batch_size = c->batch_size;
  cfg.seed = c->seed;
  cfg.max_iters = c->max_iters;
  cfg.tol = c->tol;
  cfg.normalize_input = c->normalize_input != 0;
  cfg.normalize_shifts = c->normalize_shifts != 0;
  cfg.ema_additive = c->ema_additive != 0;
  cfg.validate();
  return cfg;
}

void from_config(const umfc::EngineConfig& cfg, umfc_config* c) {
  c->clusters = cfg.clusters;
  c->tau = cfg.tau;
  c->eta = cfg.eta;
  c->mode = cfg.mode == umfc::UpdateMode::Ema ? UMFC_MODE_EMA : UMFC_MODE_MEMORY;
  c->batch_size = cfg.batch_size;
  c->seed = cfg.seed;
  c->max_iters = cfg.max_iters;
  c->tol = cfg.tol;
  c->normalize_input = cfg.normalize_input ? 1 : 0;
  c->normalize_shifts = cfg.normalize_shifts ? 1 : 0;
  c->ema_additive = cfg.ema_additive ? 1 : 0;
}

umfc::TextBank to_bank(const umfc::CalibratedTextBank& cb) {
  umfc::TextBank b;
  b.names = cb.names;
  b.features = cb.features;
  return b;
}

const double* state_row(const umfc_stream* s, const umfc::Matrix& m, size_t i) {
  if (!s || !s->s.bootstrapped() || i >= m.rows()) return nullptr;
  return m.row(i).data();
}

}  // namespace

extern "C" {

const char* umfc_last_error(void) { return g_last_error.c_str(); }

const char* umfc_status_name(umfc_status status) {
  switch (status) {
    case UMFC_OK: return "Ok";
    case UMFC_ERR_INTERNAL: return "Internal";
    default: break;
  }
  const int v = static_cast<int>(status);
  if (v >= 1 && v <= static_cast<int>(UMFC_ERR_MALFORMED_FILE))
    return umfc::error_code_name(static_cast<umfc::ErrorCode>(v - 1));
  return "Unknown";
}

umfc_status_class umfc_status_classify(umfc_status status) {
  switch (status) {
    case UMFC_OK: return UMFC_CLASS_OK;
    case UMFC_ERR_INVALID_ARGUMENT:
    case UMFC_ERR_DIMENSION_TOO_SMALL: return UMFC_CLASS_USAGE;
    case UMFC_ERR_DEGENERATE_VECTOR:
    case UMFC_ERR_DEGENERATE_FEATURE:
    case UMFC_ERR_ALL_SHIFTS_DEGENERATE:
    case UMFC_ERR_EMPTY_SELECTION: return UMFC_CLASS_NUMERIC;
    default: return UMFC_CLASS_DATA;
  }
}

const char* umfc_version(void) { return "1.0.0"; }

void umfc_config_default(umfc_config* cfg) {
  if (cfg) from_config(umfc::EngineConfig{}, cfg);
}

void umfc_synth_spec_default(umfc_synth_spec* spec) {
  if (!spec) return;
  const umfc::SynthSpec d;
  spec->classes = d.classes;
  spec->domains = d.domains;
  spec->dim = d.dim;
  spec->class_sep = d.class_sep;
  spec->domain_offset_norm = d.domain_offset_norm;
  spec->noise_sigma = d.noise_sigma;
  spec->samples_per_cell = d.samples_per_cell;
  spec->text_class_bias = d.text_class_bias;
  spec->text_domain_lean = d.text_domain_lean;
  spec->text_perturbation = d.text_perturbation;
  spec->class_imbalance = nullptr;
  spec->shuffle = d.shuffle ? 1 : 0;
  spec->seed = d.seed;
}

// ---- matrices ----

umfc_status umfc_matrix_new(const double* data, size_t rows, size_t dim, umfc_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    require(data != nullptr || rows * dim == 0, "null data");
    umfc::Matrix m(rows, dim);
    std::copy(data, data + rows * dim, m.data());
    auto* h = new umfc_matrix{umfc::EmbeddingMatrix(std::move(m))};
    try {
      h->m.validate();
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

umfc_status umfc_matrix_read(const char* path, umfc_matrix** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new umfc_matrix{umfc::io::read_embeddings(path)};
  });
}

umfc_status umfc_matrix_read_csv(const char* path, umfc_matrix** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new umfc_matrix{umfc::io::read_embeddings_csv(path)};
  });
}

umfc_status umfc_matrix_write(const umfc_matrix* m, const char* path) {
  return guarded([&] {
    require(m && path, "null argument");
    umfc::io::write_embeddings(m->m, path);
  });
}

void umfc_matrix_free(umfc_matrix* m) { delete m; }

size_t umfc_matrix_rows(const umfc_matrix* m) { return m ? m->m.rows() : 0; }
size_t umfc_matrix_dim(const umfc_matrix* m) { return m ? m->m.dim() : 0; }

const double* umfc_matrix_row(const umfc_matrix* m, size_t i) {
  if (!m || i >= m->m.rows()) return nullptr;
  return m->m.data.row(i).data();
}

const char* umfc_matrix_id(const umfc_matrix* m, size_t i) {
  if (!m || i >= m->m.ids.size()) return nullptr;
  return m->m.ids[i].c_str();
}

int umfc_matrix_has_class_labels(const umfc_matrix* m) { return m && m->m.class_labels ? 1 : 0; }
int umfc_matrix_has_domain_labels(const umfc_matrix* m) { return m && m->m.domain_labels ? 1 : 0; }

int umfc_matrix_class_label(const umfc_matrix* m, size_t i) {
  if (!m || !m->m.class_labels || i >= m->m.rows()) return -1;
  return (*m->m.class_labels)[i];
}

int umfc_matrix_domain_label(const umfc_matrix* m, size_t i) {
  if (!m || !m->m.domain_labels || i >= m->m.rows()) return -1;
  return (*m->m.domain_labels)[i];
}

umfc_status umfc_matrix_set_labels(umfc_matrix* m, const int* class_labels, const int* domain_labels) {
  return guarded([&] {
    require(m != nullptr, "null matrix");
    const size_t n = m->m.rows();
    if (class_labels)
      m->m.class_labels = std::vector<int>(class_labels, class_labels + n);
    else
      m->m.class_labels.reset();
    if (domain_labels)
      m->m.domain_labels = std::vector<int>(domain_labels, domain_labels + n);
    else
      m->m.domain_labels.reset();
  });
}

umfc_status umfc_matrix_subset(const umfc_matrix* m, const size_t* indices, size_t count, umfc_matrix** out) {
  return guarded([&] {
    require(m && out && (indices || count == 0), "null argument");
    *out = new umfc_matrix{m->m.subset(std::span<const size_t>(indices, count))};
  });
}

// ---- banks ----

umfc_status umfc_bank_new(const double* data, size_t classes, size_t dim, const char* const* names,
                          umfc_bank** out) {
  return guarded([&] {
    require(data && names && out, "null argument");
    umfc::TextBank b;
    b.features = umfc::Matrix(classes, dim);
    std::copy(data, data + classes * dim, b.features.data());
    for (size_t k = 0; k < classes; ++k) {
      require(names[k] != nullptr, "null class name");
      b.names.emplace_back(names[k]);
    }
    b.validate();
    *out = new umfc_bank{std::move(b)};
  });
}

umfc_status umfc_bank_read(const char* path, const char* names_path, umfc_bank** out) {
  return guarded([&] {
    require(path && names_path && out, "null argument");
    *out = new umfc_bank{umfc::io::read_text_bank(path, names_path)};
  });
}

umfc_status umfc_bank_write(const umfc_bank* bank, const char* path, const char* names_path) {
  return guarded([&] {
    require(bank && path && names_path, "null argument");
    umfc::io::write_text_bank(bank->b, path, names_path);
  });
}

void umfc_bank_free(umfc_bank* bank) { delete bank; }
size_t umfc_bank_size(const umfc_bank* bank) { return bank ? bank->b.size() : 0; }
size_t umfc_bank_dim(const umfc_bank* bank) { return bank ? bank->b.dim() : 0; }

const char* umfc_bank_name(const umfc_bank* bank, size_t k) {
  if (!bank || k >= bank->b.names.size()) return nullptr;
  return bank->b.names[k].c_str();
}

const double* umfc_bank_row(const umfc_bank* bank, size_t k) {
  if (!bank || k >= bank->b.size()) return nullptr;
  return bank->b.features.row(k).data();
}

// ---- synth ----

umfc_status umfc_synth_generate(const umfc_synth_spec* spec, umfc_matrix** images, umfc_bank** text_bank,
                                umfc_bank** domain_bank) {
  return guarded([&] {
    require(spec != nullptr, "null spec");
    umfc::SynthSpec s;
    s.classes = spec->classes;
    s.domains = spec->domains;
    s.dim = spec->dim;
    s.class_sep = spec->class_sep;
    s.domain_offset_norm = spec->domain_offset_norm;
    s.noise_sigma = spec->noise_sigma;
    s.samples_per_cell = spec->samples_per_cell;
    s.text_class_bias = spec->text_class_bias;
    s.text_domain_lean = spec->text_domain_lean;
    s.text_perturbation = spec->text_perturbation;
    s.shuffle = spec->shuffle != 0;
    s.seed = spec->seed;
    if (spec->class_imbalance) {
      std::vector<std::vector<double>> w(s.domains, std::vector<double>(s.classes));
      for (size_t z = 0; z < s.domains; ++z)
        for (size_t c = 0; c < s.classes; ++c) w[z][c] = spec->class_imbalance[z * s.classes + c];
      s.class_imbalance = std::move(w);
    }
    umfc::SyntheticDataset ds = umfc::generate_benchmark(s);
    umfc_matrix* im = images ? new umfc_matrix{std::move(ds.images)} : nullptr;
    umfc_bank* tb = text_bank ? new (std::nothrow) umfc_bank{std::move(ds.text_bank)} : nullptr;
    umfc_bank* db = domain_bank ? new (std::nothrow) umfc_bank{std::move(ds.domain_bank)} : nullptr;
    if ((text_bank && !tb) || (domain_bank && !db)) {
      delete im;
      delete tb;
      delete db;
      throw std::bad_alloc();
    }
    if (images) *images = im;
    if (text_bank) *text_bank = tb;
    if (domain_bank) *domain_bank = db;
  });
}

// ---- predictions ----

void umfc_predictions_free(umfc_predictions* p) { delete p; }
size_t umfc_predictions_count(const umfc_predictions* p) { return p ? p->p.size() : 0; }
size_t umfc_predictions_classes(const umfc_predictions* p) { return p ? p->p.classes : 0; }

int umfc_predictions_label(const umfc_predictions* p, size_t i) {
  return p && i < p->p.size() ? p->p.labels[i] : -1;
}

int umfc_predictions_cluster(const umfc_predictions* p, size_t i) {
  return p && i < p->p.size() ? p->p.clusters[i] : -1;
}

uint32_t umfc_predictions_flags(const umfc_predictions* p, size_t i) {
  return p && i < p->p.size() ? p->p.flags[i] : 0u;
}

const double* umfc_predictions_probs(const umfc_predictions* p, size_t i) {
  if (!p || i >= p->p.size()) return nullptr;
  return p->p.probs_row(i).data();
}

umfc_status umfc_predictions_append(umfc_predictions* dst, const umfc_predictions* src) {
  return guarded([&] {
    require(dst && src, "null argument");
    dst->p.append(src->p);
  });
}

// ---- regimes ----

umfc_status umfc_zero_shot(const umfc_matrix* test, const umfc_bank* bank, const umfc_config* cfg,
                           umfc_predictions** out) {
  return guarded([&] {
    require(test && bank && out, "null argument");
    *out = new umfc_predictions{umfc::zero_shot(test->m, bank->b, to_config(cfg))};
  });
}

umfc_status umfc_fit(const umfc_matrix* train, const umfc_bank* bank, const umfc_config* cfg, umfc_stream** out) {
  return guarded([&] {
    require(train && bank && out, "null argument");
    const umfc::EngineConfig c = to_config(cfg);
    const umfc::FitResult fit = umfc::fit_unsupervised(train->m, bank->b, c);
    *out = new umfc_stream{umfc::stream_from_fit(fit, train->m, c)};
  });
}

umfc_status umfc_transduce(const umfc_matrix* test, const umfc_bank* bank, const umfc_config* cfg,
                           umfc_predictions** out, umfc_stream** state_out) {
  return guarded([&] {
    require(test && bank && out, "null argument");
    const umfc::EngineConfig c = to_config(cfg);
    umfc::TransduceResult r = umfc::transduce(test->m, bank->b, c);
    umfc_stream* st = state_out ? new umfc_stream{umfc::stream_from_fit(r.fit, test->m, c)} : nullptr;
    umfc_predictions* p = new (std::nothrow) umfc_predictions{std::move(r.predictions)};
    if (!p) {
      delete st;
      throw std::bad_alloc();
    }
    *out = p;
    if (state_out) *state_out = st;
  });
}

umfc_status umfc_predict(const umfc_stream* state, const umfc_matrix* test, const umfc_bank* bank, double tau,
                         umfc_predictions** out) {
  return guarded([&] {
    require(state && test && bank && out, "null argument");
    std::optional<double> t;
    if (tau > 0.0) t = tau;
    *out = new umfc_predictions{umfc::stream_predict(state->s, test->m, bank->b, t)};
  });
}

umfc_status umfc_stream_new(const umfc_config* cfg, umfc_stream** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new umfc_stream{umfc::stream_init(to_config(cfg))};
  });
}

umfc_status umfc_stream_step(umfc_stream* state, const umfc_matrix* batch, const umfc_bank* bank,
                             umfc_predictions** out) {
  return guarded([&] {
    require(state && batch && bank, "null argument");
    // Step on a copy so a failure leaves the caller's state untouched.
    umfc::StreamState next = state->s;
    umfc::Predictions p = umfc::stream_step(next, batch->m, bank->b);
    umfc_predictions* h = out ? new umfc_predictions{std::move(p)} : nullptr;
    state->s = std::move(next);
    if (out) *out = h;
  });
}

umfc_status umfc_stream_save(const umfc_stream* state, const char* path) {
  return guarded([&] {
    require(state && path, "null argument");
    umfc::io::snapshot_state(state->s, path);
  });
}

umfc_status umfc_stream_load(const char* path, umfc_stream** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new umfc_stream{umfc::io::restore_state(path)};
  });
}

void umfc_stream_free(umfc_stream* state) { delete state; }

void umfc_stream_config(const umfc_stream* state, umfc_config* cfg) {
  if (state && cfg) from_config(state->s.config, cfg);
}

int umfc_stream_bootstrapped(const umfc_stream* state) { return state && state->s.bootstrapped() ? 1 : 0; }
uint64_t umfc_stream_batches_seen(const umfc_stream* state) { return state ? state->s.batches_seen : 0; }

size_t umfc_stream_clusters(const umfc_stream* state) {
  return state && state->s.model ? state->s.model->size() : 0;
}

size_t umfc_stream_dim(const umfc_stream* state) { return state && state->s.model ? state->s.model->dim() : 0; }

const double* umfc_stream_prototype(const umfc_stream* state, size_t m) {
  return state && state->s.model ? state_row(state, state->s.model->centroids, m) : nullptr;
}

const double* umfc_stream_cluster_mean(const umfc_stream* state, size_t m) {
  return state ? state_row(state, state->s.calib.cluster_means, m) : nullptr;
}

const double* umfc_stream_text_shift(const umfc_stream* state, size_t m) {
  return state ? state_row(state, state->s.calib.text_shifts, m) : nullptr;
}

const double* umfc_stream_global_mean(const umfc_stream* state) {
  if (!state || !state->s.bootstrapped() || state->s.calib.global_mean.empty()) return nullptr;
  return state->s.calib.global_mean.data();
}

uint64_t umfc_stream_cluster_count(const umfc_stream* state, size_t m) {
  if (!state || !state->s.model || m >= state->s.model->counts.size()) return 0;
  return state->s.model->counts[m];
}

umfc_status umfc_stream_calibrated_bank(const umfc_stream* state, const umfc_bank* bank, umfc_bank** out) {
  return guarded([&] {
    require(state && bank && out, "null argument");
    *out = new umfc_bank{to_bank(umfc::stream_calibrated_bank(state->s, bank->b))};
  });
}

// ---- diagnostics ----

umfc_status umfc_accuracy(const umfc_predictions* p, const umfc_matrix* truth, int micro, umfc_domain_accuracy* table,
                          size_t capacity, size_t* rows, double* overall) {
  return guarded([&] {
    require(p && truth, "null argument");
    const umfc::DomainAccuracyTable t = umfc::per_domain_accuracy(p->p, truth->m, micro != 0);
    size_t i = 0;
    for (const auto& [domain, acc] : t.per_domain) {
      if (table && i < capacity) table[i] = umfc_domain_accuracy{domain, acc.correct, acc.total, acc.accuracy};
      ++i;
    }
    if (rows) *rows = t.per_domain.size();
    if (overall) *overall = t.overall;
  });
}

umfc_status umfc_histogram(const umfc_predictions* p, size_t* counts, size_t classes) {
  return guarded([&] {
    require(p && counts, "null argument");
    const umfc::PredictionHistogram h = umfc::prediction_histogram(p->p.labels, classes);
    std::copy(h.counts.begin(), h.counts.end(), counts);
  });
}

umfc_status umfc_domain_probe(const umfc_bank* bank, const umfc_bank* domain_bank, double tau, double* rows_out,
                              double* aggregate_out, double* kl_out) {
  return guarded([&] {
    require(bank && domain_bank, "null argument");
    const umfc::DomainProbe pr = umfc::domain_bias_probe(bank->b.features, domain_bank->b.features, tau);
    if (rows_out) std::copy(pr.rows.values().begin(), pr.rows.values().end(), rows_out);
    if (aggregate_out) std::copy(pr.aggregate.begin(), pr.aggregate.end(), aggregate_out);
    if (kl_out) *kl_out = pr.kl_to_uniform;
  });
}

umfc_status umfc_direction_check(const umfc_matrix* images, const umfc_bank* domain_bank, double* cosine_out,
                                 int* domains_out, size_t* z_out) {
  return guarded([&] {
    require(images && domain_bank, "null argument");
    const auto ref = umfc::pairwise_directions(domain_bank->b.features);
    const umfc::DirectionTable t = umfc::transition_direction_check(images->m, ref);
    const size_t z = t.domains.size();
    if (z_out) *z_out = z;
    if (domains_out) std::copy(t.domains.begin(), t.domains.end(), domains_out);
    if (cosine_out)
      for (size_t i = 0; i < z; ++i)
        for (size_t j = 0; j < z; ++j) cosine_out[i * z + j] = t.cosine[i][j];
  });
}

umfc_status umfc_balanced_subsample(const umfc_matrix* m, size_t per_cell, uint64_t seed, size_t* indices,
                                    size_t* index_count, umfc_shortfall* shortfalls, size_t* shortfall_count) {
  return guarded([&] {
    require(m != nullptr, "null matrix");
    if (!m->m.class_labels || !m->m.domain_labels)
      throw umfc::Error(umfc::ErrorCode::MissingLabels, "balanced subsampling needs class and domain labels");
    const umfc::BalancedSample s =
        umfc::balanced_subsample(*m->m.class_labels, *m->m.domain_labels, per_cell, seed);
    if (indices) std::copy(s.indices.begin(), s.indices.end(), indices);
    if (shortfalls)
      for (size_t i = 0; i < s.shortfalls.size(); ++i) {
        const auto& f = s.shortfalls[i];
        shortfalls[i] = umfc_shortfall{f.class_label, f.domain_label, f.available, f.requested};
      }
    if (index_count) *index_count = s.indices.size();
    if (shortfall_count) *shortfall_count = s.shortfalls.size();
  });
}

}  // extern "C"
