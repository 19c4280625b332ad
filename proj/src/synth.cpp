// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include "umfc/synth.hpp"

#include <cmath>

#include "umfc/clustering.hpp"
#include "umfc/rng.hpp"

namespace umfc {

void SynthSpec::validate() const {
  if (classes < 2) throw Error(ErrorCode::InvalidArgument, "synthetic spec needs at least 2 classes");
  if (domains < 1) throw Error(ErrorCode::InvalidArgument, "synthetic spec needs at least 1 domain");
  if (dim < classes + domains)
    throw Error(ErrorCode::DimensionTooSmall, "dim " + std::to_string(dim) + " < classes + domains (" +
                                                  std::to_string(classes + domains) + ")");
  for (double v : {class_sep, domain_offset_norm, noise_sigma, text_class_bias, text_domain_lean, text_perturbation})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::InvalidArgument, "synthetic scales must be finite and non-negative");
  if (class_imbalance) {
    if (class_imbalance->size() != domains)
      throw Error(ErrorCode::InvalidArgument, "class_imbalance needs one weight row per domain");
    for (const auto& row : *class_imbalance) {
      if (row.size() != classes)
        throw Error(ErrorCode::InvalidArgument, "class_imbalance rows need one weight per class");
      for (double w : row)
        if (!(w >= 0.0) || !std::isfinite(w))
          throw Error(ErrorCode::InvalidArgument, "class_imbalance weights must be non-negative");
    }
  }
}

namespace {

// Seeded Gaussian draws made exactly orthonormal by modified Gram-Schmidt
// (two passes).
Matrix orthonormal_rows(std::size_t count, std::size_t dim, Rng& rng) {
  Matrix q(count, dim);
  for (std::size_t r = 0; r < count; ++r) {
    auto v = q.row(r);
    for (double& x : v) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < r; ++p) {
        const auto u = q.row(p);
        const double proj = dot(v, u);
        for (std::size_t j = 0; j < dim; ++j) v[j] -= proj * u[j];
      }
    }
    const double n = l2_norm(v);
    for (double& x : v) x /= n;
  }
  return q;
}

}  // namespace

SyntheticDataset generate_benchmark(const SynthSpec& spec) {
  spec.validate();
  const std::size_t k_count = spec.classes;
  const std::size_t z_count = spec.domains;
  const std::size_t d = spec.dim;
  Rng rng(spec.seed);

  const Matrix basis = orthonormal_rows(k_count + z_count, d, rng);
  SyntheticDataset ds;
  ds.class_anchors = Matrix(k_count, d);
  ds.domain_offsets = Matrix(z_count, d);
  for (std::size_t c = 0; c < k_count; ++c) ds.class_anchors.set_row(c, basis.row(c));
  for (std::size_t z = 0; z < z_count; ++z) ds.domain_offsets.set_row(z, basis.row(k_count + z));
  const Vector offset_mean = mean_rows(ds.domain_offsets);

  ds.true_transition_directions = Matrix(z_count, d);
  for (std::size_t z = 0; z < z_count; ++z)
    for (std::size_t j = 0; j < d; ++j)
      ds.true_transition_directions(z, j) = spec.domain_offset_norm * (ds.domain_offsets(z, j) - offset_mean[j]);

  struct Row {
    std::size_t c, z, i;
  };
  std::vector<Row> layout;
  for (std::size_t z = 0; z < z_count; ++z) {
    for (std::size_t c = 0; c < k_count; ++c) {
      std::size_t n = spec.samples_per_cell;
      if (spec.class_imbalance)
        n = static_cast<std::size_t>(std::llround(static_cast<double>(spec.samples_per_cell) *
                                                  (*spec.class_imbalance)[z][c]));
      for (std::size_t i = 0; i < n; ++i) layout.push_back({c, z, i});
    }
  }
  if (spec.shuffle) {
    for (std::size_t i = layout.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i));
      std::swap(layout[i - 1], layout[j]);
    }
  }

  EmbeddingMatrix& img = ds.images;
  img.data = Matrix(layout.size(), d);
  img.class_labels.emplace();
  img.domain_labels.emplace();
  for (std::size_t r = 0; r < layout.size(); ++r) {
    const Row& cell = layout[r];
    auto f = img.data.row(r);
    const auto g = ds.class_anchors.row(cell.c);
    const auto dz = ds.domain_offsets.row(cell.z);
    for (std::size_t j = 0; j < d; ++j)
      f[j] = spec.class_sep * g[j] + spec.domain_offset_norm * dz[j] + spec.noise_sigma * rng.normal();
    img.ids.push_back("d" + std::to_string(cell.z) + "_c" + std::to_string(cell.c) + "_" + std::to_string(cell.i));
    img.class_labels->push_back(static_cast<int>(cell.c));
    img.domain_labels->push_back(static_cast<int>(cell.z));
  }

  const double zf = static_cast<double>(z_count);
  ds.text_bank.features = Matrix(k_count, d);
  for (std::size_t c = 0; c < k_count; ++c) {
    auto t = ds.text_bank.features.row(c);
    const auto g = ds.class_anchors.row(c);
    const auto biased = ds.domain_offsets.row(c % z_count);
    const auto lean = ds.domain_offsets.row(0);
    for (std::size_t j = 0; j < d; ++j) {
      double sum_offsets = 0.0;
      for (std::size_t z = 0; z < z_count; ++z) sum_offsets += ds.domain_offsets(z, j);
      t[j] = spec.class_sep * g[j] + (spec.domain_offset_norm / zf) * sum_offsets +
             spec.text_class_bias * spec.domain_offset_norm * (biased[j] - offset_mean[j]) +
             spec.text_domain_lean * spec.domain_offset_norm * (lean[j] - offset_mean[j]) +
             spec.text_perturbation * rng.normal();
    }
    ds.text_bank.names.push_back("class" + std::to_string(c));
  }

  ds.domain_bank.features = ds.domain_offsets;
  for (std::size_t z = 0; z < z_count; ++z) ds.domain_bank.names.push_back("domain" + std::to_string(z));
  return ds;
}

DomainAccuracyTable oracle_zero_shot(const SyntheticDataset& ds, double tau) {
  Temperature{tau};
  const EmbeddingMatrix& img = ds.images;
  if (!img.class_labels || !img.domain_labels) throw Error(ErrorCode::MissingLabels, "oracle needs labels");
  const Matrix& t = ds.text_bank.features;

  DomainAccuracyTable table;
  for (std::size_t i = 0; i < img.rows(); ++i) {
    const auto f = img.data.row(i);
    double fn = 0.0;
    for (double v : f) fn += v * v;
    fn = std::sqrt(fn);
    int best = -1;
    double best_cos = -2.0;
    for (std::size_t k = 0; k < t.rows(); ++k) {
      double num = 0.0;
      double tn = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) {
        num += f[j] * t(k, j);
        tn += t(k, j) * t(k, j);
      }
      const double c = num / (fn * std::sqrt(tn));
      if (c > best_cos) {
        best_cos = c;
        best = static_cast<int>(k);
      }
    }
    auto& cell = table.per_domain[(*img.domain_labels)[i]];
    ++cell.total;
    if (best == (*img.class_labels)[i]) ++cell.correct;
  }
  double sum = 0.0;
  for (auto& [z, cell] : table.per_domain) {
    cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.total);
    sum += cell.accuracy;
  }
  table.overall = table.per_domain.empty() ? 0.0 : sum / static_cast<double>(table.per_domain.size());
  return table;
}

Predictions oracle_transduce(const SyntheticDataset& ds, const EngineConfig& cfg) {
  const std::size_t n = ds.images.rows();
  const std::size_t d = ds.images.dim();
  const std::size_t k_count = ds.text_bank.size();

  auto unit = [](std::vector<double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    for (double& x : v) x /= s;
    return v;
  };

  std::vector<std::vector<double>> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = ds.images.data.row(i);
    x[i].assign(r.begin(), r.end());
    if (cfg.normalize_input) x[i] = unit(x[i]);
  }
  std::vector<std::vector<double>> t(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto r = ds.text_bank.features.row(k);
    t[k].assign(r.begin(), r.end());
    if (cfg.normalize_input) t[k] = unit(t[k]);
  }

  Matrix xm(n, d);
  for (std::size_t i = 0; i < n; ++i) xm.set_row(i, x[i]);
  const KMeansResult km = kmeans_fit(xm, cfg.kmeans());
  const std::size_t m_count = cfg.clusters;

  // Store every member of every cluster, then average from scratch.
  std::vector<std::vector<std::size_t>> members(m_count);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(km.assignment[i])].push_back(i);
  std::vector<std::vector<double>> mu(m_count, std::vector<double>(d, 0.0));
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t i : members[m])
      for (std::size_t j = 0; j < d; ++j) mu[m][j] += x[i][j];
    for (std::size_t j = 0; j < d; ++j) mu[m][j] /= static_cast<double>(members[m].size());
  }
  std::vector<double> avg(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) avg[j] += x[i][j];
  for (std::size_t j = 0; j < d; ++j) avg[j] /= static_cast<double>(n);

  std::vector<std::vector<double>> tcal(k_count, std::vector<double>(d, 0.0));
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t m = 0; m < m_count; ++m) {
      std::vector<double> term(d);
      double shift_norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) shift_norm += (mu[m][j] - avg[j]) * (mu[m][j] - avg[j]);
      shift_norm = std::sqrt(shift_norm);
      const double scale = cfg.normalize_shifts ? (shift_norm > 0.0 ? 1.0 / shift_norm : 0.0) : 1.0;
      for (std::size_t j = 0; j < d; ++j) term[j] = t[k][j] - scale * (mu[m][j] - avg[j]);
      term = unit(term);
      for (std::size_t j = 0; j < d; ++j) tcal[k][j] += term[j] / static_cast<double>(m_count);
    }
  }

  Predictions out(n, k_count);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l = static_cast<std::size_t>(km.assignment[i]);
    std::vector<double> r(d);
    double rn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      r[j] = x[i][j] - mu[l][j];
      rn += r[j] * r[j];
    }
    if (std::sqrt(rn) < kDegenerateNorm) {
      r = x[i];
      out.flags[i] = kFlagDegenerate;
    }
    r = unit(r);
    std::vector<double> e(k_count);
    double z = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      double num = 0.0;
      double tn = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        num += r[j] * tcal[k][j];
        tn += tcal[k][j] * tcal[k][j];
      }
      e[k] = std::exp(num / std::sqrt(tn) / cfg.tau);
      z += e[k];
    }
    int best = 0;
    for (std::size_t k = 0; k < k_count; ++k) {
      out.probs[i * k_count + k] = e[k] / z;
      if (e[k] > e[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    out.labels[i] = best;
    out.clusters[i] = static_cast<int>(l);
  }
  return out;
}

}  // namespace umfc
