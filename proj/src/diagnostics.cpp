// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include "umfc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "umfc/rng.hpp"

namespace umfc {

DomainAccuracyTable per_domain_accuracy(std::span<const int> predicted, std::span<const int> truth,
                                        std::span<const int> domains, bool micro) {
  if (predicted.size() != truth.size() || truth.size() != domains.size())
    throw Error(ErrorCode::DimensionMismatch, "predictions and labels differ in length");
  DomainAccuracyTable table;
  table.micro = micro;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (truth[i] < 0 || domains[i] < 0)
      throw Error(ErrorCode::MissingLabels, "row " + std::to_string(i) + " has no class or domain label");
    auto& cell = table.per_domain[domains[i]];
    ++cell.total;
    if (predicted[i] == truth[i]) ++cell.correct;
  }
  std::size_t correct = 0;
  std::size_t total = 0;
  double sum = 0.0;
  for (auto& [z, cell] : table.per_domain) {
    cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.total);
    sum += cell.accuracy;
    correct += cell.correct;
    total += cell.total;
  }
  if (!table.per_domain.empty()) {
    table.overall = micro ? static_cast<double>(correct) / static_cast<double>(total)
                          : sum / static_cast<double>(table.per_domain.size());
  }
  return table;
}

DomainAccuracyTable per_domain_accuracy(const Predictions& preds, const EmbeddingMatrix& data, bool micro) {
  if (!data.class_labels || !data.domain_labels)
    throw Error(ErrorCode::MissingLabels, "accuracy needs class and domain labels");
  return per_domain_accuracy(preds.labels, *data.class_labels, *data.domain_labels, micro);
}

PredictionHistogram prediction_histogram(std::span<const int> predicted, std::size_t classes) {
  PredictionHistogram h;
  h.counts.assign(classes, 0);
  for (int p : predicted) {
    if (p < 0 || static_cast<std::size_t>(p) >= classes)
      throw Error(ErrorCode::InvalidArgument, "predicted class " + std::to_string(p) + " out of range");
    ++h.counts[static_cast<std::size_t>(p)];
  }
  for (std::size_t k = 0; k < classes; ++k) h.top_k.emplace_back(static_cast<int>(k), h.counts[k]);
  std::stable_sort(h.top_k.begin(), h.top_k.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return h;
}

double kl_to_uniform(std::span<const double> p) {
  const double z = static_cast<double>(p.size());
  double kl = 0.0;
  for (double v : p)
    if (v > 0.0) kl += v * std::log(v * z);
  return kl;
}

DomainProbe domain_bias_probe(const Matrix& class_texts, const Matrix& domain_anchors, double tau) {
  if (class_texts.cols() != domain_anchors.cols())
    throw Error(ErrorCode::DimensionMismatch, "text and domain anchor dimensions differ");
  if (domain_anchors.rows() == 0) throw Error(ErrorCode::InvalidArgument, "probe needs at least one domain anchor");
  const Temperature t(tau);
  const std::size_t k_count = class_texts.rows();
  const std::size_t z_count = domain_anchors.rows();

  DomainProbe probe;
  probe.rows = Matrix(k_count, z_count);
  probe.aggregate.assign(z_count, 0.0);
  probe.argmax_counts.assign(z_count, 0);
  Vector logits(z_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t z = 0; z < z_count; ++z) logits[z] = cosine_sim(class_texts.row(k), domain_anchors.row(z));
    const Vector p = softmax_temp(logits, t);
    probe.rows.set_row(k, p);
    for (std::size_t z = 0; z < z_count; ++z) probe.aggregate[z] += p[z];
    ++probe.argmax_counts[argmax(p)];
  }
  if (k_count > 0)
    for (double& v : probe.aggregate) v /= static_cast<double>(k_count);
  probe.kl_to_uniform = kl_to_uniform(probe.aggregate);
  return probe;
}

std::vector<std::vector<Vector>> pairwise_directions(const Matrix& reference) {
  const std::size_t z_count = reference.rows();
  std::vector<std::vector<Vector>> out(z_count, std::vector<Vector>(z_count));
  Vector diff(reference.cols());
  for (std::size_t i = 0; i < z_count; ++i) {
    for (std::size_t j = 0; j < z_count; ++j) {
      if (i == j) continue;
      for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = reference(i, c) - reference(j, c);
      out[i][j] = l2_normalize(diff);
    }
  }
  return out;
}

double DirectionTable::min_off_diagonal() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cosine.size(); ++i)
    for (std::size_t j = 0; j < cosine.size(); ++j)
      if (i != j) m = std::min(m, cosine[i][j]);
  return m;
}

DirectionTable transition_direction_check(const EmbeddingMatrix& images,
                                          const std::vector<std::vector<Vector>>& reference) {
  if (!images.domain_labels) throw Error(ErrorCode::MissingLabels, "direction check needs domain labels");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < images.rows(); ++i) {
    const int z = (*images.domain_labels)[i];
    if (z < 0) throw Error(ErrorCode::MissingLabels, "row " + std::to_string(i) + " has no domain label");
    members[z].push_back(i);
  }
  if (members.size() < 2) throw Error(ErrorCode::EmptyDomain, "direction check needs at least two populated domains");
  if (reference.size() < members.size())
    throw Error(ErrorCode::DimensionMismatch, "fewer reference domains than image domains");

  DirectionTable table;
  std::vector<Vector> means;
  for (const auto& [z, idx] : members) {
    table.domains.push_back(z);
    means.push_back(mean_rows(images.data, std::span<const std::size_t>(idx)));
  }
  const std::size_t z_count = means.size();
  table.cosine.assign(z_count, std::vector<double>(z_count, std::numeric_limits<double>::quiet_NaN()));
  Vector diff(images.dim());
  for (std::size_t i = 0; i < z_count; ++i) {
    for (std::size_t j = 0; j < z_count; ++j) {
      if (i == j) continue;
      for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = means[i][c] - means[j][c];
      table.cosine[i][j] = cosine_sim(diff, reference[i][j]);
    }
  }
  return table;
}

BalancedSample balanced_subsample(std::span<const int> class_labels, std::span<const int> domain_labels,
                                  std::size_t per_cell, std::uint64_t seed) {
  if (class_labels.size() != domain_labels.size())
    throw Error(ErrorCode::DimensionMismatch, "class and domain label vectors differ in length");
  std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
  std::set<int> class_values;
  std::set<int> domain_values;
  for (std::size_t i = 0; i < class_labels.size(); ++i) {
    if (class_labels[i] < 0 || domain_labels[i] < 0)
      throw Error(ErrorCode::MissingLabels, "row " + std::to_string(i) + " has no class or domain label");
    class_values.insert(class_labels[i]);
    domain_values.insert(domain_labels[i]);
    cells[{class_labels[i], domain_labels[i]}].push_back(i);
  }

  Rng rng(seed);
  BalancedSample out;
  for (int c : class_values) {
    for (int z : domain_values) {
      auto it = cells.find({c, z});
      std::vector<std::size_t> members = it == cells.end() ? std::vector<std::size_t>{} : it->second;
      if (members.size() <= per_cell) {
        if (members.size() < per_cell) out.shortfalls.push_back({c, z, members.size(), per_cell});
        out.indices.insert(out.indices.end(), members.begin(), members.end());
        continue;
      }
      // Partial Fisher-Yates: the first per_cell slots become the sample.
      for (std::size_t i = 0; i < per_cell; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(members.size() - i));
        std::swap(members[i], members[j]);
      }
      out.indices.insert(out.indices.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(per_cell));
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

}  // namespace umfc
