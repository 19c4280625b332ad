// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_DIAGNOSTICS_HPP
#define UMFC_DIAGNOSTICS_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "umfc/core.hpp"

namespace umfc {

struct DomainAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

struct DomainAccuracyTable {
  std::map<int, DomainAccuracy> per_domain;
  double overall = 0.0;  // macro mean unless built with micro averaging
  bool micro = false;
};

// Labels of -1 (or absent label vectors) raise MissingLabels.
DomainAccuracyTable per_domain_accuracy(std::span<const int> predicted, std::span<const int> truth,
                                        std::span<const int> domains, bool micro = false);
DomainAccuracyTable per_domain_accuracy(const Predictions& preds, const EmbeddingMatrix& data, bool micro = false);

struct PredictionHistogram {
  std::vector<std::size_t> counts;
  std::vector<std::pair<int, std::size_t>> top_k;  // descending count, then class index
};

PredictionHistogram prediction_histogram(std::span<const int> predicted, std::size_t classes);

struct DomainProbe {
  Matrix rows;                          // K x Z, each row a softmax over domains
  Vector aggregate;                     // mean of rows
  std::vector<std::size_t> argmax_counts;  // classes whose top domain is z
  double kl_to_uniform = 0.0;           // KL(aggregate || uniform)
};

// Softmax over cos(text_k, anchor_z) / tau for every class text vector.
DomainProbe domain_bias_probe(const Matrix& class_texts, const Matrix& domain_anchors, double tau = 1.0);

double kl_to_uniform(std::span<const double> p);

// Normalized pairwise differences of reference vectors (e.g. domain text
// anchors): entry (i, j) = normalize(ref_i - ref_j). Diagonal rows are empty.
std::vector<std::vector<Vector>> pairwise_directions(const Matrix& reference);

struct DirectionTable {
  std::vector<int> domains;              // sorted domain ids present
  std::vector<std::vector<double>> cosine;  // NaN on the diagonal

  double min_off_diagonal() const;
};

// Compares normalize(mean_i - mean_j) from labelled images against reference
// directions indexed by position in the sorted domain list.
DirectionTable transition_direction_check(const EmbeddingMatrix& images,
                                          const std::vector<std::vector<Vector>>& reference);

struct Shortfall {
  int class_label = 0;
  int domain_label = 0;
  std::size_t available = 0;
  std::size_t requested = 0;
};

struct BalancedSample {
  std::vector<std::size_t> indices;  // ascending
  std::vector<Shortfall> shortfalls;
};

BalancedSample balanced_subsample(std::span<const int> class_labels, std::span<const int> domain_labels,
                                  std::size_t per_cell, std::uint64_t seed);

}  // namespace umfc

#endif  // UMFC_DIAGNOSTICS_HPP
