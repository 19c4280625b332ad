// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_SYNTH_HPP
#define UMFC_SYNTH_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "umfc/core.hpp"
#include "umfc/diagnostics.hpp"
#include "umfc/engine.hpp"

namespace umfc {

// Synthetic multi-domain benchmark. Images of class c in domain z are
//   class_sep * g_c + domain_offset_norm * d_z + N(0, noise_sigma^2 I)
// with orthonormal class anchors g and domain offsets d. Class texts sit at
// the domain average, so image-space and text-space domain transitions share
// directions. Two optional text leans model a biased text encoder:
//   text_class_bias   pulls class c toward domain (c mod Z),
//   text_domain_lean  pulls every class toward domain 0.
struct SynthSpec {
  std::size_t classes = 10;
  std::size_t domains = 3;
  std::size_t dim = 32;
  double class_sep = 1.0;
  double domain_offset_norm = 2.0;
  double noise_sigma = 0.05;
  std::size_t samples_per_cell = 50;
  double text_class_bias = 0.25;
  double text_domain_lean = 0.5;
  double text_perturbation = 1e-3;
  // Optional Z x K relative weights; cell size = round(samples_per_cell * w).
  std::optional<std::vector<std::vector<double>>> class_imbalance;
  bool shuffle = true;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticDataset {
  EmbeddingMatrix images;  // class and domain labels populated
  TextBank text_bank;
  TextBank domain_bank;    // one unit anchor per domain, names "domain<z>"
  Matrix class_anchors;    // K x D
  Matrix domain_offsets;   // Z x D, unit rows
  Matrix true_transition_directions;  // Z x D, offset_z - mean offset (scaled)
};

SyntheticDataset generate_benchmark(const SynthSpec& spec);

// Brute-force zero-shot: argmax over raw cosine similarities, grouped by domain.
DomainAccuracyTable oracle_zero_shot(const SyntheticDataset& ds, double tau);

// Store-everything recomputation of the transductive pipeline. Shares only the
// clustering with the engine; every mean, shift, calibration and softmax is
// recomputed here with plain loops.
Predictions oracle_transduce(const SyntheticDataset& ds, const EngineConfig& cfg);

}  // namespace umfc

#endif  // UMFC_SYNTH_HPP
