// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "umfc/diagnostics.hpp"
#include "umfc/synth.hpp"

namespace umfc {
namespace {

SynthSpec noiseless() {
  SynthSpec s;
  s.noise_sigma = 0.0;
  s.text_perturbation = 0.0;
  s.samples_per_cell = 2;
  return s;
}

TEST(Generator, Deterministic) {
  const SyntheticDataset a = generate_benchmark(SynthSpec{});
  const SyntheticDataset b = generate_benchmark(SynthSpec{});
  EXPECT_EQ(a.images.data, b.images.data);
  EXPECT_EQ(a.images.ids, b.images.ids);
  EXPECT_EQ(a.text_bank.features, b.text_bank.features);
  SynthSpec other;
  other.seed = 8;
  EXPECT_NE(generate_benchmark(other).images.data, a.images.data);
}

TEST(Generator, ShapesAndLabels) {
  const SyntheticDataset ds = generate_benchmark(SynthSpec{});
  EXPECT_EQ(ds.images.rows(), 1500u);
  EXPECT_EQ(ds.images.dim(), 32u);
  EXPECT_EQ(ds.text_bank.size(), 10u);
  EXPECT_EQ(ds.domain_bank.size(), 3u);
  EXPECT_EQ(ds.domain_bank.names[2], "domain2");
  std::map<std::pair<int, int>, int> cells;
  for (std::size_t i = 0; i < ds.images.rows(); ++i)
    ++cells[{(*ds.images.class_labels)[i], (*ds.images.domain_labels)[i]}];
  EXPECT_EQ(cells.size(), 30u);
  for (const auto& [cell, n] : cells) EXPECT_EQ(n, 50);
  EXPECT_NO_THROW(ds.text_bank.validate());
}

TEST(Generator, OrthonormalAnchorsAndOffsets) {
  const SyntheticDataset ds = generate_benchmark(SynthSpec{});
  Matrix all = ds.class_anchors;
  for (std::size_t z = 0; z < ds.domain_offsets.rows(); ++z) all.append_row(ds.domain_offsets.row(z));
  for (std::size_t i = 0; i < all.rows(); ++i)
    for (std::size_t j = 0; j < all.rows(); ++j) EXPECT_NEAR(dot(all.row(i), all.row(j)), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Generator, ClassImbalanceSetsCellSizes) {
  SynthSpec s;
  s.classes = 2;
  s.domains = 2;
  s.dim = 8;
  s.samples_per_cell = 10;
  s.class_imbalance = std::vector<std::vector<double>>{{1.0, 0.5}, {0.2, 2.0}};
  const SyntheticDataset ds = generate_benchmark(s);
  std::map<std::pair<int, int>, int> cells;
  for (std::size_t i = 0; i < ds.images.rows(); ++i)
    ++cells[{(*ds.images.domain_labels)[i], (*ds.images.class_labels)[i]}];
  EXPECT_EQ((cells[{0, 0}]), 10);
  EXPECT_EQ((cells[{0, 1}]), 5);
  EXPECT_EQ((cells[{1, 0}]), 2);
  EXPECT_EQ((cells[{1, 1}]), 20);
}

TEST(Generator, DimensionTooSmall) {
  SynthSpec s;
  s.dim = 12;
  try {
    generate_benchmark(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionTooSmall);
  }
}

TEST(Generator, RejectsBadSpec) {
  SynthSpec s;
  s.classes = 1;
  EXPECT_THROW(generate_benchmark(s), Error);
  s = SynthSpec{};
  s.noise_sigma = -1.0;
  EXPECT_THROW(generate_benchmark(s), Error);
  s = SynthSpec{};
  s.domains = 0;
  EXPECT_THROW(generate_benchmark(s), Error);
}

TEST(OracleZeroShot, SingleDomainNoiselessIsPerfect) {
  SynthSpec s = noiseless();
  s.domains = 1;
  const DomainAccuracyTable t = oracle_zero_shot(generate_benchmark(s), 0.01);
  EXPECT_EQ(t.overall, 1.0);
}

TEST(OracleZeroShot, NoOffsetIsPerfect) {
  SynthSpec s = noiseless();
  s.domain_offset_norm = 0.0;
  const DomainAccuracyTable t = oracle_zero_shot(generate_benchmark(s), 0.01);
  for (const auto& [z, a] : t.per_domain) EXPECT_EQ(a.accuracy, 1.0);
}

TEST(OracleZeroShot, LargeOffsetEnumerated) {
  // Per-domain accuracies from exhaustive enumeration of every (class, domain)
  // cell at 50 digits in an abstract orthonormal basis.
  SynthSpec s = noiseless();
  s.domain_offset_norm = 4.0;
  const DomainAccuracyTable t = oracle_zero_shot(generate_benchmark(s), 0.01);
  EXPECT_DOUBLE_EQ(t.per_domain.at(0).accuracy, 0.4);
  EXPECT_DOUBLE_EQ(t.per_domain.at(1).accuracy, 0.3);
  EXPECT_DOUBLE_EQ(t.per_domain.at(2).accuracy, 0.3);

  SynthSpec small = noiseless();
  small.classes = 4;
  small.domains = 2;
  small.dim = 8;
  small.domain_offset_norm = 3.0;
  small.text_class_bias = 0.5;
  small.text_domain_lean = 0.0;
  const DomainAccuracyTable u = oracle_zero_shot(generate_benchmark(small), 0.01);
  EXPECT_DOUBLE_EQ(u.per_domain.at(0).accuracy, 0.5);
  EXPECT_DOUBLE_EQ(u.per_domain.at(1).accuracy, 0.5);
}

TEST(OracleZeroShot, SingleSample) {
  SyntheticDataset ds = generate_benchmark(SynthSpec{});
  const std::vector<std::size_t> one{0};
  ds.images = ds.images.subset(one);
  const double acc = oracle_zero_shot(ds, 0.01).overall;
  EXPECT_TRUE(acc == 0.0 || acc == 1.0);
}

TEST(OracleTransduce, SingleClusterIsCenteredZeroShot) {
  SynthSpec s;
  s.samples_per_cell = 5;
  const SyntheticDataset ds = generate_benchmark(s);
  EngineConfig cfg;
  cfg.clusters = 1;
  const Predictions p = oracle_transduce(ds, cfg);
  const Matrix x = ingest_features(ds.images.data, cfg);
  const Vector mu = mean_rows(x);
  const CalibratedTextBank nb = normalized_bank(ingest_bank(ds.text_bank, cfg));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    Vector c(x.cols());
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = x(i, j) - mu[j];
    EXPECT_EQ(p.labels[i], classify(l2_normalize(c), nb, Temperature(cfg.tau)).label);
  }
}

TEST(OracleTransduce, NoiselessDomainsEqual) {
  const SyntheticDataset ds = generate_benchmark(noiseless());
  EngineConfig cfg;
  cfg.clusters = 3;
  const DomainAccuracyTable t = per_domain_accuracy(oracle_transduce(ds, cfg), ds.images);
  for (const auto& [z, a] : t.per_domain) EXPECT_EQ(a.accuracy, t.per_domain.begin()->second.accuracy);
  EXPECT_EQ(t.overall, 1.0);
}

TEST(Generator, PlantedDirectionsMatchImages) {
  SynthSpec s = noiseless();
  s.domain_offset_norm = 10.0;
  const SyntheticDataset ds = generate_benchmark(s);
  const DirectionTable t = transition_direction_check(ds.images, pairwise_directions(ds.domain_bank.features));
  EXPECT_NEAR(t.min_off_diagonal(), 1.0, 1e-9);
}

TEST(Generator, TransitionDirectionsAreCenteredOffsets) {
  const SyntheticDataset ds = generate_benchmark(SynthSpec{});
  for (std::size_t z = 0; z < 3; ++z) {
    for (std::size_t j = 0; j < 32; ++j) {
      const double mean = (ds.domain_offsets(0, j) + ds.domain_offsets(1, j) + ds.domain_offsets(2, j)) / 3.0;
      EXPECT_NEAR(ds.true_transition_directions(z, j), 2.0 * (ds.domain_offsets(z, j) - mean), 1e-12);
    }
  }
}

}  // namespace
}  // namespace umfc
