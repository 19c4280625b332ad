// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "umfc/calib.hpp"

namespace umfc {
namespace {

CalibratedTextBank bank_of(Matrix m) {
  CalibratedTextBank b;
  for (std::size_t k = 0; k < m.rows(); ++k) b.names.push_back("c" + std::to_string(k));
  b.features = std::move(m);
  return b;
}

TEST(Ifc, HandComputed) {
  const Vector v = ifc_calibrate(Vector{1, 0}, Vector{0.5, 0.5});
  EXPECT_NEAR(v[0], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(v[1], -std::sqrt(0.5), 1e-15);
}

TEST(Ifc, ZeroMeanIsNormalization) { EXPECT_EQ(ifc_calibrate(Vector{2, 0}, Vector{0, 0}), (Vector{1, 0})); }

TEST(Ifc, FeatureOnMeanIsDegenerate) {
  try {
    ifc_calibrate(Vector{0.5, 0.5}, Vector{0.5, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateFeature);
  }
}

TEST(Ifc, FrozenReference) {
  // 40-digit evaluation of (f - mu) / |f - mu|.
  const Vector v = ifc_calibrate(Vector{0.9, -0.1, 0.4}, Vector{0.2, 0.3, -0.5});
  EXPECT_NEAR(v[0], 0.57932412202165756, 1e-15);
  EXPECT_NEAR(v[1], -0.33104235544094718, 1e-15);
  EXPECT_NEAR(v[2], 0.74484529974213115, 1e-15);
}

TEST(TextShifts, Examples) {
  EXPECT_EQ(compute_text_shifts(Matrix{{1, 0}, {0, 1}}, Vector{0.5, 0.5}), (Matrix{{0.5, -0.5}, {-0.5, 0.5}}));
  EXPECT_EQ(compute_text_shifts(Matrix{{0.3, 0.7}}, Vector{0.3, 0.7}), (Matrix{{0, 0}}));
  EXPECT_EQ(compute_text_shifts(Matrix{{2, 2}, {0, 0}}, Vector{1, 1}), (Matrix{{1, 1}, {-1, -1}}));
}

TEST(CalibrationState, ShiftsAreExactDifferences) {
  const CalibrationState s = make_calibration_state(Matrix{{0.1, 0.7}, {0.3, -0.2}}, Vector{0.2, 0.25});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(s.text_shifts(i, j), s.cluster_means(i, j) - s.global_mean[j]);
}

TEST(Tfc, SingleZeroShiftNormalizes) {
  const TfcResult r = tfc_calibrate(Vector{3, 4}, Matrix{{0, 0}});
  EXPECT_DOUBLE_EQ(r.feature[0], 0.6);
  EXPECT_DOUBLE_EQ(r.feature[1], 0.8);
  EXPECT_EQ(r.skipped, 0u);
}

TEST(Tfc, SymmetricShifts) {
  const double h = std::sqrt(2.0) / 2.0;
  const TfcResult r = tfc_calibrate(Vector{h, h}, Matrix{{0.5, -0.5}, {-0.5, 0.5}});
  EXPECT_NEAR(r.feature[0], 0.5773502691896258, 1e-12);
  EXPECT_NEAR(r.feature[1], 0.5773502691896258, 1e-12);
}

TEST(Tfc, FrozenReference) {
  // 40-digit evaluation of the mean of normalized differences.
  const TfcResult r =
      tfc_calibrate(Vector{0.3, -1.2, 0.7, 2.0},
                    Matrix{{0.1, 0.4, -0.2, 0.0}, {-0.5, 0.3, 0.9, -1.1}, {1.5, -0.7, 0.2, 0.6}});
  const Vector want{-0.10275292884105782, -0.42151546650370383, 0.17577661785507214, 0.77301626071760483};
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(r.feature[j], want[j], 1e-14);
}

TEST(Tfc, DegenerateTermSkipped) {
  const TfcResult r = tfc_calibrate(Vector{1, 1}, Matrix{{1, 1}, {0, 0}});
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_NEAR(r.feature[0], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(r.feature[1], std::sqrt(0.5), 1e-15);
}

TEST(Tfc, AllDegenerate) {
  try {
    tfc_calibrate(Vector{1, 1}, Matrix{{1, 1}, {1, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllShiftsDegenerate);
  }
}

TEST(Tfc, NormalizedShiftVariant) {
  const TfcResult raw = tfc_calibrate(Vector{1, 0}, Matrix{{0, 4}});
  const TfcResult unit = tfc_calibrate(Vector{1, 0}, Matrix{{0, 4}}, TfcOptions{true});
  // t - shift versus t - shift/|shift|
  EXPECT_NEAR(raw.feature[1], -4.0 / std::sqrt(17.0), 1e-15);
  EXPECT_NEAR(unit.feature[1], -1.0 / std::sqrt(2.0), 1e-15);
}

TEST(CalibrateBank, RowsAreNotRenormalized) {
  TextBank b;
  b.names = {"a", "b"};
  b.features = Matrix{{1, 0}, {0, 1}};
  const CalibratedTextBank cb = calibrate_bank(b, Matrix{{0.5, 0}, {-0.5, 0}});
  EXPECT_EQ(cb.names, b.names);
  const double n0 = std::hypot(cb.features(0, 0), cb.features(0, 1));
  EXPECT_NEAR(n0, 1.0, 1e-15);  // (0.5,0) and (1.5,0) both normalize to (1,0)
  const double n1 = std::hypot(cb.features(1, 0), cb.features(1, 1));
  EXPECT_LT(n1, 1.0);
}

TEST(Classify, UnitTemperature) {
  const Prediction p = classify(Vector{1, 0}, bank_of(Matrix{{1, 0}, {0, 1}}), Temperature(1.0));
  EXPECT_NEAR(p.probs[0], 0.7310585786300049, 1e-15);
  EXPECT_EQ(p.label, 0);
}

TEST(Classify, IdenticalTextsTieToLowestIndex) {
  const Prediction p = classify(Vector{0, 1}, bank_of(Matrix{{1, 0}, {1, 0}}), Temperature(0.01));
  EXPECT_EQ(p.probs[0], 0.5);
  EXPECT_EQ(p.probs[1], 0.5);
  EXPECT_EQ(p.label, 0);
}

TEST(Classify, HalfTemperature) {
  const Prediction p = classify(Vector{1, 0}, bank_of(Matrix{{0.8, 0.6}, {0.6, 0.8}}), Temperature(0.5));
  // exp(1.6) / (exp(1.6) + exp(1.2)), 50-digit evaluation.
  EXPECT_NEAR(p.probs[0], 0.598687660112452, 1e-14);
  EXPECT_NEAR(p.probs[1], 0.401312339887548, 1e-14);
  EXPECT_EQ(p.label, 0);
}

TEST(Classify, DegenerateTextPropagates) {
  try {
    classify(Vector{1, 0}, bank_of(Matrix{{0, 0}, {0, 1}}), Temperature(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateVector);
  }
}

TEST(ClassifyRows, MatchesScalarPath) {
  const CalibratedTextBank b = bank_of(Matrix{{0.8, 0.6, 0.0}, {0.1, 0.2, 0.9}, {-0.3, 0.5, 0.2}});
  Matrix f{{1, 0, 0}, {0, 0.6, 0.8}, {0.6, 0, -0.8}};
  Predictions out(3, 3);
  classify_rows(f, b, Temperature(0.07), out);
  for (std::size_t i = 0; i < 3; ++i) {
    const Prediction p = classify(f.row(i), b, Temperature(0.07));
    EXPECT_EQ(out.labels[i], p.label);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(out.probs_row(i)[k], p.probs[k], 1e-12);
  }
}

TEST(Ifc, NoiselessTranslationRecovery) {
  // f = g_c + d_z with clusters equal to domains: calibrated same-class rows coincide.
  const Matrix g{{1, 0, 0, 0}, {0, 1, 0, 0}};
  const Matrix d{{0, 0, 3, 0}, {0, 0, 0, 3}};
  std::vector<Vector> cal[2];
  for (std::size_t z = 0; z < 2; ++z) {
    Vector mu(4, 0.0);
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t j = 0; j < 4; ++j) mu[j] += (g(c, j) + d(z, j)) / 2.0;
    for (std::size_t c = 0; c < 2; ++c) {
      Vector f(4);
      for (std::size_t j = 0; j < 4; ++j) f[j] = g(c, j) + d(z, j);
      cal[c].push_back(ifc_calibrate(f, mu));
    }
  }
  for (std::size_t c = 0; c < 2; ++c) EXPECT_GE(cosine_sim(cal[c][0], cal[c][1]), 1.0 - 1e-12);
}

}  // namespace
}  // namespace umfc
