// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_CLUSTERING_HPP
#define UMFC_CLUSTERING_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "umfc/core.hpp"

namespace umfc {

struct ClusterModel {
  Matrix centroids;                   // M x D
  std::vector<std::uint64_t> counts;  // samples absorbed per cluster

  std::size_t size() const noexcept { return centroids.rows(); }
  std::size_t dim() const noexcept { return centroids.cols(); }
  void validate() const;
};

using Assignment = std::vector<int>;

struct KMeansOptions {
  std::size_t clusters = 6;
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  double tol = 1e-4;
  // Skip distance scans that per-point bounds prove unnecessary. Assignments
  // match the plain iteration; inertia_history then holds only the initial
  // and final inertia.
  bool bounded = false;
};

struct KMeansResult {
  ClusterModel model;
  Assignment assignment;
  // Inertia after the initial assignment and after every Lloyd iteration.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding from a portable seeded generator.
// Stops once the largest centroid shift drops below tol or after max_iters.
// The returned assignment is always the nearest-centroid assignment for the
// returned centroids. Empty clusters are reseeded with the point farthest from
// its current centroid.
KMeansResult kmeans_fit(const Matrix& features, const KMeansOptions& options);

// argmin_m ||f - c_m||, lowest index on ties.
int assign_nearest(const ClusterModel& model, std::span<const double> f);
Assignment assign_all(const ClusterModel& model, const Matrix& features);

struct BatchMeans {
  Matrix means;                       // rows of absent clusters are left at zero
  std::vector<std::uint64_t> counts;  // 0 marks an absent cluster
  std::vector<Vector> sums;           // per-cluster sums in row order

  bool present(std::size_t m) const noexcept { return counts[m] > 0; }
};

BatchMeans batch_cluster_means(const Matrix& features, const Assignment& assignment, std::size_t clusters);

double inertia(const ClusterModel& model, const Matrix& features, const Assignment& assignment);

}  // namespace umfc

#endif  // UMFC_CLUSTERING_HPP
