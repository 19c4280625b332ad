// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include "umfc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "umfc/parallel.hpp"
#include "umfc/rng.hpp"

namespace umfc {
namespace {

// Four fixed lanes, combined in a fixed order.
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

int nearest(const Matrix& centroids, std::span<const double> f, double* best_dist = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < centroids.rows(); ++m) {
    const double d = squared_distance(f, centroids.row(m));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(m);
    }
  }
  if (best_dist) *best_dist = best_d;
  return best;
}

// Same tie rule as nearest(); also reports the runner-up distance.
int nearest_two(const Matrix& centroids, std::span<const double> f, double& best_d, double& second_d) {
  int best = 0;
  best_d = second_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < centroids.rows(); ++m) {
    const double d = squared_distance(f, centroids.row(m));
    if (d < best_d) {
      second_d = best_d;
      best_d = d;
      best = static_cast<int>(m);
    } else if (d < second_d) {
      second_d = d;
    }
  }
  return best;
}

Matrix kmeanspp_init(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix centers(k, x.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  centers.set_row(0, x.row(first));
  chosen[first] = true;

  std::vector<double> min_d(n);
  for (std::size_t i = 0; i < n; ++i) min_d[i] = squared_distance(x.row(i), centers.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : min_d) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d[i];
        if (acc > r && min_d[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // r landed in the rounding slack at the end; take the last candidate.
        for (std::size_t i = n; i-- > 0;)
          if (min_d[i] > 0.0) {
            pick = i;
            break;
          }
      }
    } else {
      // Every remaining point coincides with a chosen center.
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    chosen[pick] = true;
    centers.set_row(c, x.row(pick));
    for (std::size_t i = 0; i < n; ++i)
      min_d[i] = std::min(min_d[i], squared_distance(x.row(i), centers.row(c)));
  }
  return centers;
}

// Assignment fused with per-cluster sums. Sums are formed per fixed row block
// and merged in block order, so the bits do not depend on the thread count.
void assign_and_accumulate(const Matrix& centroids, const Matrix& x, Assignment& labels, std::vector<double>& dist,
                           Matrix& sums, std::vector<std::uint64_t>& counts, std::vector<double>* second = nullptr) {
  const std::size_t n = x.rows(), k = centroids.rows(), d = x.cols();
  labels.resize(n);
  dist.resize(n);
  if (second) second->resize(n);
  constexpr std::size_t kPartialBudget = std::size_t{1} << 22;  // doubles
  std::size_t block = 4096;
  const std::size_t per_block = std::max<std::size_t>(1, k * d);
  while (((n + block - 1) / block) * per_block > kPartialBudget) block *= 2;
  const std::size_t blocks = (n + block - 1) / block;
  std::vector<Matrix> partial(blocks);
  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      Matrix& acc = partial[b];
      acc = Matrix(k, d);
      for (std::size_t i = b * block, end = std::min(n, i + block); i < end; ++i) {
        const int l = second ? nearest_two(centroids, x.row(i), dist[i], (*second)[i])
                             : nearest(centroids, x.row(i), &dist[i]);
        labels[i] = l;
        auto dst = acc.row(static_cast<std::size_t>(l));
        const auto src = x.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    }
  }, 1);
  sums = Matrix(k, d);
  for (const Matrix& acc : partial)
    for (std::size_t m = 0; m < k; ++m) {
      auto dst = sums.row(m);
      const auto src = acc.row(m);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  counts.assign(k, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
}

double sum_in_order(const std::vector<double>& v) {
  double s = 0.0;
  for (double d : v) s += d;
  return s;
}


// Moves the farthest point of a multi-member cluster into each empty one.
bool repair_empty(Assignment& labels, std::vector<double>& dist, std::vector<std::uint64_t>& counts) {
  bool repaired = false;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m] != 0) continue;
    std::size_t far = labels.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (counts[static_cast<std::size_t>(labels[i])] <= 1) continue;
      if (dist[i] > far_d) {
        far_d = dist[i];
        far = i;
      }
    }
    if (far == labels.size()) break;  // cannot happen while n >= k
    --counts[static_cast<std::size_t>(labels[far])];
    labels[far] = static_cast<int>(m);
    dist[far] = 0.0;
    counts[m] = 1;
    repaired = true;
  }
  return repaired;
}

// Replaces centroids by sums / counts; returns the per-cluster movement.
Vector move_centroids(Matrix& centroids, const Matrix& sums, const std::vector<std::uint64_t>& counts) {
  Vector drift(centroids.rows(), 0.0);
  Vector mean(centroids.cols());
  for (std::size_t m = 0; m < centroids.rows(); ++m) {
    if (counts[m] == 0) continue;
    const double c = static_cast<double>(counts[m]);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = sums(m, j) / c;
    drift[m] = std::sqrt(squared_distance(mean, centroids.row(m)));
    centroids.set_row(m, mean);
  }
  return drift;
}

void resync_sums(const Matrix& x, const Assignment& labels, Matrix& sums) {
  const BatchMeans bm = batch_cluster_means(x, labels, sums.rows());
  for (std::size_t m = 0; m < sums.rows(); ++m) sums.set_row(m, bm.sums[m]);
}

void lloyd(const Matrix& x, const KMeansOptions& options, Matrix& centroids, KMeansResult& result,
           Assignment& labels) {
  std::vector<double> dist;
  Matrix sums;
  std::vector<std::uint64_t> counts;
  assign_and_accumulate(centroids, x, labels, dist, sums, counts);
  result.inertia_history.push_back(sum_in_order(dist));
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    if (repair_empty(labels, dist, counts)) resync_sums(x, labels, sums);
    const Vector drift = move_centroids(centroids, sums, counts);
    assign_and_accumulate(centroids, x, labels, dist, sums, counts);
    result.inertia_history.push_back(sum_in_order(dist));
    result.iterations = it + 1;
    if (*std::max_element(drift.begin(), drift.end()) < options.tol) break;
  }
}

// Lloyd with per-point distance bounds. A point keeps its cluster without a
// distance scan only when the bounds prove that cluster strictly nearest, so
// assignments follow the plain iteration.
void bounded_lloyd(const Matrix& x, const KMeansOptions& options, Matrix& centroids, KMeansResult& result,
                   Assignment& labels) {
  constexpr double kMargin = 1e-9;
  const std::size_t n = x.rows(), k = centroids.rows(), d = x.cols();
  std::vector<double> dist, second;
  Matrix sums;
  std::vector<std::uint64_t> counts;
  assign_and_accumulate(centroids, x, labels, dist, sums, counts, &second);
  result.inertia_history.push_back(sum_in_order(dist));
  std::vector<double> upper(n), lower(n);
  const auto reset_bounds = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      upper[i] = std::sqrt(dist[i]);
      lower[i] = std::sqrt(second[i]);
    }
  };
  reset_bounds();

  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<std::pair<std::size_t, int>>> moved(blocks);  // (row, previous cluster)
  Vector half_gap(k);

  for (std::size_t it = 0; it < options.max_iters; ++it) {
    bool reset = false;
    if (std::find(counts.begin(), counts.end(), 0u) != counts.end()) {
      for (std::size_t i = 0; i < n; ++i)
        dist[i] = squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
      if (repair_empty(labels, dist, counts)) {
        resync_sums(x, labels, sums);
        reset = true;
      }
    }
    const Vector drift = move_centroids(centroids, sums, counts);
    const double shift = *std::max_element(drift.begin(), drift.end());

    if (reset) {
      assign_and_accumulate(centroids, x, labels, dist, sums, counts, &second);
      reset_bounds();
    } else {
      std::size_t top = 0;
      for (std::size_t m = 1; m < k; ++m)
        if (drift[m] > drift[top]) top = m;
      double runner_up = 0.0;
      for (std::size_t m = 0; m < k; ++m)
        if (m != top) runner_up = std::max(runner_up, drift[m]);
      for (std::size_t m = 0; m < k; ++m) {
        double g = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < k; ++q)
          if (q != m) g = std::min(g, std::sqrt(squared_distance(centroids.row(m), centroids.row(q))));
        half_gap[m] = 0.5 * g;
      }
      parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
          moved[b].clear();
          for (std::size_t i = b * kBlock, end = std::min(n, i + kBlock); i < end; ++i) {
            const auto a = static_cast<std::size_t>(labels[i]);
            upper[i] += drift[a];
            lower[i] -= a == top ? runner_up : drift[top];
            const double z = std::max(lower[i], half_gap[a]) * (1.0 - kMargin);
            if (upper[i] * (1.0 + kMargin) < z) continue;
            upper[i] = std::sqrt(squared_distance(x.row(i), centroids.row(a)));
            if (upper[i] * (1.0 + kMargin) < z) continue;
            double d1 = 0.0, d2 = 0.0;
            const int best = nearest_two(centroids, x.row(i), d1, d2);
            upper[i] = std::sqrt(d1);
            lower[i] = std::sqrt(d2);
            if (best != labels[i]) {
              moved[b].emplace_back(i, labels[i]);
              labels[i] = best;
            }
          }
        }
      }, 1);
      // Apply membership changes in row order.
      for (const auto& block : moved)
        for (const auto& [i, from] : block) {
          const auto to = static_cast<std::size_t>(labels[i]);
          auto src = sums.row(static_cast<std::size_t>(from));
          auto dst = sums.row(to);
          const auto r = x.row(i);
          for (std::size_t j = 0; j < d; ++j) {
            src[j] -= r[j];
            dst[j] += r[j];
          }
          --counts[static_cast<std::size_t>(from)];
          ++counts[to];
        }
    }
    result.iterations = it + 1;
    if (shift < options.tol) break;
  }
  for (std::size_t i = 0; i < n; ++i)
    dist[i] = squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
  result.inertia_history.push_back(sum_in_order(dist));
}

}  // namespace

void ClusterModel::validate() const {
  if (centroids.rows() == 0) throw Error(ErrorCode::InvalidArgument, "cluster model has no centroids");
  if (counts.size() != centroids.rows())
    throw Error(ErrorCode::DimensionMismatch, "cluster counts do not match centroid rows");
  if (!all_finite(centroids.values())) throw Error(ErrorCode::NonFinite, "centroids contain NaN or Inf");
}

KMeansResult kmeans_fit(const Matrix& features, const KMeansOptions& options) {
  const std::size_t n = features.rows();
  const std::size_t k = options.clusters;
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "cluster count must be at least 1");
  if (n < k)
    throw Error(ErrorCode::TooFewSamples,
                std::to_string(n) + " samples cannot form " + std::to_string(k) + " clusters");
  if (!all_finite(features.values())) throw Error(ErrorCode::NonFinite, "features contain NaN or Inf");

  Rng rng(options.seed);
  KMeansResult result;
  Matrix centroids = kmeanspp_init(features, k, rng);
  Assignment labels;
  if (options.bounded)
    bounded_lloyd(features, options, centroids, result, labels);
  else
    lloyd(features, options, centroids, result, labels);

  result.model.centroids = std::move(centroids);
  result.model.counts.assign(k, 0);
  for (int l : labels) ++result.model.counts[static_cast<std::size_t>(l)];
  result.assignment = std::move(labels);
  return result;
}

int assign_nearest(const ClusterModel& model, std::span<const double> f) {
  if (model.size() == 0) throw Error(ErrorCode::InvalidArgument, "cluster model is empty");
  if (f.size() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "feature dimension differs from centroids");
  return nearest(model.centroids, f);
}

Assignment assign_all(const ClusterModel& model, const Matrix& features) {
  if (model.size() == 0) throw Error(ErrorCode::InvalidArgument, "cluster model is empty");
  if (features.rows() > 0 && features.cols() != model.dim())
    throw Error(ErrorCode::DimensionMismatch, "feature dimension differs from centroids");
  Assignment labels(features.rows());
  parallel_for(features.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) labels[i] = nearest(model.centroids, features.row(i));
  }, 256);
  return labels;
}

BatchMeans batch_cluster_means(const Matrix& features, const Assignment& assignment, std::size_t clusters) {
  if (assignment.size() != features.rows())
    throw Error(ErrorCode::DimensionMismatch, "assignment length differs from feature count");
  BatchMeans out;
  out.means = Matrix(clusters, features.cols());
  out.counts.assign(clusters, 0);
  out.sums.assign(clusters, Vector(features.cols(), 0.0));
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const int l = assignment[i];
    if (l < 0 || static_cast<std::size_t>(l) >= clusters)
      throw Error(ErrorCode::InvalidArgument, "assignment label out of range");
    auto& s = out.sums[static_cast<std::size_t>(l)];
    const auto r = features.row(i);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] += r[j];
    ++out.counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t m = 0; m < clusters; ++m) {
    if (out.counts[m] == 0) continue;
    const double c = static_cast<double>(out.counts[m]);
    auto row = out.means.row(m);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = out.sums[m][j] / c;
  }
  return out;
}

double inertia(const ClusterModel& model, const Matrix& features, const Assignment& assignment) {
  if (assignment.size() != features.rows())
    throw Error(ErrorCode::DimensionMismatch, "assignment length differs from feature count");
  double total = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto l = static_cast<std::size_t>(assignment[i]);
    if (l >= model.size()) throw Error(ErrorCode::InvalidArgument, "assignment label out of range");
    total += squared_distance(features.row(i), model.centroids.row(l));
  }
  return total;
}

}  // namespace umfc
