#pragma once

// Seeded synthetic datasets with known labels.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "manikernel/kernel.hpp"
#include "manikernel/random.hpp"

namespace manikernel::synth {

struct LabeledPoints {
  PointSet points;
  std::vector<int> labels;
};

struct BlobOptions {
  int clusters = 3;
  int per_cluster = 40;
  Index dim = 3;
  double separation = 1.0;  // stddev of the log-space cluster centers
  double spread = 0.3;      // stddev of the log-space scatter around a center
  std::uint64_t seed = 0;
};

/// SPD blobs that are Gaussian in log space: X = exp(C_k + spread * E),
/// C_k and E symmetric with Gaussian entries. Points are listed cluster by
/// cluster.
inline LabeledPoints spd_blobs(const BlobOptions& opts) {
  Rng rng(opts.seed);
  std::vector<Matrix> centers;
  for (int c = 0; c < opts.clusters; ++c) centers.push_back(random_symmetric(opts.dim, rng, opts.separation));
  SpdSet pts;
  std::vector<int> labels;
  for (int c = 0; c < opts.clusters; ++c)
    for (int i = 0; i < opts.per_cluster; ++i) {
      pts.push_back(spd_exp(centers[static_cast<std::size_t>(c)] + random_symmetric(opts.dim, rng, opts.spread)));
      labels.push_back(c);
    }
  return {std::move(pts), std::move(labels)};
}

struct SubspaceClusterOptions {
  int clusters = 3;
  int per_cluster = 20;
  Index ambient = 10;
  Index rank = 2;
  double spread = 0.1;
  std::uint64_t seed = 0;
};

/// Subspaces scattered around random cluster centers: span(Y_k + spread * N).
inline LabeledPoints grassmann_clusters(const SubspaceClusterOptions& opts) {
  Rng rng(opts.seed);
  std::vector<Matrix> centers;
  for (int c = 0; c < opts.clusters; ++c) centers.push_back(random_grassmann(opts.ambient, opts.rank, rng).basis());
  GrassmannSet pts;
  std::vector<int> labels;
  for (int c = 0; c < opts.clusters; ++c)
    for (int i = 0; i < opts.per_cluster; ++i) {
      pts.push_back(make_grassmann(centers[static_cast<std::size_t>(c)] +
                                   random_gaussian(opts.ambient, opts.rank, rng, opts.spread)));
      labels.push_back(c);
    }
  return {std::move(pts), std::move(labels)};
}

/// Two concentric noisy rings in the plane (radii 1 and 2), labels 0 / 1,
/// interleaved in the output order.
inline LabeledPoints euclidean_rings(int per_ring, double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, noise);
  VectorSet pts;
  std::vector<int> labels;
  for (int i = 0; i < per_ring; ++i)
    for (int ring = 0; ring < 2; ++ring) {
      const double r = 1.0 + ring + jitter(rng);
      const double a = angle(rng);
      Vector v(2);
      v << r * std::cos(a), r * std::sin(a);
      pts.push_back(std::move(v));
      labels.push_back(ring);
    }
  return {std::move(pts), std::move(labels)};
}

/// Fraction of points whose cluster label maps to the true label under the
/// best one-to-one relabeling (exhaustive over permutations; k <= 8).
inline double clustering_accuracy(const std::vector<int>& truth, const std::vector<int>& found, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++confusion[static_cast<std::size_t>(found[i])][static_cast<std::size_t>(truth[i])];
  int best = 0;
  do {
    int hits = 0;
    for (int c = 0; c < k; ++c) hits += confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

/// 1 / median of the off-diagonal squared distances; a common bandwidth
/// default when nothing better is known.
inline double median_heuristic_gamma(const Matrix& d2) {
  std::vector<double> vals;
  for (Index i = 0; i < d2.rows(); ++i)
    for (Index j = i + 1; j < d2.cols(); ++j) vals.push_back(d2(i, j));
  if (vals.empty()) return 1.0;
  std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2), vals.end());
  const double med = vals[vals.size() / 2];
  return med > 0.0 ? 1.0 / med : 1.0;
}

}  // namespace manikernel::synth
