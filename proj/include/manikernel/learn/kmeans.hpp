#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "manikernel/learn/common.hpp"
#include "manikernel/random.hpp"

namespace manikernel::learn {

struct KMeansOptions {
  int k = 2;
  int restarts = 20;
  int max_iter = 100;
  std::uint64_t seed = 0;
};

struct ClusterResult {
  std::vector<int> labels;
  double energy = 0.0;  // sum of squared RKHS distances to assigned centroids
  int restarts_used = 0;
  int best_restart = 0;
  std::vector<double> energy_trace;  // per iteration of the winning run
};

/// Squared RKHS distance of every point to the centroid of every cluster:
/// K_xx - (2/|c|) sum_{j in c} K_xj + (1/|c|^2) sum_{i,j in c} K_ij.
/// Empty clusters get +infinity.
inline Matrix rkhs_centroid_distances(const Matrix& k, const std::vector<int>& labels, int clusters) {
  const Index m = k.rows();
  Matrix member = Matrix::Zero(m, clusters);
  Vector sizes = Vector::Zero(clusters);
  for (Index i = 0; i < m; ++i) {
    member(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    sizes(labels[static_cast<std::size_t>(i)]) += 1.0;
  }
  const Matrix km = k * member;  // m x clusters: sum_{j in c} K_xj
  Matrix out(m, clusters);
  for (int c = 0; c < clusters; ++c) {
    if (sizes(c) == 0.0) {
      out.col(c).setConstant(std::numeric_limits<double>::infinity());
      continue;
    }
    const double self = member.col(c).dot(km.col(c)) / (sizes(c) * sizes(c));
    out.col(c) = (k.diagonal() - (2.0 / sizes(c)) * km.col(c)).array() + self;
  }
  return out;
}

inline double clustering_energy(const Matrix& k, const std::vector<int>& labels, int clusters) {
  const Matrix dist = rkhs_centroid_distances(k, labels, clusters);
  double e = 0.0;
  for (Index i = 0; i < k.rows(); ++i) e += std::max(0.0, dist(i, labels[static_cast<std::size_t>(i)]));
  return e;
}

namespace detail {

struct KMeansRun {
  std::vector<int> labels;
  double energy;
  std::vector<double> trace;
};

/// Single-point transfers: moving x from a to b changes the energy by
/// |b|/(|b|+1) d(x,b) - |a|/(|a|-1) d(x,a). Applies the best strictly
/// improving move per sweep until none is left.
inline void hartigan_refine(const Matrix& k, std::vector<int>& labels, int clusters, int max_sweeps,
                            std::vector<double>& trace) {
  const Index m = k.rows();
  for (int sweep = 0; sweep < max_sweeps * static_cast<int>(m); ++sweep) {
    const Matrix dist = rkhs_centroid_distances(k, labels, clusters);
    std::vector<double> sizes(static_cast<std::size_t>(clusters), 0.0);
    for (int l : labels) sizes[static_cast<std::size_t>(l)] += 1.0;
    double best_delta = 0.0;
    Index best_i = -1;
    int best_c = -1;
    for (Index i = 0; i < m; ++i) {
      const int a = labels[static_cast<std::size_t>(i)];
      const double na = sizes[static_cast<std::size_t>(a)];
      if (na <= 1.0) continue;
      const double gain = na / (na - 1.0) * std::max(0.0, dist(i, a));
      for (int b = 0; b < clusters; ++b) {
        if (b == a) continue;
        const double nb = sizes[static_cast<std::size_t>(b)];
        const double cost = nb == 0.0 ? 0.0 : nb / (nb + 1.0) * std::max(0.0, dist(i, b));
        const double delta = cost - gain;
        if (delta < best_delta - 1e-12 * std::max(1.0, gain)) {
          best_delta = delta;
          best_i = i;
          best_c = b;
        }
      }
    }
    if (best_i < 0) return;
    labels[static_cast<std::size_t>(best_i)] = best_c;
    trace.push_back(clustering_energy(k, labels, clusters));
  }
}

inline KMeansRun kmeans_single(const Matrix& k, int clusters, int max_iter, Rng rng) {
  const Index m = k.rows();
  // k distinct seed points by D^2 sampling in the RKHS, every point joins its nearest seed
  std::vector<Index> order;
  order.push_back(std::uniform_int_distribution<Index>(0, m - 1)(rng));
  std::vector<double> d2(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
  while (static_cast<int>(order.size()) < clusters) {
    const Index s = order.back();
    for (Index i = 0; i < m; ++i)
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], std::max(0.0, k(i, i) - 2.0 * k(i, s) + k(s, s)));
    for (Index chosen : order) d2[static_cast<std::size_t>(chosen)] = 0.0;
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Index next = -1;
    if (total > 0.0) {
      next = std::discrete_distribution<Index>(d2.begin(), d2.end())(rng);
    } else {
      // all remaining points coincide with a seed: take any unused index
      std::vector<Index> unused;
      for (Index i = 0; i < m; ++i)
        if (std::find(order.begin(), order.end(), i) == order.end()) unused.push_back(i);
      next = unused[std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng)];
    }
    order.push_back(next);
  }
  std::vector<int> labels(static_cast<std::size_t>(m), 0);
  for (Index i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < clusters; ++c) {
      const Index s = order[static_cast<std::size_t>(c)];
      const double d = k(i, i) - 2.0 * k(i, s) + k(s, s);
      if (d < best) {
        best = d;
        labels[static_cast<std::size_t>(i)] = c;
      }
    }
  }
  for (int c = 0; c < clusters; ++c) labels[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])] = c;

  KMeansRun run{labels, 0.0, {}};
  for (int it = 0; it < max_iter; ++it) {
    Matrix dist = rkhs_centroid_distances(k, run.labels, clusters);
    double energy = 0.0;
    for (Index i = 0; i < m; ++i) energy += std::max(0.0, dist(i, run.labels[static_cast<std::size_t>(i)]));
    run.trace.push_back(energy);

    std::vector<int> next(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
      // lowest index among the nearest, except that a point already sitting
      // in a nearest cluster stays put (otherwise equal-distance points can cycle)
      const int current = run.labels[static_cast<std::size_t>(i)];
      int best = 0;
      for (int c = 1; c < clusters; ++c)
        if (dist(i, c) < dist(i, best)) best = c;
      next[static_cast<std::size_t>(i)] = dist(i, current) <= dist(i, best) ? current : best;
    }
    // repair empty clusters with the point farthest from its own centroid
    std::vector<int> counts(static_cast<std::size_t>(clusters), 0);
    for (int l : next) ++counts[static_cast<std::size_t>(l)];
    for (int c = 0; c < clusters; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      const Matrix d_next = rkhs_centroid_distances(k, next, clusters);
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < m; ++i) {
        const int li = next[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(li)] <= 1) continue;
        if (d_next(i, li) > far_d) {
          far_d = d_next(i, li);
          far = i;
        }
      }
      if (far < 0) break;
      --counts[static_cast<std::size_t>(next[static_cast<std::size_t>(far)])];
      next[static_cast<std::size_t>(far)] = c;
      ++counts[static_cast<std::size_t>(c)];
    }
    if (next == run.labels) break;
    run.labels = std::move(next);
  }
  hartigan_refine(k, run.labels, clusters, max_iter, run.trace);
  run.energy = clustering_energy(k, run.labels, clusters);
  if (run.trace.empty() || run.trace.back() != run.energy) run.trace.push_back(run.energy);
  return run;
}

}  // namespace detail

/// Lloyd-style k-means in the RKHS of a precomputed Gram matrix. Runs
/// `restarts` seeded initializations (restart i is seeded with seed + i)
/// and keeps the lowest final energy; ties go to the lowest restart index.
inline ClusterResult kernel_kmeans(const Matrix& gram, const KMeansOptions& opts = {}) {
  const Matrix k = validated_gram(gram);
  const Index m = k.rows();
  require(opts.k >= 1 && opts.k <= m, ErrorCode::BadK,
          "k must lie in [1, m], got k=" + std::to_string(opts.k) + " for m=" + std::to_string(m));
  require(opts.restarts >= 1, ErrorCode::InvalidArgument, "need at least one restart");
  require(opts.max_iter >= 1, ErrorCode::InvalidArgument, "need at least one iteration");

  ClusterResult best;
  best.energy = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    detail::KMeansRun run = detail::kmeans_single(k, opts.k, opts.max_iter, Rng(opts.seed + static_cast<std::uint64_t>(r)));
    if (run.energy < best.energy) {
      best.labels = std::move(run.labels);
      best.energy = run.energy;
      best.energy_trace = std::move(run.trace);
      best.best_restart = r;
    }
  }
  best.restarts_used = opts.restarts;
  return best;
}

}  // namespace manikernel::learn
