#pragma once

#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "manikernel/error.hpp"
#include "manikernel/grassmann.hpp"
#include "manikernel/matrix_ops.hpp"
#include "manikernel/spd.hpp"

namespace manikernel {

/// Plain Frobenius/Euclidean distance on whatever the points are stored as.
struct EuclideanMetric {
  bool operator==(const EuclideanMetric&) const = default;
};

using MetricSelector = std::variant<SpdMetric, GrassmannMetric, EuclideanMetric>;

inline std::string metric_name(const MetricSelector& metric) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SpdMetric>) {
          return std::string(metric_name(m.kind));
        } else if constexpr (std::is_same_v<T, GrassmannMetric>) {
          return std::string(metric_name(m));
        } else {
          return "euclidean";
        }
      },
      metric);
}

/// k(x, y) = exp(-gamma d^2(x, y))
struct KernelSpec {
  MetricSelector metric;
  double gamma = 1.0;

  KernelSpec(MetricSelector m, double g) : metric(m), gamma(g) {
    require(g > 0.0 && std::isfinite(g), ErrorCode::BadGamma, "gamma must be positive and finite");
  }
};

using SpdSet = std::vector<SpdMatrix>;
using GrassmannSet = std::vector<GrassmannPoint>;
using VectorSet = std::vector<Vector>;
using PointSet = std::variant<SpdSet, GrassmannSet, VectorSet>;

inline std::size_t point_count(const PointSet& points) {
  return std::visit([](const auto& v) { return v.size(); }, points);
}

/// Thread count used by the pairwise builders; MANIKERNEL_THREADS overrides
/// the default of 1.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("MANIKERNEL_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1 && n <= 256) return static_cast<unsigned>(n);
  }
  return 1;
}

namespace detail {

/// Runs body(i) for i in [0, n) over `threads` workers using static row
/// striping. Each row writes disjoint entries so the result does not depend
/// on scheduling.
template <typename Body>
void parallel_rows(Index n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (Index i = t; i < n; i += threads) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

template <typename Dist>
Matrix pairwise(Index m, Dist&& dist, unsigned threads) {
  Matrix out = Matrix::Zero(m, m);
  parallel_rows(m, threads, [&](Index i) {
    for (Index j = i + 1; j < m; ++j) out(i, j) = dist(i, j);
  });
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) out(j, i) = out(i, j);
  return out;
}

/// Squared Euclidean distances between rows of a feature matrix, computed
/// as explicit differences rather than through the Gram trick so that the
/// zero diagonal and small distances stay exact.
inline Matrix pairwise_sq_euclidean(const std::vector<Vector>& feats, unsigned threads) {
  const Index m = static_cast<Index>(feats.size());
  return pairwise(m, [&](Index i, Index j) { return (feats[i] - feats[j]).squaredNorm(); }, threads);
}

inline Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline void check_homogeneous(const SpdSet& pts) {
  for (const auto& p : pts) check_same_dim(pts.front(), p);
}
inline void check_homogeneous(const GrassmannSet& pts) {
  for (const auto& p : pts) check_same_shape(pts.front(), p);
}
inline void check_homogeneous(const VectorSet& pts) {
  for (const auto& p : pts)
    require(p.size() == pts.front().size(), ErrorCode::DimMismatch, "vector dimensions differ");
}

inline Matrix sq_distances(const SpdMetric& metric, const SpdSet& pts, unsigned threads) {
  std::vector<Vector> feats;
  feats.reserve(pts.size());
  switch (metric.kind) {
    case SpdMetricKind::LogEuclidean:
      for (const auto& p : pts) feats.push_back(flatten(spd_log(p)));
      return pairwise_sq_euclidean(feats, threads);
    case SpdMetricKind::Cholesky:
      for (const auto& p : pts) feats.push_back(flatten(cholesky_lower(p)));
      return pairwise_sq_euclidean(feats, threads);
    case SpdMetricKind::PowerEuclidean:
      require(metric.alpha != 0.0, ErrorCode::ZeroExponent, "power-Euclidean alpha must be non-zero");
      for (const auto& p : pts) feats.push_back(flatten(spd_power(p, metric.alpha).matrix()) / std::abs(metric.alpha));
      return pairwise_sq_euclidean(feats, threads);
    case SpdMetricKind::AffineInvariant:
    case SpdMetricKind::RootSteinDivergence:
      return pairwise(
          static_cast<Index>(pts.size()),
          [&](Index i, Index j) {
            const double d = spd_distance(metric, pts[i], pts[j]);
            return d * d;
          },
          threads);
  }
  fail(ErrorCode::UnsupportedMetric, "unknown SPD metric");
}

inline Matrix sq_distances(GrassmannMetric metric, const GrassmannSet& pts, unsigned threads) {
  const Index m = static_cast<Index>(pts.size());
  if (metric == GrassmannMetric::Projection) {
    return pairwise(m, [&](Index i, Index j) { return projection_dist_sq_fast(pts[i], pts[j]); }, threads);
  }
  return pairwise(
      m,
      [&](Index i, Index j) {
        const double d = grassmann_distance(metric, pts[i], pts[j]);
        return d * d;
      },
      threads);
}

}  // namespace detail

/// Matrix of squared distances d^2(p_i, p_j) under the selected metric.
inline Matrix squared_distance_matrix(const MetricSelector& metric, const PointSet& points,
                                      unsigned threads = default_thread_count()) {
  require(point_count(points) >= 1, ErrorCode::EmptySet, "empty point set");
  return std::visit(
      [&](const auto& m, const auto& pts) -> Matrix {
        using M = std::decay_t<decltype(m)>;
        using P = std::decay_t<decltype(pts)>;
        detail::check_homogeneous(pts);
        if constexpr (std::is_same_v<M, SpdMetric> && std::is_same_v<P, SpdSet>) {
          return detail::sq_distances(m, pts, threads);
        } else if constexpr (std::is_same_v<M, GrassmannMetric> && std::is_same_v<P, GrassmannSet>) {
          return detail::sq_distances(m, pts, threads);
        } else if constexpr (std::is_same_v<M, EuclideanMetric> && std::is_same_v<P, SpdSet>) {
          std::vector<Vector> feats;
          for (const auto& p : pts) feats.push_back(detail::flatten(p.matrix()));
          return detail::pairwise_sq_euclidean(feats, threads);
        } else if constexpr (std::is_same_v<M, EuclideanMetric> && std::is_same_v<P, VectorSet>) {
          return detail::pairwise_sq_euclidean(pts, threads);
        } else {
          fail(ErrorCode::UnsupportedMetric, "metric " + metric_name(MetricSelector(m)) +
                                                 " does not apply to this kind of point set");
        }
      },
      metric, points);
}

/// Single kernel evaluation.
template <typename Point>
double gaussian_kernel_value(const KernelSpec& spec, const Point& x, const Point& y) {
  double d = 0.0;
  if constexpr (std::is_same_v<Point, SpdMatrix>) {
    if (const auto* m = std::get_if<SpdMetric>(&spec.metric)) {
      d = spd_distance(*m, x, y);
    } else if (std::holds_alternative<EuclideanMetric>(spec.metric)) {
      require(x.dim() == y.dim(), ErrorCode::DimMismatch, "SPD dimensions differ");
      d = (x.matrix() - y.matrix()).norm();
    } else {
      fail(ErrorCode::UnsupportedMetric, "Grassmann metric applied to SPD points");
    }
  } else if constexpr (std::is_same_v<Point, GrassmannPoint>) {
    const auto* m = std::get_if<GrassmannMetric>(&spec.metric);
    require(m != nullptr, ErrorCode::UnsupportedMetric, "non-Grassmann metric applied to Grassmann points");
    d = grassmann_distance(*m, x, y);
  } else {
    require(std::holds_alternative<EuclideanMetric>(spec.metric), ErrorCode::UnsupportedMetric,
            "manifold metric applied to plain vectors");
    require(x.size() == y.size(), ErrorCode::DimMismatch, "vector dimensions differ");
    d = (x - y).norm();
  }
  return std::exp(-spec.gamma * d * d);
}

struct GramMatrix {
  Matrix entries;
  KernelSpec spec;
  std::optional<double> min_eigen;

  Index size() const noexcept { return entries.rows(); }
};

/// exp(-gamma D2) entrywise, with the diagonal pinned to exactly 1.
inline Matrix gaussian_from_sq_distances(const Matrix& d2, double gamma) {
  Matrix k = (-gamma * d2.array()).exp().matrix();
  k.diagonal().setOnes();
  return k;
}

inline GramMatrix gram_matrix(const KernelSpec& spec, const PointSet& points, bool audit = false,
                              unsigned threads = default_thread_count()) {
  GramMatrix out{gaussian_from_sq_distances(squared_distance_matrix(spec.metric, points, threads), spec.gamma), spec,
                 std::nullopt};
  if (audit) out.min_eigen = min_eigenvalue(out.entries);
  return out;
}

/// Kernel evaluations between every training point (rows) and every query
/// point (columns): the m x t matrix consumed by out-of-sample predictors.
inline Matrix cross_kernel(const KernelSpec& spec, const PointSet& train, const PointSet& query) {
  require(train.index() == query.index(), ErrorCode::DimMismatch, "training and query points differ in kind");
  const Index m = static_cast<Index>(point_count(train));
  const Index t = static_cast<Index>(point_count(query));
  Matrix out(m, t);
  std::visit(
      [&](const auto& tr) {
        using P = std::decay_t<decltype(tr)>;
        const auto& q = std::get<P>(query);
        for (Index i = 0; i < m; ++i)
          for (Index j = 0; j < t; ++j) out(i, j) = gaussian_kernel_value(spec, tr[i], q[j]);
      },
      train);
  return out;
}

/// Linear projection kernel ||Y_i^T Y_j||_F^2 (no bandwidth), kept for
/// baseline comparisons on Grassmann data.
inline Matrix projection_linear_gram(const GrassmannSet& points) {
  require(!points.empty(), ErrorCode::EmptySet, "empty point set");
  detail::check_homogeneous(points);
  const Index m = static_cast<Index>(points.size());
  Matrix k(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i; j < m; ++j) k(i, j) = k(j, i) = (points[i].basis().transpose() * points[j].basis()).squaredNorm();
  return k;
}

}  // namespace manikernel
