#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "manikernel/error.hpp"
#include "manikernel/matrix_ops.hpp"

namespace manikernel {

enum class SpdMetricKind { LogEuclidean, AffineInvariant, Cholesky, PowerEuclidean, RootSteinDivergence };

struct SpdMetric {
  SpdMetricKind kind = SpdMetricKind::LogEuclidean;
  double alpha = 0.5;  // PowerEuclidean only

  static SpdMetric log_euclidean() { return {SpdMetricKind::LogEuclidean}; }
  static SpdMetric affine_invariant() { return {SpdMetricKind::AffineInvariant}; }
  static SpdMetric cholesky() { return {SpdMetricKind::Cholesky}; }
  static SpdMetric power_euclidean(double alpha = 0.5) {
    require(alpha != 0.0 && std::isfinite(alpha), ErrorCode::ZeroExponent, "power-Euclidean alpha must be non-zero");
    return {SpdMetricKind::PowerEuclidean, alpha};
  }
  static SpdMetric root_stein() { return {SpdMetricKind::RootSteinDivergence}; }

  bool operator==(const SpdMetric&) const = default;
};

inline std::string_view metric_name(SpdMetricKind kind) {
  switch (kind) {
    case SpdMetricKind::LogEuclidean: return "log-euclidean";
    case SpdMetricKind::AffineInvariant: return "affine-invariant";
    case SpdMetricKind::Cholesky: return "cholesky";
    case SpdMetricKind::PowerEuclidean: return "power-euclidean";
    case SpdMetricKind::RootSteinDivergence: return "root-stein";
  }
  return "unknown";
}

inline std::optional<SpdMetricKind> parse_spd_metric(std::string_view name) {
  for (auto kind : {SpdMetricKind::LogEuclidean, SpdMetricKind::AffineInvariant, SpdMetricKind::Cholesky,
                    SpdMetricKind::PowerEuclidean, SpdMetricKind::RootSteinDivergence}) {
    if (metric_name(kind) == name) return kind;
  }
  return std::nullopt;
}

/// Validates (or, with `regularize`, repairs) a raw square matrix. With an
/// epsilon, the symmetrized input is shifted by epsilon * I when its minimum
/// eigenvalue does not clear the SPD floor; otherwise it is returned as is.
inline SpdMatrix make_spd(const Matrix& raw, std::optional<double> regularize = std::nullopt) {
  require(raw.rows() == raw.cols(), ErrorCode::NonSquare, "make_spd expects a square matrix");
  require(raw.rows() >= 1, ErrorCode::BadShape, "make_spd expects a non-empty matrix");
  if (!regularize) return SpdMatrix(raw);
  const double eps = *regularize;
  require(eps > 0.0 && std::isfinite(eps), ErrorCode::InvalidArgument, "regularization epsilon must be positive");
  Matrix sym = symmetrized(raw);
  if (min_eigenvalue(sym) > spd_floor(sym)) return SpdMatrix::trusted(std::move(sym));
  sym.diagonal().array() += eps;
  return SpdMatrix(sym);
}

namespace detail {

inline void check_same_dim(const SpdMatrix& a, const SpdMatrix& b) {
  require(a.dim() == b.dim(), ErrorCode::DimMismatch,
          "SPD dimensions differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
}

inline double root_stein(const SpdMatrix& s1, const SpdMatrix& s2) {
  const double radicand =
      log_det(0.5 * (s1.matrix() + s2.matrix())) - 0.5 * (log_det(s1.matrix()) + log_det(s2.matrix()));
  if (radicand < 0.0) {
    require(radicand >= -1e-12, ErrorCode::NumericalError,
            "root Stein radicand " + std::to_string(radicand) + " is negative");
    return 0.0;
  }
  return std::sqrt(radicand);
}

}  // namespace detail

/// Geodesic or non-geodesic distance between two SPD matrices.
inline double spd_distance(const SpdMetric& metric, const SpdMatrix& s1, const SpdMatrix& s2) {
  detail::check_same_dim(s1, s2);
  switch (metric.kind) {
    case SpdMetricKind::LogEuclidean:
      return (spd_log(s1) - spd_log(s2)).norm();
    case SpdMetricKind::AffineInvariant: {
      const auto [sq, isq] = spd_sqrt_and_inv_sqrt(s1);
      (void)sq;
      const Matrix inner = isq * s2.matrix() * isq;
      const EigenDecomp eig = sym_eig(0.5 * (inner + inner.transpose()));
      require(eig.values.minCoeff() > 0.0, ErrorCode::NumericalError, "affine-invariant inner matrix lost definiteness");
      return eig.values.array().log().matrix().norm();
    }
    case SpdMetricKind::Cholesky:
      return (cholesky_lower(s1) - cholesky_lower(s2)).norm();
    case SpdMetricKind::PowerEuclidean:
      require(metric.alpha != 0.0, ErrorCode::ZeroExponent, "power-Euclidean alpha must be non-zero");
      return (spd_power(s1, metric.alpha).matrix() - spd_power(s2, metric.alpha).matrix()).norm() /
             std::abs(metric.alpha);
    case SpdMetricKind::RootSteinDivergence:
      return detail::root_stein(s1, s2);
  }
  fail(ErrorCode::UnsupportedMetric, "unknown SPD metric");
}

namespace detail {

inline void check_point_set(std::span<const SpdMatrix> points) {
  require(!points.empty(), ErrorCode::EmptySet, "empty SPD point set");
  for (const auto& p : points) check_same_dim(points.front(), p);
}

inline Matrix mean_of(std::span<const Matrix> mats) {
  Matrix acc = Matrix::Zero(mats.front().rows(), mats.front().cols());
  for (const auto& m : mats) acc += m;  // fixed order
  return acc / static_cast<double>(mats.size());
}

}  // namespace detail

/// exp((1/m) sum log X_i)
inline SpdMatrix karcher_mean_log_euclidean(std::span<const SpdMatrix> points) {
  detail::check_point_set(points);
  std::vector<Matrix> logs;
  logs.reserve(points.size());
  for (const auto& p : points) logs.push_back(spd_log(p));
  return spd_exp(detail::mean_of(logs));
}

struct KarcherOptions {
  int max_iter = 200;
  double tol = 1e-10;
};

/// Norm of the affine-invariant Riemannian gradient direction at `mean`,
/// ||(1/m) sum log(M^{-1/2} X_i M^{-1/2})||_F. Zero at the Karcher mean.
inline double affine_invariant_gradient_norm(std::span<const SpdMatrix> points, const SpdMatrix& mean) {
  detail::check_point_set(points);
  detail::check_same_dim(points.front(), mean);
  const auto [sq, isq] = spd_sqrt_and_inv_sqrt(mean);
  (void)sq;
  Matrix acc = Matrix::Zero(mean.dim(), mean.dim());
  for (const auto& x : points) {
    const Matrix inner = isq * x.matrix() * isq;
    acc += spd_log(SpdMatrix::trusted(0.5 * (inner + inner.transpose())));
  }
  return (acc / static_cast<double>(points.size())).norm();
}

/// Karcher mean under the selected metric. Cholesky and power-Euclidean use
/// the closed form in their flat coordinates; affine-invariant runs the
/// fixed-point iteration M <- M^{1/2} exp(mean log(M^{-1/2} X M^{-1/2})) M^{1/2}
/// from the log-Euclidean mean until the tangent step norm drops below tol.
inline SpdMatrix karcher_mean_iterative(const SpdMetric& metric, std::span<const SpdMatrix> points,
                                        const KarcherOptions& opts = {}) {
  detail::check_point_set(points);
  switch (metric.kind) {
    case SpdMetricKind::LogEuclidean:
      return karcher_mean_log_euclidean(points);
    case SpdMetricKind::Cholesky: {
      std::vector<Matrix> factors;
      factors.reserve(points.size());
      for (const auto& p : points) factors.push_back(cholesky_lower(p));
      const Matrix l = detail::mean_of(factors);
      Matrix s = l * l.transpose();
      return SpdMatrix(0.5 * (s + s.transpose()));
    }
    case SpdMetricKind::PowerEuclidean: {
      require(metric.alpha != 0.0, ErrorCode::ZeroExponent, "power-Euclidean alpha must be non-zero");
      std::vector<Matrix> powers;
      powers.reserve(points.size());
      for (const auto& p : points) powers.push_back(spd_power(p, metric.alpha).matrix());
      return spd_power(SpdMatrix(detail::mean_of(powers)), 1.0 / metric.alpha);
    }
    case SpdMetricKind::AffineInvariant: {
      SpdMatrix mean = karcher_mean_log_euclidean(points);
      const double inv_m = 1.0 / static_cast<double>(points.size());
      auto objective = [&](const SpdMatrix& m) {
        const auto [sq, isq] = spd_sqrt_and_inv_sqrt(m);
        (void)sq;
        double acc = 0.0;
        for (const auto& x : points) {
          const Matrix inner = isq * x.matrix() * isq;
          acc += sym_eig(0.5 * (inner + inner.transpose())).values.array().log().square().sum();
        }
        return acc;
      };
      double f = objective(mean);
      for (int it = 0; it < opts.max_iter; ++it) {
        const auto [sq, isq] = spd_sqrt_and_inv_sqrt(mean);
        Matrix step = Matrix::Zero(mean.dim(), mean.dim());
        for (const auto& x : points) {
          const Matrix inner = isq * x.matrix() * isq;
          step += spd_log(SpdMatrix::trusted(0.5 * (inner + inner.transpose())));
        }
        step *= inv_m;
        const double step_sq = step.squaredNorm();
        if (std::sqrt(step_sq) < opts.tol) return mean;
        // the full step overshoots on widely spread data: backtrack until
        // the sum of squared distances drops (Armijo, c = 1e-4)
        double t = 1.0;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
          const Matrix next = sq * spd_exp(t * step).matrix() * sq;
          const SpdMatrix candidate = SpdMatrix::trusted(0.5 * (next + next.transpose()));
          const double fc = objective(candidate);
          if (fc <= f - 2e-4 * t * static_cast<double>(points.size()) * step_sq || halving == 39) {
            mean = candidate;
            f = fc;
            break;
          }
        }
      }
      fail(ErrorCode::NoConvergence,
           "affine-invariant Karcher mean did not converge in " + std::to_string(opts.max_iter) + " iterations");
    }
    case SpdMetricKind::RootSteinDivergence:
      fail(ErrorCode::UnsupportedMetric, "no Karcher mean for the root Stein divergence");
  }
  fail(ErrorCode::UnsupportedMetric, "unknown SPD metric");
}

/// (1/m) sum_i d^p(X_i, mean)
inline double dispersion_stat(const SpdMetric& metric, std::span<const SpdMatrix> points, double p,
                              const SpdMatrix& mean) {
  detail::check_point_set(points);
  detail::check_same_dim(points.front(), mean);
  require(p > 0.0, ErrorCode::InvalidArgument, "dispersion exponent p must be positive");
  double acc = 0.0;
  for (const auto& x : points) acc += std::pow(spd_distance(metric, x, mean), p);
  return acc / static_cast<double>(points.size());
}

}  // namespace manikernel
