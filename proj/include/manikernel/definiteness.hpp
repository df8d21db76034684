#pragma once

// Executable definiteness tests: PSD / conditionally-negative-definite
// matrix checks and a seeded randomized search for Gram matrices that are
// not positive semi-definite.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "manikernel/error.hpp"
#include "manikernel/kernel.hpp"
#include "manikernel/matrix_ops.hpp"
#include "manikernel/random.hpp"

namespace manikernel {

struct DefinitenessCheck {
  bool passed = false;
  double extreme_eigen = 0.0;  // min eigenvalue for psd_check, max eigenvalue of PMP for cnd_check
};

/// PSD iff the smallest eigenvalue is >= -tol.
inline DefinitenessCheck psd_check(const Matrix& m, double tol) {
  const double lo = min_eigenvalue(m);
  return {lo >= -tol, lo};
}

/// P M P with P = I - (1/m) 1 1^T
inline Matrix center_both_sides(const Matrix& m) {
  const Matrix sym = symmetrized(m);
  const Vector row_mean = sym.rowwise().mean();
  const Vector col_mean = sym.colwise().mean().transpose();
  const double all_mean = sym.mean();
  Matrix out = sym;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean.transpose();
  out.array() += all_mean;
  return 0.5 * (out + out.transpose());
}

/// Conditionally negative semi-definite iff every eigenvalue of P M P is
/// <= tol.
inline DefinitenessCheck cnd_check(const Matrix& m, double tol) {
  const double hi = max_eigenvalue(center_both_sides(m));
  return {hi <= tol, hi};
}

/// Where the search draws its random point sets from.
struct SearchTarget {
  MetricSelector metric;
  Index dim = 3;   // SPD: d; Grassmann: ambient n; Euclidean: vector length
  Index rank = 1;  // Grassmann only: subspace dimension r

  bool is_grassmann() const { return std::holds_alternative<GrassmannMetric>(metric); }
  bool is_spd() const { return std::holds_alternative<SpdMetric>(metric); }
};

struct SearchConfig {
  std::vector<double> gamma_grid;
  Index points_per_trial = 40;
  int trials = 50;
  std::uint64_t seed = 0;
};

enum class Verdict { PsdWithinTol, WitnessFound };

inline std::string_view verdict_name(Verdict v) {
  return v == Verdict::PsdWithinTol ? "PsdWithinTol" : "WitnessFound";
}

struct DefinitenessReport {
  Verdict verdict = Verdict::PsdWithinTol;
  double min_eigen = std::numeric_limits<double>::infinity();
  double gamma = 0.0;      // gamma at which min_eigen was observed
  double witness_tol = 0.0;
  int trials_run = 0;
  std::optional<int> witness_trial;  // trial index; its stream is derived_rng(seed, trial)
  std::optional<PointSet> witness_points;
};

/// 1e-7 * m
inline double witness_tolerance(Index m) { return 1e-7 * static_cast<double>(m); }

/// Draws the point set for one trial.
inline PointSet sample_points(const SearchTarget& target, Index m, Rng& rng) {
  if (target.is_spd()) {
    SpdSet pts;
    pts.reserve(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) pts.push_back(random_spd(target.dim, rng));
    return pts;
  }
  if (target.is_grassmann()) {
    GrassmannSet pts;
    pts.reserve(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) pts.push_back(random_grassmann(target.dim, target.rank, rng));
    return pts;
  }
  VectorSet pts;
  pts.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) pts.push_back(random_gaussian(target.dim, 1, rng).col(0));
  return pts;
}

/// Smallest eigenvalue of exp(-gamma D2) evaluated in extended precision.
inline double min_eigen_extended(const Matrix& d2, double gamma) {
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMatrix ld2 = d2.cast<long double>();
  LMatrix k = (-static_cast<long double>(gamma) * ld2.array()).exp().matrix();
  k.diagonal().setOnes();
  k = (0.5L * (k + k.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<LMatrix> solver(k, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence, "extended-precision eigensolver failed");
  return static_cast<double>(solver.eigenvalues()(0));
}

/// Samples `trials` random point sets and audits the Gaussian Gram matrix of
/// each at every gamma in the grid. Stops at the first trial (lowest index)
/// holding a Gram matrix with min eigenvalue < -1e-7 m, confirmed by an
/// extended-precision recomputation. Trial t draws from derived_rng(seed, t).
inline DefinitenessReport definiteness_search(const SearchTarget& target, const SearchConfig& config) {
  require(!config.gamma_grid.empty(), ErrorCode::BadGrid, "gamma grid is empty");
  for (double g : config.gamma_grid)
    require(g > 0.0 && std::isfinite(g), ErrorCode::BadGrid, "gamma grid entries must be positive");
  require(config.points_per_trial >= 3, ErrorCode::InvalidArgument, "need at least 3 points per trial");
  require(config.trials >= 1, ErrorCode::InvalidArgument, "need at least one trial");
  if (target.is_grassmann())
    require(target.rank >= 1 && target.dim > target.rank, ErrorCode::BadShape, "Grassmann target needs n > r >= 1");
  else
    require(target.dim >= 1, ErrorCode::BadShape, "target dimension must be positive");

  const Index m = config.points_per_trial;
  DefinitenessReport report;
  report.witness_tol = witness_tolerance(m);
  for (int t = 0; t < config.trials; ++t) {
    Rng rng = derived_rng(config.seed, static_cast<std::uint64_t>(t));
    PointSet pts = sample_points(target, m, rng);
    const Matrix d2 = squared_distance_matrix(target.metric, pts, 1);
    report.trials_run = t + 1;
    for (double gamma : config.gamma_grid) {
      const double lo = min_eigenvalue(gaussian_from_sq_distances(d2, gamma));
      if (lo < report.min_eigen) {
        report.min_eigen = lo;
        report.gamma = gamma;
      }
      if (lo < -report.witness_tol) {
        const double confirmed = min_eigen_extended(d2, gamma);
        if (confirmed < -report.witness_tol) {
          report.verdict = Verdict::WitnessFound;
          report.min_eigen = confirmed;
          report.gamma = gamma;
          report.witness_trial = t;
          report.witness_points = std::move(pts);
          return report;
        }
      }
    }
  }
  return report;
}

}  // namespace manikernel
