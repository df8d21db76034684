#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/QR>

#include "manikernel/error.hpp"
#include "manikernel/matrix_ops.hpp"

namespace manikernel {

namespace tol {
inline constexpr double kOrtho = 1e-10;
/// Singular values of Y1^T Y2 may exceed 1 by at most this much before the
/// input is considered broken.
inline constexpr double kCosineClamp = 1e-8;
inline constexpr double kRank = 1e-12;
}  // namespace tol

/// A point [Y] on G(r, n): an n x r matrix with orthonormal columns.
class GrassmannPoint {
 public:
  /// Accepts a basis that is already orthonormal within kOrtho.
  explicit GrassmannPoint(Matrix basis) : y_(std::move(basis)) {
    require(y_.cols() >= 1 && y_.rows() > y_.cols(), ErrorCode::BadShape,
            "Grassmann basis must be n x r with n > r >= 1, got " + std::to_string(y_.rows()) + "x" +
                std::to_string(y_.cols()));
    const double err = (y_.transpose() * y_ - Matrix::Identity(y_.cols(), y_.cols())).norm();
    require(err <= 1e3 * tol::kOrtho, ErrorCode::NotOrthonormal,
            "basis columns are not orthonormal (||Y^T Y - I||_F = " + std::to_string(err) + ")");
  }

  const Matrix& basis() const noexcept { return y_; }
  Index ambient_dim() const noexcept { return y_.rows(); }
  Index subspace_dim() const noexcept { return y_.cols(); }

 private:
  Matrix y_;
};

enum class GrassmannMetric { Projection, ArcLength, FubiniStudy, Chordal2Norm, ChordalFNorm };

inline std::string_view metric_name(GrassmannMetric metric) {
  switch (metric) {
    case GrassmannMetric::Projection: return "projection";
    case GrassmannMetric::ArcLength: return "arc-length";
    case GrassmannMetric::FubiniStudy: return "fubini-study";
    case GrassmannMetric::Chordal2Norm: return "chordal-2";
    case GrassmannMetric::ChordalFNorm: return "chordal-f";
  }
  return "unknown";
}

inline std::optional<GrassmannMetric> parse_grassmann_metric(std::string_view name) {
  for (auto m : {GrassmannMetric::Projection, GrassmannMetric::ArcLength, GrassmannMetric::FubiniStudy,
                 GrassmannMetric::Chordal2Norm, GrassmannMetric::ChordalFNorm}) {
    if (metric_name(m) == name) return m;
  }
  return std::nullopt;
}

/// Orthonormalizes the columns of `raw` by a thin QR factorization with a
/// non-negative R diagonal.
inline GrassmannPoint make_grassmann(const Matrix& raw) {
  require(raw.cols() >= 1 && raw.rows() > raw.cols(), ErrorCode::BadShape,
          "need n > r >= 1, got " + std::to_string(raw.rows()) + "x" + std::to_string(raw.cols()));
  const ThinSvd svd = thin_svd(raw);
  require(svd.s(0) > 0.0 && svd.s(svd.s.size() - 1) > tol::kRank * svd.s(0) * static_cast<double>(raw.rows()),
          ErrorCode::RankDeficient, "input does not have full column rank");
  Eigen::HouseholderQR<Matrix> qr(raw);
  Matrix q = qr.householderQ() * Matrix::Identity(raw.rows(), raw.cols());
  const Matrix r = qr.matrixQR().topRows(raw.cols()).triangularView<Eigen::Upper>();
  for (Index j = 0; j < raw.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return GrassmannPoint(std::move(q));
}

namespace detail {

inline void check_same_shape(const GrassmannPoint& a, const GrassmannPoint& b) {
  require(a.ambient_dim() == b.ambient_dim() && a.subspace_dim() == b.subspace_dim(), ErrorCode::DimMismatch,
          "Grassmann points live on different manifolds");
}

}  // namespace detail

/// Principal angles in [0, pi/2], ascending. Cosines come from the singular
/// values of Y1^T Y2; angles whose cosine exceeds 1/sqrt(2) are recovered
/// from the sines (singular values of Y2 - Y1 Y1^T Y2) instead, where arccos
/// loses accuracy.
inline Vector principal_angles(const GrassmannPoint& p1, const GrassmannPoint& p2) {
  detail::check_same_shape(p1, p2);
  const Matrix& y1 = p1.basis();
  const Matrix& y2 = p2.basis();
  const Matrix cross = y1.transpose() * y2;
  Eigen::JacobiSVD<Matrix> svd_cos(cross);
  Vector cosines = svd_cos.singularValues();  // descending
  require(cosines.allFinite(), ErrorCode::NoConvergence, "principal angle SVD failed");
  require(cosines.maxCoeff() <= 1.0 + tol::kCosineClamp, ErrorCode::NumericalError,
          "cosine of principal angle exceeds 1 by more than the clamp width");
  cosines = cosines.cwiseMin(1.0).cwiseMax(0.0);

  const Matrix residual = y2 - y1 * cross;
  Eigen::JacobiSVD<Matrix> svd_sin(residual);
  Vector sines = svd_sin.singularValues().reverse();  // ascending, pairs with descending cosines
  sines = sines.cwiseMin(1.0).cwiseMax(0.0);

  const Index r = cosines.size();
  Vector angles(r);
  for (Index i = 0; i < r; ++i) {
    angles(i) = cosines(i) * cosines(i) < 0.5 ? std::acos(cosines(i)) : std::asin(sines(i));
  }
  // the two branches can disagree by roundoff at the switch-over point
  std::sort(angles.data(), angles.data() + r);
  return angles;
}

/// r - ||Y1^T Y2||_F^2, clamped at zero: the squared projection distance
/// without forming any n x n matrix.
inline double projection_dist_sq_fast(const GrassmannPoint& p1, const GrassmannPoint& p2) {
  detail::check_same_shape(p1, p2);
  const double val = static_cast<double>(p1.subspace_dim()) - (p1.basis().transpose() * p2.basis()).squaredNorm();
  return std::max(0.0, val);
}

/// Distance between two subspaces; all metrics evaluated through the
/// principal angles.
inline double grassmann_distance(GrassmannMetric metric, const GrassmannPoint& p1, const GrassmannPoint& p2) {
  const Vector theta = principal_angles(p1, p2);
  switch (metric) {
    case GrassmannMetric::Projection:
      return std::sqrt(theta.array().sin().square().sum());
    case GrassmannMetric::ArcLength:
      return theta.norm();
    case GrassmannMetric::FubiniStudy: {
      const double prod = theta.array().cos().prod();
      return std::acos(std::clamp(prod, 0.0, 1.0));
    }
    case GrassmannMetric::Chordal2Norm:
      return 2.0 * (0.5 * theta.array()).sin().maxCoeff();
    case GrassmannMetric::ChordalFNorm:
      return 2.0 * std::sqrt((0.5 * theta.array()).sin().square().sum());
  }
  fail(ErrorCode::UnsupportedMetric, "unknown Grassmann metric");
}

/// Span of the r leading left singular vectors of F (columns are the
/// descriptors). Each basis column is signed so its largest-magnitude entry
/// is positive.
inline GrassmannPoint subspace_from_vectors(const Matrix& f, Index r) {
  require(r >= 1 && r < std::min(f.rows(), f.cols()), ErrorCode::BadShape,
          "need 1 <= r < min(n, p), got r=" + std::to_string(r) + " for " + std::to_string(f.rows()) + "x" +
              std::to_string(f.cols()));
  require(f.allFinite(), ErrorCode::NumericalError, "descriptor matrix has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  require(s(0) > 0.0 && s(r - 1) > tol::kRank * s(0) * static_cast<double>(std::max(f.rows(), f.cols())),
          ErrorCode::RankDeficient, "descriptor matrix has rank below r");
  Matrix y = svd.matrixU().leftCols(r);
  for (Index j = 0; j < r; ++j) {
    Index arg = 0;
    y.col(j).cwiseAbs().maxCoeff(&arg);
    if (y(arg, j) < 0.0) y.col(j) = -y.col(j);
  }
  return GrassmannPoint(std::move(y));
}

}  // namespace manikernel
