#pragma once

// Dense symmetric matrix primitives. Every matrix function (log, exp,
// fractional power, inverse square root) goes through a symmetric
// eigendecomposition so that all of them share one code path.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "manikernel/error.hpp"

namespace manikernel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace tol {
/// Relative symmetry tolerance; inputs within 10x of it are symmetrized.
inline constexpr double kSym = 1e-10;
/// Relative SPD floor factor applied to max(1, trace/d).
inline constexpr double kSpdFloor = 1e-12;
}  // namespace tol

struct EigenDecomp {
  Vector values;   // non-increasing
  Matrix vectors;  // orthonormal columns, column i pairs with values(i)
};

struct ThinSvd {
  Matrix u;  // n x r
  Vector s;  // r, non-increasing, >= 0
  Matrix v;  // r x r
};

/// Returns (S + S^T)/2, rejecting inputs whose asymmetry exceeds 10 * kSym
/// relative to max(1, ||S||_F).
inline Matrix symmetrized(const Matrix& s) {
  require(s.rows() == s.cols(), ErrorCode::NonSquare,
          "expected square matrix, got " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
  require(s.allFinite(), ErrorCode::NumericalError, "matrix has non-finite entries");
  const double scale = tol::kSym * std::max(1.0, s.norm());
  const double asym = s.rows() == 0 ? 0.0 : (s - s.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 10.0 * scale, ErrorCode::NonSymmetric,
          "asymmetry " + std::to_string(asym) + " exceeds tolerance");
  return 0.5 * (s + s.transpose());
}

inline bool is_symmetric(const Matrix& s, double rel_tol = tol::kSym) {
  if (s.rows() != s.cols()) return false;
  if (s.rows() == 0) return true;
  return (s - s.transpose()).cwiseAbs().maxCoeff() <= rel_tol * std::max(1.0, s.norm());
}

/// Symmetric eigendecomposition with eigenvalues sorted non-increasing.
inline EigenDecomp sym_eig(const Matrix& s) {
  const Matrix sym = symmetrized(s);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence,
          "symmetric eigensolver did not converge");
  // Eigen reports ascending order.
  EigenDecomp out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

inline double min_eigenvalue(const Matrix& s) {
  const Matrix sym = symmetrized(s);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence,
          "symmetric eigensolver did not converge");
  return solver.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& s) {
  const Matrix sym = symmetrized(s);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence,
          "symmetric eigensolver did not converge");
  return solver.eigenvalues()(solver.eigenvalues().size() - 1);
}

/// 1e-12 * max(1, trace(S)/d)
inline double spd_floor(const Matrix& s) {
  if (s.rows() == 0) return tol::kSpdFloor;
  return tol::kSpdFloor * std::max(1.0, s.trace() / static_cast<double>(s.rows()));
}

/// U f(Lambda) U^T, symmetrized.
template <typename F>
Matrix spectral_map(const EigenDecomp& eig, F&& f) {
  const Vector mapped = eig.values.unaryExpr(std::forward<F>(f));
  const Matrix out = eig.vectors * mapped.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

/// A symmetric positive definite matrix. Constructing from a raw matrix
/// validates strictly; `clamped()` records that an internal constructor had
/// to lift roundoff-level eigenvalues up to the SPD floor.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& raw) {
    const EigenDecomp eig = sym_eig(raw);
    const Matrix sym = 0.5 * (raw + raw.transpose());
    const double floor = spd_floor(sym);
    require(eig.values.size() > 0, ErrorCode::BadShape, "empty matrix");
    require(eig.values(eig.values.size() - 1) > floor, ErrorCode::NotSpd,
            "minimum eigenvalue " + std::to_string(eig.values(eig.values.size() - 1)) +
                " not above floor " + std::to_string(floor));
    m_ = sym;
  }

  /// For matrices already known to be SPD by construction (results of
  /// spectral maps with positive images). No validation.
  static SpdMatrix trusted(Matrix m, bool clamped = false) {
    SpdMatrix out;
    out.m_ = std::move(m);
    out.clamped_ = clamped;
    return out;
  }

  const Matrix& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }
  bool clamped() const noexcept { return clamped_; }

  static SpdMatrix identity(Index d) { return trusted(Matrix::Identity(d, d)); }

 private:
  SpdMatrix() = default;
  Matrix m_;
  bool clamped_ = false;
};

/// Maps eigenvalues through f and floors the images at the SPD floor of the
/// result, recording whether any clamping occurred.
template <typename F>
SpdMatrix spd_spectral_map(const EigenDecomp& eig, F&& f) {
  Vector mapped = eig.values.unaryExpr(std::forward<F>(f));
  require(mapped.allFinite(), ErrorCode::NumericalError, "spectral map produced non-finite values");
  const double mean = mapped.size() ? mapped.sum() / static_cast<double>(mapped.size()) : 0.0;
  const double floor = tol::kSpdFloor * std::max(1.0, mean);
  bool clamped = false;
  for (Index i = 0; i < mapped.size(); ++i) {
    if (mapped(i) <= floor) {
      mapped(i) = floor * 2.0;
      clamped = true;
    }
  }
  Matrix out = eig.vectors * mapped.asDiagonal() * eig.vectors.transpose();
  out = 0.5 * (out + out.transpose());
  return SpdMatrix::trusted(std::move(out), clamped);
}

inline Matrix spd_log(const SpdMatrix& s) {
  const EigenDecomp eig = sym_eig(s.matrix());
  const double floor = spd_floor(s.matrix());
  require(eig.values.minCoeff() > floor, ErrorCode::NotSpd, "spd_log of non-SPD matrix");
  return spectral_map(eig, [](double x) { return std::log(x); });
}

inline SpdMatrix spd_exp(const Matrix& a) {
  return spd_spectral_map(sym_eig(a), [](double x) { return std::exp(x); });
}

inline SpdMatrix spd_power(const SpdMatrix& s, double alpha) {
  require(alpha != 0.0, ErrorCode::ZeroExponent, "spd_power exponent must be non-zero");
  require(std::isfinite(alpha), ErrorCode::InvalidArgument, "spd_power exponent must be finite");
  const EigenDecomp eig = sym_eig(s.matrix());
  require(eig.values.minCoeff() > spd_floor(s.matrix()), ErrorCode::NotSpd, "spd_power of non-SPD matrix");
  return spd_spectral_map(eig, [alpha](double x) { return std::pow(x, alpha); });
}

/// S^{1/2} and S^{-1/2} from one eigendecomposition; eigenvalues floored at
/// the SPD floor before inversion.
inline std::pair<Matrix, Matrix> spd_sqrt_and_inv_sqrt(const SpdMatrix& s) {
  const EigenDecomp eig = sym_eig(s.matrix());
  const double floor = spd_floor(s.matrix());
  Matrix sq = spectral_map(eig, [floor](double x) { return std::sqrt(std::max(x, floor)); });
  Matrix isq = spectral_map(eig, [floor](double x) { return 1.0 / std::sqrt(std::max(x, floor)); });
  return {std::move(sq), std::move(isq)};
}

/// Lower-triangular L with positive diagonal and L L^T = S.
inline Matrix cholesky_lower(const Matrix& s) {
  const Matrix sym = symmetrized(s);
  Eigen::LLT<Matrix> llt(sym);
  require(llt.info() == Eigen::Success, ErrorCode::NotSpd, "Cholesky pivot failure");
  Matrix l = llt.matrixL();
  require((l.diagonal().array() > 0.0).all(), ErrorCode::NotSpd, "Cholesky produced non-positive pivot");
  return l;
}

inline Matrix cholesky_lower(const SpdMatrix& s) { return cholesky_lower(s.matrix()); }

/// log det S = 2 sum log L_ii
inline double log_det(const Matrix& s) {
  const Matrix l = cholesky_lower(s);
  return 2.0 * l.diagonal().array().log().sum();
}

inline ThinSvd thin_svd(const Matrix& a) {
  require(a.cols() >= 1 && a.rows() >= a.cols(), ErrorCode::BadShape,
          "thin_svd needs n >= r >= 1, got " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  require(a.allFinite(), ErrorCode::NumericalError, "thin_svd input has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  require(out.u.allFinite() && out.s.allFinite() && out.v.allFinite(), ErrorCode::NoConvergence,
          "thin_svd did not converge");
  out.s = out.s.cwiseMax(0.0);
  return out;
}

}  // namespace manikernel
