#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "manikernel/error.hpp"
#include "manikernel/matrix_ops.hpp"

namespace manikernel::learn {

/// PSD tolerance used when algorithms audit an incoming Gram matrix:
/// 1e-8 * m * max(1, max |K_ii|).
inline double gram_psd_tolerance(const Matrix& k) {
  const double scale = k.rows() ? std::max(1.0, k.diagonal().cwiseAbs().maxCoeff()) : 1.0;
  return 1e-8 * static_cast<double>(k.rows()) * scale;
}

/// Rejects non-square, asymmetric, or (beyond tolerance) indefinite kernels.
inline Matrix validated_gram(const Matrix& k) {
  require(k.rows() == k.cols() && k.rows() >= 1, ErrorCode::NonSquare, "Gram matrix must be square and non-empty");
  Matrix sym = symmetrized(k);
  const double lo = min_eigenvalue(sym);
  require(lo >= -gram_psd_tolerance(sym), ErrorCode::NotPsd,
          "Gram matrix has eigenvalue " + std::to_string(lo) + " below tolerance");
  return sym;
}

/// Index of the largest |v_i| (lowest index on ties).
inline Index argmax_abs(const Eigen::Ref<const Vector>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  return best;
}

/// Flips each column so its largest-magnitude entry is positive.
inline void canonicalize_column_signs(Matrix& coords, Matrix* companion = nullptr) {
  for (Index c = 0; c < coords.cols(); ++c) {
    const Index arg = argmax_abs(coords.col(c));
    if (coords(arg, c) < 0.0) {
      coords.col(c) = -coords.col(c);
      if (companion) companion->col(c) = -companion->col(c);
    }
  }
}

}  // namespace manikernel::learn
