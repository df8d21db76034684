#pragma once

#include <vector>

#include "manikernel/learn/common.hpp"

namespace manikernel::learn {

/// Low-dimensional Euclidean coordinates of the training points.
struct Embedding {
  Matrix coords;       // m x l
  Vector eigenvalues;  // l
};

struct KernelPcaModel {
  Embedding embedding;
  Matrix alphas;      // m x l expansion coefficients; zero for null directions
  Vector col_means;   // column means of the uncentered training Gram
  double grand_mean = 0.0;

  /// Projects query points given their kernel columns against the training
  /// set (m x t) onto the principal directions; returns t x l.
  Matrix project(const Matrix& kernel_columns) const {
    require(kernel_columns.rows() == col_means.size(), ErrorCode::DimMismatch,
            "kernel columns must have one row per training point");
    Matrix centered = kernel_columns;
    centered.colwise() -= col_means;
    const Vector query_means = kernel_columns.colwise().mean().transpose();
    centered.rowwise() -= query_means.transpose();
    centered.array() += grand_mean;
    return centered.transpose() * alphas;
  }
};

/// H K H with H = I - (1/m) 1 1^T
inline Matrix double_center(const Matrix& k) {
  const Vector col_means = k.colwise().mean().transpose();
  const Vector row_means = k.rowwise().mean();
  Matrix out = k;
  out.colwise() -= row_means;
  out.rowwise() -= col_means.transpose();
  out.array() += k.mean();
  return 0.5 * (out + out.transpose());
}

/// Kernel PCA: eigendecomposes the double-centered Gram matrix and returns
/// the top-l coordinates, column c scaled to squared norm lambda_c. Columns
/// are signed so their largest-magnitude coordinate is positive.
inline KernelPcaModel kernel_pca(const Matrix& gram, Index l) {
  const Matrix k = validated_gram(gram);
  const Index m = k.rows();
  require(l >= 1 && l <= m, ErrorCode::BadL, "need 1 <= l <= m, got l=" + std::to_string(l));
  const Matrix centered = double_center(k);
  const EigenDecomp eig = sym_eig(centered);
  const double tol = gram_psd_tolerance(k);
  require(eig.values(m - 1) >= -tol, ErrorCode::NotPsd, "centered Gram matrix is indefinite beyond tolerance");

  KernelPcaModel model;
  model.embedding.eigenvalues = eig.values.head(l);
  model.embedding.coords.resize(m, l);
  model.alphas = Matrix::Zero(m, l);
  for (Index c = 0; c < l; ++c) {
    const double lambda = eig.values(c);
    if (lambda > tol) {
      model.embedding.coords.col(c) = eig.vectors.col(c) * std::sqrt(lambda);
      model.alphas.col(c) = eig.vectors.col(c) / std::sqrt(lambda);
    } else {
      model.embedding.coords.col(c).setZero();
    }
  }
  canonicalize_column_signs(model.embedding.coords, &model.alphas);
  model.col_means = k.colwise().mean().transpose();
  model.grand_mean = k.mean();
  return model;
}

}  // namespace manikernel::learn
