#pragma once

#include <map>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "manikernel/learn/common.hpp"
#include "manikernel/learn/kpca.hpp"

namespace manikernel::learn {

struct KernelFdaModel {
  Embedding embedding;  // training projections and generalized eigenvalues
  Matrix alphas;        // m x dims
  double ridge = 0.0;   // regularizer actually applied to the within-class scatter

  /// Projections of query points from their m x t kernel columns; t x dims.
  Matrix project(const Matrix& kernel_columns) const {
    require(kernel_columns.rows() == alphas.rows(), ErrorCode::DimMismatch,
            "kernel columns must have one row per training point");
    return kernel_columns.transpose() * alphas;
  }
};

/// Between-class (M) and within-class (N) scatter matrices of the
/// coefficient vector alpha for w = sum_i alpha_i phi(x_i).
struct FdaScatter {
  Matrix between;
  Matrix within;
  int classes = 0;
};

inline FdaScatter fda_scatter(const Matrix& k, const std::vector<int>& labels) {
  const Index m = k.rows();
  std::map<int, std::vector<Index>> members;
  for (Index i = 0; i < m; ++i) members[labels[static_cast<std::size_t>(i)]].push_back(i);
  const Vector overall = k.rowwise().mean();
  FdaScatter s{Matrix::Zero(m, m), Matrix::Zero(m, m), static_cast<int>(members.size())};
  for (const auto& [cls, idx] : members) {
    const auto n_c = static_cast<Index>(idx.size());
    Matrix k_c(m, n_c);
    for (Index j = 0; j < n_c; ++j) k_c.col(j) = k.col(idx[static_cast<std::size_t>(j)]);
    const Vector mean_c = k_c.rowwise().mean();
    const Vector diff = mean_c - overall;
    s.between += static_cast<double>(n_c) * diff * diff.transpose();
    const Matrix centered = k_c.colwise() - mean_c;
    s.within += centered * centered.transpose();
  }
  s.between = 0.5 * (s.between + s.between.transpose());
  s.within = 0.5 * (s.within + s.within.transpose());
  return s;
}

/// Default regularizer 1e-4 * trace(N) / m. When N vanishes (every class a
/// set of identical points) falls back to 1e-8 * trace(K) / m so the
/// generalized problem stays definite.
inline double default_fda_ridge(const Matrix& k, const Matrix& within) {
  const double m = static_cast<double>(k.rows());
  const double r = 1e-4 * within.trace() / m;
  if (r > 1e-14 * std::max(1.0, k.trace() / m)) return r;
  return 1e-8 * std::max(1.0, k.trace()) / m;
}

/// Multi-class kernel Fisher discriminant: solves M a = lambda (N + ridge I) a
/// and keeps the `dims` leading directions (dims <= classes - 1).
inline KernelFdaModel kernel_fda(const Matrix& gram, const std::vector<int>& labels, Index dims,
                                 std::optional<double> ridge = std::nullopt) {
  const Matrix k = validated_gram(gram);
  const Index m = k.rows();
  require(static_cast<Index>(labels.size()) == m, ErrorCode::DimMismatch, "one label per point required");
  FdaScatter s = fda_scatter(k, labels);
  require(s.classes >= 2, ErrorCode::OneClass, "kernel FDA needs at least two classes");
  require(dims >= 1 && dims <= s.classes - 1, ErrorCode::BadDims,
          "dims must lie in [1, classes-1], got " + std::to_string(dims));
  const double reg = ridge ? *ridge : default_fda_ridge(k, s.within);
  require(reg >= 0.0, ErrorCode::InvalidArgument, "ridge must be non-negative");

  Matrix b = s.within;
  b.diagonal().array() += reg;
  Eigen::LLT<Matrix> llt(b);
  const double floor = 1e-12 * std::max(1.0, b.diagonal().cwiseAbs().maxCoeff());
  require(llt.info() == Eigen::Success && (Matrix(llt.matrixL()).diagonal().array().square() > floor).all(),
          ErrorCode::SingularScatter, "within-class scatter is singular; use a positive ridge");

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(s.between, b);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence, "generalized eigensolver failed");
  // ascending order from Eigen
  KernelFdaModel model;
  model.ridge = reg;
  model.alphas = solver.eigenvectors().rightCols(dims).rowwise().reverse();
  model.embedding.eigenvalues = solver.eigenvalues().tail(dims).reverse();
  model.embedding.coords = k * model.alphas;
  canonicalize_column_signs(model.embedding.coords, &model.alphas);
  return model;
}

}  // namespace manikernel::learn
