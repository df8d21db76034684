#pragma once

// Multiple kernel learning over the unit simplex: alternates an SVM solve on
// K(lambda) = sum_j lambda_j K_j with a reduced-gradient step on lambda.

#include <cmath>
#include <span>
#include <vector>

#include "manikernel/learn/svm.hpp"

namespace manikernel::learn {

struct MklOptions {
  double C = 1.0;
  int max_outer_iter = 100;
  double tol = 1e-8;            // relative objective change that ends the outer loop
  double svm_kkt_tol = 1e-6;
  int max_halvings = 30;
};

struct MklModel {
  Vector weights;  // on the simplex
  SvmModel svm;    // trained on the combined kernel
  std::vector<double> objective_trace;
  bool converged = false;
};

inline Matrix combine_kernels(std::span<const Matrix> kernels, const Vector& weights) {
  Matrix out = Matrix::Zero(kernels.front().rows(), kernels.front().cols());
  for (std::size_t j = 0; j < kernels.size(); ++j) {
    if (weights(static_cast<Index>(j)) != 0.0) out += weights(static_cast<Index>(j)) * kernels[j];
  }
  return out;
}

namespace detail {

/// Projects tiny negatives to zero and renormalizes to sum 1.
inline Vector onto_simplex_face(Vector w) {
  w = w.cwiseMax(0.0);
  return w / w.sum();
}

}  // namespace detail

inline MklModel mkl_train(std::span<const Matrix> kernels, const std::vector<int>& labels, const MklOptions& opts = {}) {
  require(!kernels.empty(), ErrorCode::EmptySet, "MKL needs at least one kernel");
  const Index m = kernels.front().rows();
  for (const auto& k : kernels) {
    require(k.rows() == m && k.cols() == m, ErrorCode::DimMismatch, "all kernels must share one size");
    validated_gram(k);
  }
  const auto n = static_cast<Index>(kernels.size());
  SvmOptions svm_opts;
  svm_opts.C = opts.C;
  svm_opts.kkt_tol = opts.svm_kkt_tol;

  MklModel out;
  out.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
  out.svm = svm_train(combine_kernels(kernels, out.weights), labels, svm_opts);
  out.objective_trace.push_back(out.svm.dual_objective);
  if (n == 1) {
    out.converged = true;
    return out;
  }

  for (int outer = 0; outer < opts.max_outer_iter; ++outer) {
    // d J / d lambda_j = -1/2 (alpha y)^T K_j (alpha y)
    Vector grad(n);
    for (Index j = 0; j < n; ++j)
      grad(j) = -0.5 * out.svm.dual_coefs.dot(kernels[static_cast<std::size_t>(j)] * out.svm.dual_coefs);

    Index mu = 0;
    for (Index j = 1; j < n; ++j)
      if (out.weights(j) > out.weights(mu)) mu = j;
    Vector dir = Vector::Zero(n);
    for (Index j = 0; j < n; ++j) {
      if (j == mu) continue;
      const double rel = grad(j) - grad(mu);
      if (out.weights(j) <= 0.0 && rel > 0.0) continue;
      dir(j) = -rel;
    }
    dir(mu) = -dir.sum();
    if (dir.norm() <= 1e-14 * std::max(1.0, grad.norm())) {
      out.converged = true;
      break;
    }

    double step = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j)
      if (dir(j) < 0.0) step = std::min(step, -out.weights(j) / dir(j));
    if (!std::isfinite(step)) step = 1.0;

    const double current = out.svm.dual_objective;
    bool improved = false;
    for (int h = 0; h <= opts.max_halvings; ++h, step *= 0.5) {
      Vector trial = out.weights + step * dir;
      for (Index j = 0; j < n; ++j)
        if (std::abs(trial(j)) <= 1e-15) trial(j) = 0.0;
      trial = detail::onto_simplex_face(trial);
      SvmModel cand = svm_train(combine_kernels(kernels, trial), labels, svm_opts);
      if (cand.dual_objective < current) {
        out.weights = trial;
        out.svm = std::move(cand);
        improved = true;
        break;
      }
    }
    if (!improved) {
      out.converged = true;
      break;
    }
    out.objective_trace.push_back(out.svm.dual_objective);
    if (current - out.svm.dual_objective < opts.tol * std::max(1.0, std::abs(current))) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace manikernel::learn
