#pragma once

// Soft-margin binary SVM on a precomputed Gram matrix, solved in the dual by
// sequential minimal optimization with maximal-violating-pair selection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "manikernel/kernel.hpp"
#include "manikernel/learn/common.hpp"

namespace manikernel::learn {

struct SvmOptions {
  double C = 1.0;
  double kkt_tol = 1e-3;
  long max_iter = 0;  // 0: max(10^7, 100 m)
};

struct SvmModel {
  Vector dual_coefs;            // alpha_i y_i, zero off the support
  Vector alphas;                // alpha_i in [0, C]
  double bias = 0.0;
  std::vector<Index> support;   // indices with alpha_i > 0
  double C = 1.0;
  double dual_objective = 0.0;  // sum alpha - 1/2 alpha^T Q alpha
  double kkt_violation = 0.0;   // max violating pair gap at termination
  long iterations = 0;
  std::optional<KernelSpec> spec;

  Index training_size() const noexcept { return dual_coefs.size(); }
};

namespace detail {

inline std::vector<double> as_sign_labels(const std::vector<int>& y) {
  std::vector<double> out;
  out.reserve(y.size());
  bool pos = false, neg = false;
  for (int v : y) {
    require(v == 1 || v == -1, ErrorCode::InvalidArgument, "binary SVM labels must be +1 or -1");
    pos |= v == 1;
    neg |= v == -1;
    out.push_back(static_cast<double>(v));
  }
  require(pos && neg, ErrorCode::OneClass, "binary SVM needs both labels present");
  return out;
}

}  // namespace detail

inline SvmModel svm_train(const Matrix& gram, const std::vector<int>& labels, const SvmOptions& opts = {}) {
  const Matrix k = validated_gram(gram);
  const Index m = k.rows();
  require(static_cast<Index>(labels.size()) == m, ErrorCode::DimMismatch, "one label per training point required");
  require(opts.C > 0.0 && std::isfinite(opts.C), ErrorCode::InvalidArgument, "C must be positive");
  require(opts.kkt_tol > 0.0, ErrorCode::InvalidArgument, "KKT tolerance must be positive");
  const std::vector<double> y = detail::as_sign_labels(labels);
  const double C = opts.C;
  constexpr double kTau = 1e-12;

  Vector alpha = Vector::Zero(m);
  Vector grad = Vector::Constant(m, -1.0);  // Q alpha - e
  auto q = [&](Index i, Index j) { return y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * k(i, j); };
  auto in_up = [&](Index t) {
    const double yt = y[static_cast<std::size_t>(t)];
    return (yt > 0 && alpha(t) < C) || (yt < 0 && alpha(t) > 0);
  };
  auto in_low = [&](Index t) {
    const double yt = y[static_cast<std::size_t>(t)];
    return (yt < 0 && alpha(t) < C) || (yt > 0 && alpha(t) > 0);
  };

  const long max_iter = opts.max_iter > 0 ? opts.max_iter : std::max<long>(10'000'000L, 100L * m);
  long iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    Index i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < m; ++t) {
      const double v = -y[static_cast<std::size_t>(t)] * grad(t);
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    gap = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
    if (gap < opts.kkt_tol) break;
    require(iter < max_iter, ErrorCode::NoConvergence, "SMO hit the iteration cap");

    const double old_ai = alpha(i), old_aj = alpha(j);
    const double yi = y[static_cast<std::size_t>(i)], yj = y[static_cast<std::size_t>(j)];
    if (yi != yj) {
      double quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = -diff; }
      }
      if (diff > 0) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = C - diff; }
      } else {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = C + diff; }
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = sum - C; }
      } else {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = sum; }
      }
      if (sum > C) {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = sum - C; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = sum; }
      }
    }
    const double dai = alpha(i) - old_ai, daj = alpha(j) - old_aj;
    for (Index t = 0; t < m; ++t) grad(t) += q(t, i) * dai + q(t, j) * daj;
  }

  // rho: mean of y G over free vectors, else midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Index t = 0; t < m; ++t) {
    const double yg = y[static_cast<std::size_t>(t)] * grad(t);
    if (alpha(t) >= C) {
      if (y[static_cast<std::size_t>(t)] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0) {
      if (y[static_cast<std::size_t>(t)] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      sum_free += yg;
      ++n_free;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);

  SvmModel model;
  model.C = C;
  model.alphas = alpha;
  model.dual_coefs.resize(m);
  for (Index t = 0; t < m; ++t) {
    model.dual_coefs(t) = alpha(t) * y[static_cast<std::size_t>(t)];
    if (alpha(t) > 0.0) model.support.push_back(t);
  }
  model.bias = -rho;
  model.kkt_violation = gap;
  model.iterations = iter;
  model.dual_objective = alpha.sum() - 0.5 * model.dual_coefs.dot(k * model.dual_coefs);
  return model;
}

/// Decision values f(x) = sum_i dual_coefs_i k(x_i, x) + bias for each of
/// the t columns of an m x t kernel matrix.
inline Vector svm_predict(const SvmModel& model, const Matrix& kernel_columns) {
  require(kernel_columns.rows() == model.training_size(), ErrorCode::DimMismatch,
          "kernel columns need " + std::to_string(model.training_size()) + " rows, got " +
              std::to_string(kernel_columns.rows()));
  return (kernel_columns.transpose() * model.dual_coefs).array() + model.bias;
}

/// 1/2 ||w||^2 + C sum max(0, 1 - y_i f(x_i)) at the model's (w, b).
inline double svm_primal_objective(const SvmModel& model, const Matrix& gram, const std::vector<int>& labels) {
  const Vector f = svm_predict(model, gram);
  double hinge = 0.0;
  for (Index i = 0; i < f.size(); ++i) hinge += std::max(0.0, 1.0 - labels[static_cast<std::size_t>(i)] * f(i));
  return 0.5 * model.dual_coefs.dot(gram * model.dual_coefs) + model.C * hinge;
}

/// Largest violation of the KKT conditions given the model's bias:
/// alpha = 0 needs y f >= 1, 0 < alpha < C needs y f = 1, alpha = C needs y f <= 1.
inline double svm_kkt_residual(const SvmModel& model, const Matrix& gram, const std::vector<int>& labels) {
  const Vector f = svm_predict(model, gram);
  double worst = 0.0;
  for (Index i = 0; i < f.size(); ++i) {
    const double margin = labels[static_cast<std::size_t>(i)] * f(i);
    const double a = model.alphas(i);
    double v = 0.0;
    if (a <= 0.0) v = std::max(0.0, 1.0 - margin);
    else if (a >= model.C) v = std::max(0.0, margin - 1.0);
    else v = std::abs(margin - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace manikernel::learn
