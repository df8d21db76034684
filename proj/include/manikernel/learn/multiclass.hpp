#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "manikernel/learn/svm.hpp"

namespace manikernel::learn {

enum class MulticlassMode { OneVsAll, OneVsOne };

struct BinarySubproblem {
  int positive = 0;            // class id mapped to +1
  int negative = -1;           // class id mapped to -1 (OneVsOne only)
  std::vector<Index> members;  // training indices used by this machine
  SvmModel model;
};

struct MulticlassPrediction {
  std::vector<int> labels;
  Matrix scores;  // t x classes: decision value (OneVsAll) or summed pairwise decisions (OneVsOne)
};

class MulticlassSvm {
 public:
  MulticlassMode mode = MulticlassMode::OneVsAll;
  std::vector<int> classes;  // ascending
  std::vector<BinarySubproblem> machines;
  Index training_size = 0;

  /// Predicts from an m x t matrix of kernel evaluations against the full
  /// training set. OneVsAll: argmax decision. OneVsOne: majority vote, ties
  /// broken by summed decision values, then by lowest class id.
  MulticlassPrediction predict(const Matrix& kernel_columns) const {
    require(kernel_columns.rows() == training_size, ErrorCode::DimMismatch,
            "kernel columns need one row per training point");
    const Index t = kernel_columns.cols();
    const auto c = static_cast<Index>(classes.size());
    MulticlassPrediction out;
    out.scores = Matrix::Zero(t, c);
    Matrix votes = Matrix::Zero(t, c);
    for (const auto& mach : machines) {
      Matrix sub(static_cast<Index>(mach.members.size()), t);
      for (std::size_t r = 0; r < mach.members.size(); ++r) sub.row(static_cast<Index>(r)) = kernel_columns.row(mach.members[r]);
      const Vector f = svm_predict(mach.model, sub);
      const Index pi = class_index(mach.positive);
      if (mode == MulticlassMode::OneVsAll) {
        out.scores.col(pi) = f;
        continue;
      }
      const Index ni = class_index(mach.negative);
      for (Index q = 0; q < t; ++q) {
        if (f(q) > 0) votes(q, pi) += 1.0; else votes(q, ni) += 1.0;
        out.scores(q, pi) += f(q);
        out.scores(q, ni) -= f(q);
      }
    }
    out.labels.resize(static_cast<std::size_t>(t));
    for (Index q = 0; q < t; ++q) {
      Index best = 0;
      for (Index j = 1; j < c; ++j) {
        if (mode == MulticlassMode::OneVsAll) {
          if (out.scores(q, j) > out.scores(q, best)) best = j;
        } else if (votes(q, j) > votes(q, best) ||
                   (votes(q, j) == votes(q, best) && out.scores(q, j) > out.scores(q, best))) {
          best = j;
        }
      }
      out.labels[static_cast<std::size_t>(q)] = classes[static_cast<std::size_t>(best)];
    }
    return out;
  }

 private:
  Index class_index(int cls) const {
    return static_cast<Index>(std::lower_bound(classes.begin(), classes.end(), cls) - classes.begin());
  }
};

inline MulticlassSvm multiclass_svm(const Matrix& gram, const std::vector<int>& labels, MulticlassMode mode,
                                    const SvmOptions& opts = {}) {
  const Index m = gram.rows();
  require(gram.cols() == m && static_cast<Index>(labels.size()) == m, ErrorCode::DimMismatch,
          "Gram matrix and labels disagree in size");
  const std::set<int> distinct(labels.begin(), labels.end());
  require(distinct.size() >= 2, ErrorCode::OneClass, "multiclass SVM needs at least two classes");

  MulticlassSvm out;
  out.mode = mode;
  out.classes.assign(distinct.begin(), distinct.end());
  out.training_size = m;

  auto train_on = [&](const std::vector<Index>& members, auto&& sign_of) {
    const auto n = static_cast<Index>(members.size());
    Matrix sub(n, n);
    std::vector<int> y(members.size());
    for (Index a = 0; a < n; ++a) {
      y[static_cast<std::size_t>(a)] = sign_of(labels[static_cast<std::size_t>(members[static_cast<std::size_t>(a)])]);
      for (Index b = 0; b < n; ++b) sub(a, b) = gram(members[static_cast<std::size_t>(a)], members[static_cast<std::size_t>(b)]);
    }
    return svm_train(sub, y, opts);
  };

  if (mode == MulticlassMode::OneVsAll) {
    std::vector<Index> all(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = i;
    for (int cls : out.classes) {
      BinarySubproblem bp;
      bp.positive = cls;
      bp.members = all;
      bp.model = train_on(all, [cls](int l) { return l == cls ? 1 : -1; });
      out.machines.push_back(std::move(bp));
    }
  } else {
    for (std::size_t a = 0; a < out.classes.size(); ++a) {
      for (std::size_t b = a + 1; b < out.classes.size(); ++b) {
        BinarySubproblem bp;
        bp.positive = out.classes[a];
        bp.negative = out.classes[b];
        for (Index i = 0; i < m; ++i) {
          const int l = labels[static_cast<std::size_t>(i)];
          if (l == bp.positive || l == bp.negative) bp.members.push_back(i);
        }
        const int pos = bp.positive;
        bp.model = train_on(bp.members, [pos](int l) { return l == pos ? 1 : -1; });
        out.machines.push_back(std::move(bp));
      }
    }
  }
  return out;
}

}  // namespace manikernel::learn
