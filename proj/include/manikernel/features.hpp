#pragma once

// Pixel feature maps, integral-image region covariance descriptors,
// dispersion-ranked subwindow selection and spatio-temporal structure
// tensors. Images are h x w matrices indexed (row = y, col = x).

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "manikernel/error.hpp"
#include "manikernel/matrix_ops.hpp"
#include "manikernel/spd.hpp"

namespace manikernel::features {

using Image = Matrix;

inline constexpr double kDerivEps = 1e-8;

struct FeatureStack {
  Index height = 0;
  Index width = 0;
  std::vector<std::string> names;
  std::vector<Image> planes;

  Index channels() const noexcept { return static_cast<Index>(planes.size()); }
};

struct Rect {
  Index x0 = 0, y0 = 0, w = 0, h = 0;

  Index area() const noexcept { return w * h; }
  bool operator==(const Rect&) const = default;
};

struct SubwindowSpec {
  Rect rect;
  double score = 0.0;
};

struct Derivatives {
  Image ix, iy, ixx, iyy;
};

/// Central differences with replicated borders.
inline Derivatives central_derivatives(const Image& img) {
  const Index h = img.rows(), w = img.cols();
  Derivatives d{Image(h, w), Image(h, w), Image(h, w), Image(h, w)};
  for (Index y = 0; y < h; ++y) {
    const Index ym = std::max<Index>(y - 1, 0), yp = std::min<Index>(y + 1, h - 1);
    for (Index x = 0; x < w; ++x) {
      const Index xm = std::max<Index>(x - 1, 0), xp = std::min<Index>(x + 1, w - 1);
      d.ix(y, x) = 0.5 * (img(y, xp) - img(y, xm));
      d.iy(y, x) = 0.5 * (img(yp, x) - img(ym, x));
      d.ixx(y, x) = img(y, xp) - 2.0 * img(y, x) + img(y, xm);
      d.iyy(y, x) = img(yp, x) - 2.0 * img(y, x) + img(ym, x);
    }
  }
  return d;
}

inline void check_image(const Image& img) {
  require(img.rows() >= 3 && img.cols() >= 3, ErrorCode::TooSmall,
          "image must be at least 3x3, got " + std::to_string(img.rows()) + "x" + std::to_string(img.cols()));
  require(img.allFinite(), ErrorCode::NumericalError, "image has non-finite pixels");
}

/// [x, y, |Ix|, |Iy|, sqrt(Ix^2 + Iy^2), |Ixx|, |Iyy|, atan(|Ix| / |Iy|)]
inline FeatureStack pedestrian_feature_maps(const Image& img) {
  check_image(img);
  const Index h = img.rows(), w = img.cols();
  const Derivatives d = central_derivatives(img);
  FeatureStack s;
  s.height = h;
  s.width = w;
  s.names = {"x", "y", "abs_ix", "abs_iy", "grad_mag", "abs_ixx", "abs_iyy", "orientation"};
  Image xs(h, w), ys(h, w), orient(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      xs(y, x) = static_cast<double>(x);
      ys(y, x) = static_cast<double>(y);
      orient(y, x) = std::atan(std::abs(d.ix(y, x)) / std::max(std::abs(d.iy(y, x)), kDerivEps));
    }
  s.planes = {xs,
              ys,
              d.ix.cwiseAbs(),
              d.iy.cwiseAbs(),
              (d.ix.array().square() + d.iy.array().square()).sqrt().matrix(),
              d.ixx.cwiseAbs(),
              d.iyy.cwiseAbs(),
              orient};
  return s;
}

/// [I, |Ix|, |Iy|, |Ixx|, |Iyy|]
inline FeatureStack texture_feature_maps(const Image& img) {
  check_image(img);
  const Derivatives d = central_derivatives(img);
  FeatureStack s;
  s.height = img.rows();
  s.width = img.cols();
  s.names = {"intensity", "abs_ix", "abs_iy", "abs_ixx", "abs_iyy"};
  s.planes = {img, d.ix.cwiseAbs(), d.iy.cwiseAbs(), d.ixx.cwiseAbs(), d.iyy.cwiseAbs()};
  return s;
}

/// First- and second-order integral images of a feature stack; any
/// rectangle's sample covariance follows in O(c^2).
class IntegralCovariance {
 public:
  explicit IntegralCovariance(const FeatureStack& stack) : h_(stack.height), w_(stack.width), c_(stack.channels()) {
    require(c_ >= 2, ErrorCode::BadShape, "feature stack needs at least two channels");
    for (const auto& p : stack.planes)
      require(p.rows() == h_ && p.cols() == w_, ErrorCode::DimMismatch, "feature planes differ in size");
    const Index pairs = c_ * (c_ + 1) / 2;
    first_.assign(static_cast<std::size_t>(c_), Matrix::Zero(h_ + 1, w_ + 1));
    second_.assign(static_cast<std::size_t>(pairs), Matrix::Zero(h_ + 1, w_ + 1));
    for (Index a = 0; a < c_; ++a) integrate(stack.planes[static_cast<std::size_t>(a)], first_[static_cast<std::size_t>(a)]);
    for (Index a = 0; a < c_; ++a)
      for (Index b = a; b < c_; ++b)
        integrate(stack.planes[static_cast<std::size_t>(a)].cwiseProduct(stack.planes[static_cast<std::size_t>(b)]),
                  second_[static_cast<std::size_t>(pair_index(a, b))]);
  }

  Index channels() const noexcept { return c_; }
  Index height() const noexcept { return h_; }
  Index width() const noexcept { return w_; }

  /// Unregularized sample covariance (1/(n-1) normalization) inside rect.
  Matrix covariance(const Rect& r) const {
    require(r.w >= 1 && r.h >= 1 && r.x0 >= 0 && r.y0 >= 0 && r.x0 + r.w <= w_ && r.y0 + r.h <= h_,
            ErrorCode::RectOutOfBounds, "rectangle lies outside the feature stack");
    const Index n = r.area();
    require(n >= c_ + 1, ErrorCode::TooFewPixels,
            "rectangle has " + std::to_string(n) + " pixels, need at least " + std::to_string(c_ + 1));
    Vector p(c_);
    for (Index a = 0; a < c_; ++a) p(a) = box(first_[static_cast<std::size_t>(a)], r);
    Matrix cov(c_, c_);
    const double nn = static_cast<double>(n);
    for (Index a = 0; a < c_; ++a)
      for (Index b = a; b < c_; ++b)
        cov(a, b) = cov(b, a) = (box(second_[static_cast<std::size_t>(pair_index(a, b))], r) - p(a) * p(b) / nn) / (nn - 1.0);
    return cov;
  }

 private:
  Index pair_index(Index a, Index b) const { return a * c_ - a * (a - 1) / 2 + (b - a); }

  static void integrate(const Matrix& plane, Matrix& out) {
    for (Index y = 0; y < plane.rows(); ++y)
      for (Index x = 0; x < plane.cols(); ++x)
        out(y + 1, x + 1) = plane(y, x) + out(y, x + 1) + out(y + 1, x) - out(y, x);
  }

  static double box(const Matrix& ii, const Rect& r) {
    return ii(r.y0 + r.h, r.x0 + r.w) - ii(r.y0, r.x0 + r.w) - ii(r.y0 + r.h, r.x0) + ii(r.y0, r.x0);
  }

  Index h_, w_, c_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

/// 1e-6 * (trace(C) + 1)
inline double default_epsilon(const Matrix& cov) { return 1e-6 * (cov.trace() + 1.0); }

inline SpdMatrix regularize_covariance(const Matrix& cov, std::optional<double> epsilon) {
  const double eps = epsilon ? *epsilon : default_epsilon(cov);
  require(eps > 0.0, ErrorCode::InvalidArgument, "epsilon must be positive");
  Matrix out = 0.5 * (cov + cov.transpose());
  out.diagonal().array() += eps;
  return make_spd(out);
}

inline SpdMatrix region_covariance(const IntegralCovariance& integral, const Rect& rect,
                                   std::optional<double> epsilon = std::nullopt) {
  return regularize_covariance(integral.covariance(rect), epsilon);
}

inline SpdMatrix region_covariance(const FeatureStack& stack, const Rect& rect,
                                   std::optional<double> epsilon = std::nullopt) {
  return region_covariance(IntegralCovariance(stack), rect, epsilon);
}

/// diag(C_full)^{-1/2} C_sub diag(C_full)^{-1/2}
inline SpdMatrix normalize_descriptor(const SpdMatrix& sub, const SpdMatrix& full) {
  require(sub.dim() == full.dim(), ErrorCode::DimMismatch, "descriptor dimensions differ");
  const Vector scale = full.matrix().diagonal().cwiseSqrt().cwiseInverse();
  Matrix out = scale.asDiagonal() * sub.matrix() * scale.asDiagonal();
  return make_spd(0.5 * (out + out.transpose()));
}

/// Candidate rectangles: sizes from h/5 x w/5 to h x w in `steps` geometric
/// steps per axis, each slid with a stride of a quarter of its side.
inline std::vector<Rect> candidate_subwindows(Index height, Index width, int steps = 5, Index min_side = 2) {
  require(height >= 1 && width >= 1 && steps >= 1, ErrorCode::InvalidArgument, "bad window or step count");
  auto sides = [&](Index full) {
    std::vector<Index> out;
    const double lo = static_cast<double>(full) / 5.0;
    for (int s = 0; s < steps; ++s) {
      const double t = steps == 1 ? 1.0 : static_cast<double>(s) / (steps - 1);
      const auto side = static_cast<Index>(std::lround(lo * std::pow(5.0, t)));
      const Index clamped = std::clamp(side, std::min(min_side, full), full);
      if (out.empty() || out.back() != clamped) out.push_back(clamped);
    }
    return out;
  };
  std::vector<Rect> rects;
  for (Index sh : sides(height))
    for (Index sw : sides(width)) {
      const Index stride_y = std::max<Index>(1, sh / 4), stride_x = std::max<Index>(1, sw / 4);
      for (Index y = 0; y + sh <= height; y += stride_y)
        for (Index x = 0; x + sw <= width; x += stride_x) rects.push_back({x, y, sw, sh});
    }
  return rects;
}

/// |A intersect B| / min(|A|, |B|)
inline double overlap_ratio(const Rect& a, const Rect& b) {
  const Index ix = std::max<Index>(0, std::min(a.x0 + a.w, b.x0 + b.w) - std::max(a.x0, b.x0));
  const Index iy = std::max<Index>(0, std::min(a.y0 + a.h, b.y0 + b.h) - std::max(a.y0, b.y0));
  const Index smaller = std::min(a.area(), b.area());
  return smaller == 0 ? 0.0 : static_cast<double>(ix * iy) / static_cast<double>(smaller);
}

/// Scores every candidate by the p = 1 log-Euclidean dispersion of its
/// descriptors over the positive samples (around their log-Euclidean mean),
/// then greedily keeps the lowest-scoring candidates whose pairwise overlap
/// stays within max_overlap. descriptors[i][j]: sample i, candidate j.
inline std::vector<SubwindowSpec> select_subwindows(std::span<const Rect> candidates,
                                                    const std::vector<std::vector<SpdMatrix>>& descriptors,
                                                    const std::vector<bool>& positives, std::size_t count,
                                                    double max_overlap) {
  require(count >= 1, ErrorCode::InvalidArgument, "count must be at least 1");
  require(max_overlap >= 0.0 && max_overlap < 1.0, ErrorCode::InvalidArgument, "max_overlap must lie in [0, 1)");
  require(descriptors.size() == positives.size(), ErrorCode::DimMismatch, "one positive flag per sample required");
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < positives.size(); ++i)
    if (positives[i]) pos.push_back(i);
  require(!pos.empty(), ErrorCode::NoPositives, "no positive samples to rank subwindows with");
  for (const auto& row : descriptors)
    require(row.size() == candidates.size(), ErrorCode::DimMismatch, "one descriptor per candidate required");

  const SpdMetric le = SpdMetric::log_euclidean();
  std::vector<SubwindowSpec> scored;
  scored.reserve(candidates.size());
  std::vector<SpdMatrix> column;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    column.clear();
    for (std::size_t i : pos) column.push_back(descriptors[i][j]);
    const SpdMatrix mean = karcher_mean_log_euclidean(column);
    scored.push_back({candidates[j], dispersion_stat(le, column, 1.0, mean)});
  }
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].score < scored[b].score; });

  std::vector<SubwindowSpec> selected;
  for (std::size_t idx : order) {
    if (selected.size() >= count) break;
    const auto& cand = scored[idx];
    const bool clash = std::any_of(selected.begin(), selected.end(),
                                   [&](const SubwindowSpec& s) { return overlap_ratio(s.rect, cand.rect) > max_overlap; });
    if (!clash) selected.push_back(cand);
  }
  return selected;
}

/// Normalized 1-D Gaussian taps with radius ceil(3 sigma).
inline Vector gaussian_taps(double sigma) {
  if (sigma <= 0.0) return Vector::Ones(1);
  const auto radius = static_cast<Index>(std::ceil(3.0 * sigma));
  Vector taps(2 * radius + 1);
  for (Index i = -radius; i <= radius; ++i) taps(i + radius) = std::exp(-0.5 * (i * i) / (sigma * sigma));
  return taps / taps.sum();
}

/// Separable Gaussian smoothing with replicated borders.
inline Image gaussian_smooth(const Image& img, double sigma) {
  const Vector taps = gaussian_taps(sigma);
  const Index radius = (taps.size() - 1) / 2;
  if (radius == 0) return img;
  const Index h = img.rows(), w = img.cols();
  Image tmp(h, w), out(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Index k = -radius; k <= radius; ++k) acc += taps(k + radius) * img(y, std::clamp<Index>(x + k, 0, w - 1));
      tmp(y, x) = acc;
    }
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Index k = -radius; k <= radius; ++k) acc += taps(k + radius) * tmp(std::clamp<Index>(y + k, 0, h - 1), x);
      out(y, x) = acc;
    }
  return out;
}

struct StructureTensorField {
  Index height = 0;
  Index width = 0;
  std::vector<Matrix> raw;       // smoothed outer products, row-major pixel order
  std::vector<SpdMatrix> tensors;  // raw + epsilon I

  const SpdMatrix& at(Index y, Index x) const { return tensors[static_cast<std::size_t>(y * width + x)]; }
};

/// Per-pixel T = G_sigma * (grad I grad I^T), grad I = (Ix, Iy, It). Two
/// frames: spatial derivatives of their mean, It = f1 - f0. Three frames:
/// spatial derivatives of the middle frame, It = (f2 - f0) / 2.
inline StructureTensorField structure_tensor_field(std::span<const Image> frames, double smoothing_sigma,
                                                   std::optional<double> epsilon = std::nullopt) {
  require(frames.size() == 2 || frames.size() == 3, ErrorCode::FrameMismatch, "need two or three frames");
  for (const auto& f : frames)
    require(f.rows() == frames[0].rows() && f.cols() == frames[0].cols(), ErrorCode::FrameMismatch,
            "frames differ in size");
  check_image(frames[0]);
  require(smoothing_sigma >= 0.0, ErrorCode::InvalidArgument, "smoothing sigma must be non-negative");
  const Index h = frames[0].rows(), w = frames[0].cols();
  Image spatial, it;
  if (frames.size() == 2) {
    spatial = 0.5 * (frames[0] + frames[1]);
    it = frames[1] - frames[0];
  } else {
    spatial = frames[1];
    it = 0.5 * (frames[2] - frames[0]);
  }
  const Derivatives d = central_derivatives(spatial);
  const std::array<const Image*, 3> grad = {&d.ix, &d.iy, &it};
  std::array<Image, 6> products;
  int slot = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) products[static_cast<std::size_t>(slot++)] =
        gaussian_smooth(grad[static_cast<std::size_t>(a)]->cwiseProduct(*grad[static_cast<std::size_t>(b)]), smoothing_sigma);

  StructureTensorField field;
  field.height = h;
  field.width = w;
  field.raw.reserve(static_cast<std::size_t>(h * w));
  field.tensors.reserve(static_cast<std::size_t>(h * w));
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      Matrix t(3, 3);
      slot = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) t(a, b) = t(b, a) = products[static_cast<std::size_t>(slot++)](y, x);
      field.tensors.push_back(regularize_covariance(t, epsilon));
      field.raw.push_back(std::move(t));
    }
  return field;
}

}  // namespace manikernel::features
