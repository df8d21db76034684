#pragma once

// File formats: JSON point-set datasets with explicit shapes, CSV matrices
// with '#' provenance lines, PGM (P2/P5) images, and JSON encodings of
// kernel specs, Gram matrices and SVM models.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "manikernel/error.hpp"
#include "manikernel/grassmann.hpp"
#include "manikernel/kernel.hpp"
#include "manikernel/learn/svm.hpp"
#include "manikernel/spd.hpp"

namespace manikernel::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.3.0";

/// Ordered key/value pairs written at the top of every output file.
using Provenance = std::vector<std::pair<std::string, std::string>>;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
  out << text;
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path);
}

inline Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, origin + ": " + e.what());
  }
}

inline Json provenance_json(const Provenance& prov) {
  Json j = Json::object();
  for (const auto& [k, v] : prov) j[k] = v;
  return j;
}

// ---------------------------------------------------------------- matrices

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what) {
  require(j.is_array(), ErrorCode::Parse, what + ": expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  require(rows >= 1, ErrorCode::Parse, what + ": empty matrix");
  require(j[0].is_array(), ErrorCode::Parse, what + ": expected an array of rows");
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    require(row.is_array() && static_cast<Index>(row.size()) == cols, ErrorCode::Parse, what + ": ragged rows");
    for (Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      require(v.is_number(), ErrorCode::Parse, what + ": non-numeric entry");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

/// Comma-separated rows; lines starting with '#' and blank lines are skipped.
inline Matrix parse_csv_matrix(const std::string& text, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        const auto rest = cell.find_first_not_of(" \t", used);
        require(rest == std::string::npos, ErrorCode::Parse, origin + ": bad number '" + cell + "'");
      } catch (const std::logic_error&) {
        fail(ErrorCode::Parse, origin + ": bad number '" + cell + "'");
      }
    }
    require(rows.empty() || row.size() == rows.front().size(), ErrorCode::Parse, origin + ": ragged CSV rows");
    rows.push_back(std::move(row));
  }
  require(!rows.empty() && !rows.front().empty(), ErrorCode::Parse, origin + ": empty CSV matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline Matrix read_csv_matrix(const std::string& path) { return parse_csv_matrix(read_text(path), path); }

inline std::string format_csv_matrix(const Matrix& m, const Provenance& header = {},
                                     const std::vector<std::string>& column_names = {}) {
  std::string out;
  for (const auto& [k, v] : header) out += "# " + k + ": " + v + "\n";
  if (!column_names.empty()) {
    out += "#";
    for (std::size_t i = 0; i < column_names.size(); ++i) out += (i ? "," : " ") + column_names[i];
    out += "\n";
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ",";
      out += format_double(m(i, j));
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- datasets

struct Dataset {
  PointSet points;
  std::vector<int> labels;  // empty when unlabeled
};

inline std::string dataset_kind(const PointSet& points) {
  switch (points.index()) {
    case 0: return "spd";
    case 1: return "grassmann";
    default: return "euclidean";
  }
}

inline Json dataset_to_json(const Dataset& data, const Provenance& prov = {}) {
  Json j = Json::object();
  if (!prov.empty()) j["provenance"] = provenance_json(prov);
  j["format"] = "manikernel-dataset";
  j["kind"] = dataset_kind(data.points);
  Json pts = Json::array();
  Json shape = Json::array();
  std::visit(
      [&](const auto& set) {
        using P = std::decay_t<decltype(set)>;
        for (const auto& p : set) {
          if constexpr (std::is_same_v<P, SpdSet>) {
            pts.push_back(matrix_to_json(p.matrix()));
          } else if constexpr (std::is_same_v<P, GrassmannSet>) {
            pts.push_back(matrix_to_json(p.basis()));
          } else {
            Json v = Json::array();
            for (Index i = 0; i < p.size(); ++i) v.push_back(p(i));
            pts.push_back(std::move(v));
          }
        }
        if (!set.empty()) {
          if constexpr (std::is_same_v<P, SpdSet>) {
            shape = {set.front().dim(), set.front().dim()};
          } else if constexpr (std::is_same_v<P, GrassmannSet>) {
            shape = {set.front().ambient_dim(), set.front().subspace_dim()};
          } else {
            shape = {set.front().size()};
          }
        }
      },
      data.points);
  j["shape"] = shape;
  j["count"] = point_count(data.points);
  j["points"] = std::move(pts);
  if (!data.labels.empty()) j["labels"] = data.labels;
  return j;
}

/// Strict: SPD points must pass make_spd validation, Grassmann bases must be
/// orthonormal; every point must match the declared shape.
inline Dataset dataset_from_json(const Json& j, const std::string& origin) {
  require(j.is_object() && j.contains("kind") && j.contains("points"), ErrorCode::Parse,
          origin + ": not a dataset (needs 'kind' and 'points')");
  const std::string kind = j["kind"].get<std::string>();
  const Json& pts = j["points"];
  require(pts.is_array() && !pts.empty(), ErrorCode::Parse, origin + ": 'points' must be a non-empty array");
  std::vector<Index> shape;
  if (j.contains("shape")) shape = j["shape"].get<std::vector<Index>>();
  Dataset out;
  const std::string what = origin + ": point";
  if (kind == "spd") {
    SpdSet set;
    for (const auto& p : pts) {
      Matrix m = matrix_from_json(p, what);
      if (!shape.empty())
        require(shape.size() == 2 && m.rows() == shape[0] && m.cols() == shape[1], ErrorCode::DimMismatch,
                origin + ": point does not match declared shape");
      set.push_back(make_spd(m));
    }
    out.points = std::move(set);
  } else if (kind == "grassmann") {
    GrassmannSet set;
    for (const auto& p : pts) {
      Matrix m = matrix_from_json(p, what);
      if (!shape.empty())
        require(shape.size() == 2 && m.rows() == shape[0] && m.cols() == shape[1], ErrorCode::DimMismatch,
                origin + ": point does not match declared shape");
      set.emplace_back(std::move(m));
    }
    out.points = std::move(set);
  } else if (kind == "euclidean") {
    VectorSet set;
    for (const auto& p : pts) {
      require(p.is_array() && !p.empty(), ErrorCode::Parse, what + " must be a numeric array");
      Vector v(static_cast<Index>(p.size()));
      for (std::size_t i = 0; i < p.size(); ++i) {
        require(p[i].is_number(), ErrorCode::Parse, what + " has a non-numeric entry");
        v(static_cast<Index>(i)) = p[i].get<double>();
      }
      if (!shape.empty())
        require(shape.size() == 1 && v.size() == shape[0], ErrorCode::DimMismatch,
                origin + ": point does not match declared shape");
      set.push_back(std::move(v));
    }
    out.points = std::move(set);
  } else {
    fail(ErrorCode::Parse, origin + ": unknown dataset kind '" + kind + "'");
  }
  if (j.contains("labels")) {
    out.labels = j["labels"].get<std::vector<int>>();
    require(out.labels.size() == point_count(out.points), ErrorCode::DimMismatch,
            origin + ": label count differs from point count");
  }
  return out;
}

inline Dataset read_dataset(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return dataset_from_json(parse_json(text, path), path);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------- kernels

inline Json metric_to_json(const MetricSelector& metric) {
  Json j = Json::object();
  j["manifold"] = std::holds_alternative<SpdMetric>(metric)         ? "spd"
                  : std::holds_alternative<GrassmannMetric>(metric) ? "grassmann"
                                                                    : "euclidean";
  j["metric"] = metric_name(metric);
  if (const auto* s = std::get_if<SpdMetric>(&metric); s && s->kind == SpdMetricKind::PowerEuclidean)
    j["alpha"] = s->alpha;
  return j;
}

/// Metric names are unique across manifolds, so the name alone decides.
inline MetricSelector parse_metric(const std::string& name, double alpha = 0.5) {
  if (name == "euclidean") return EuclideanMetric{};
  if (auto k = parse_spd_metric(name)) {
    if (*k == SpdMetricKind::PowerEuclidean) return SpdMetric::power_euclidean(alpha);
    return SpdMetric{*k, 0.5};
  }
  if (auto g = parse_grassmann_metric(name)) return *g;
  fail(ErrorCode::InvalidArgument, "unknown metric '" + name + "'");
}

inline Json kernel_spec_to_json(const KernelSpec& spec) {
  Json j = metric_to_json(spec.metric);
  j["gamma"] = spec.gamma;
  return j;
}

inline KernelSpec kernel_spec_from_json(const Json& j) {
  require(j.is_object() && j.contains("metric") && j.contains("gamma"), ErrorCode::Parse,
          "kernel spec needs 'metric' and 'gamma'");
  const double alpha = j.contains("alpha") ? j["alpha"].get<double>() : 0.5;
  return KernelSpec(parse_metric(j["metric"].get<std::string>(), alpha), j["gamma"].get<double>());
}

inline Json gram_to_json(const GramMatrix& g, const Provenance& prov = {}) {
  Json j = Json::object();
  if (!prov.empty()) j["provenance"] = provenance_json(prov);
  j["kernel"] = kernel_spec_to_json(g.spec);
  j["m"] = g.size();
  j["entries"] = matrix_to_json(g.entries);
  if (g.min_eigen) j["audit"] = Json{{"min_eigen", *g.min_eigen}};
  else j["audit"] = nullptr;
  return j;
}

inline GramMatrix gram_from_json(const Json& j) {
  require(j.is_object() && j.contains("kernel") && j.contains("entries"), ErrorCode::Parse,
          "Gram JSON needs 'kernel' and 'entries'");
  GramMatrix g{matrix_from_json(j["entries"], "gram entries"), kernel_spec_from_json(j["kernel"]), std::nullopt};
  require(g.entries.rows() == g.entries.cols(), ErrorCode::NonSquare, "Gram matrix must be square");
  if (j.contains("audit") && j["audit"].is_object()) g.min_eigen = j["audit"]["min_eigen"].get<double>();
  return g;
}

/// CSV with header lines m, gamma and metric name, then the rows.
inline std::string gram_to_csv(const GramMatrix& g, Provenance prov = {}) {
  prov.emplace_back("m", std::to_string(g.size()));
  prov.emplace_back("gamma", format_double(g.spec.gamma));
  prov.emplace_back("metric", metric_name(g.spec.metric));
  if (g.min_eigen) prov.emplace_back("min_eigen", format_double(*g.min_eigen));
  return format_csv_matrix(g.entries, prov);
}

// ---------------------------------------------------------------- SVM models

/// A binary SVM together with the support points it needs for prediction.
struct StoredSvm {
  learn::SvmModel model;  // restricted to the support vectors
  Dataset support_points;
  Index training_size = 0;
  std::vector<Index> support_indices;  // into the original training set
};

inline StoredSvm store_svm(const learn::SvmModel& model, const PointSet& training) {
  StoredSvm s;
  s.training_size = model.training_size();
  s.support_indices = model.support;
  s.model = model;
  const auto n = static_cast<Index>(model.support.size());
  s.model.dual_coefs.resize(n);
  s.model.alphas.resize(n);
  s.model.support.clear();
  for (Index i = 0; i < n; ++i) {
    s.model.dual_coefs(i) = model.dual_coefs(model.support[static_cast<std::size_t>(i)]);
    s.model.alphas(i) = model.alphas(model.support[static_cast<std::size_t>(i)]);
    s.model.support.push_back(i);
  }
  s.support_points.points = std::visit(
      [&](const auto& set) -> PointSet {
        std::decay_t<decltype(set)> sub;
        for (Index idx : model.support) sub.push_back(set[static_cast<std::size_t>(idx)]);
        return sub;
      },
      training);
  return s;
}

inline Json svm_to_json(const StoredSvm& s, const Provenance& prov = {}) {
  Json j = Json::object();
  if (!prov.empty()) j["provenance"] = provenance_json(prov);
  j["format"] = "manikernel-svm";
  require(s.model.spec.has_value(), ErrorCode::InvalidArgument, "SVM model lacks a kernel spec");
  j["kernel"] = kernel_spec_to_json(*s.model.spec);
  j["C"] = s.model.C;
  j["bias"] = s.model.bias;
  j["dual_objective"] = s.model.dual_objective;
  j["training_size"] = s.training_size;
  j["support_indices"] = s.support_indices;
  Json coefs = Json::array();
  for (Index i = 0; i < s.model.dual_coefs.size(); ++i) coefs.push_back(s.model.dual_coefs(i));
  j["dual_coefs"] = std::move(coefs);
  j["support_points"] = dataset_to_json(s.support_points);
  return j;
}

inline StoredSvm svm_from_json(const Json& j, const std::string& origin) {
  require(j.is_object() && j.value("format", "") == "manikernel-svm", ErrorCode::Parse,
          origin + ": not an SVM model file");
  StoredSvm s;
  s.model.spec = kernel_spec_from_json(j["kernel"]);
  s.model.C = j["C"].get<double>();
  s.model.bias = j["bias"].get<double>();
  s.model.dual_objective = j.value("dual_objective", 0.0);
  s.training_size = j["training_size"].get<Index>();
  s.support_indices = j["support_indices"].get<std::vector<Index>>();
  const auto coefs = j["dual_coefs"].get<std::vector<double>>();
  s.model.dual_coefs = Eigen::Map<const Vector>(coefs.data(), static_cast<Index>(coefs.size()));
  s.model.alphas = s.model.dual_coefs.cwiseAbs();
  for (Index i = 0; i < s.model.dual_coefs.size(); ++i) s.model.support.push_back(i);
  s.support_points = dataset_from_json(j["support_points"], origin + ":support_points");
  require(point_count(s.support_points.points) == coefs.size(), ErrorCode::DimMismatch,
          origin + ": support point count differs from coefficient count");
  return s;
}

// ---------------------------------------------------------------- images

/// Netpbm graymap, ASCII (P2) or binary (P5, 8- or 16-bit big-endian).
inline Matrix parse_pgm(const std::string& bytes, const std::string& origin) {
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto next_token = [&]() -> std::string {
    skip_space_and_comments();
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    require(pos > start, ErrorCode::Parse, origin + ": truncated PGM header");
    return bytes.substr(start, pos - start);
  };
  auto next_int = [&]() -> long {
    const std::string tok = next_token();
    try {
      std::size_t used = 0;
      const long v = std::stol(tok, &used);
      require(used == tok.size(), ErrorCode::Parse, origin + ": bad PGM integer '" + tok + "'");
      return v;
    } catch (const std::logic_error&) {
      fail(ErrorCode::Parse, origin + ": bad PGM integer '" + tok + "'");
    }
  };
  const std::string magic = next_token();
  require(magic == "P2" || magic == "P5", ErrorCode::Parse, origin + ": not a P2/P5 PGM file");
  const long w = next_int(), h = next_int(), maxval = next_int();
  require(w >= 1 && h >= 1 && maxval >= 1 && maxval <= 65535, ErrorCode::Parse, origin + ": bad PGM header values");
  Matrix img(h, w);
  if (magic == "P2") {
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) img(y, x) = static_cast<double>(next_int());
    return img;
  }
  ++pos;  // single whitespace after maxval
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  require(bytes.size() >= pos + bpp * static_cast<std::size_t>(w * h), ErrorCode::Parse, origin + ": truncated PGM raster");
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
      img(y, x) = bpp == 1 ? p[0] : static_cast<double>((p[0] << 8) | p[1]);
      pos += bpp;
    }
  return img;
}

inline Matrix read_image(const std::string& path) {
  const std::string bytes = read_text(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) return parse_pgm(bytes, path);
  return parse_csv_matrix(bytes, path);
}

/// ASCII P2 with values rounded and clamped into [0, maxval].
inline std::string format_pgm(const Matrix& img, int maxval = 255) {
  std::string out = "P2\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n" +
                    std::to_string(maxval) + "\n";
  for (Index y = 0; y < img.rows(); ++y) {
    for (Index x = 0; x < img.cols(); ++x) {
      const long v = std::clamp<long>(std::lround(img(y, x)), 0, maxval);
      out += (x ? " " : "") + std::to_string(v);
    }
    out += "\n";
  }
  return out;
}

}  // namespace manikernel::io
