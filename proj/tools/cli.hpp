#pragma once

// Command-line front end. run() is the whole program; main() only forwards
// argv and the standard streams, so tests can drive it in-process.

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "manikernel/manikernel.hpp"

namespace manikernel::cli {

using io::Json;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

namespace detail {

/// Everything a subcommand needs to emit reproducible output.
struct Context {
  std::string command;
  std::string config;  // the argument list with output paths removed
  std::uint64_t seed = 0;
  std::string out_path;
  std::ostream* out = nullptr;

  io::Provenance provenance() const {
    return {{"command", command}, {"config", config}, {"seed", std::to_string(seed)}, {"version", io::kVersion}};
  }

  void emit(const std::string& text) const {
    if (out_path.empty()) *out << text;
    else io::write_text(out_path, text);
  }

  void emit_json(const Json& j) const { emit(j.dump(2) + "\n"); }
};

inline std::string join_config(const std::vector<std::string>& args) {
  std::string cfg;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out=", 0) == 0) continue;
    if (!cfg.empty()) cfg += ' ';
    cfg += args[i];
  }
  return cfg;
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(used == item.size(), ErrorCode::InvalidArgument, what + ": bad number '" + item + "'");
    } catch (const std::logic_error&) {
      fail(ErrorCode::InvalidArgument, what + ": bad number '" + item + "'");
    }
  }
  require(!out.empty(), ErrorCode::InvalidArgument, what + " is empty");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_double_list(text, what)) {
    require(v == static_cast<int>(v), ErrorCode::InvalidArgument, what + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline Json vector_json(const Vector& v) {
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

/// Numeric gamma, or "median" for 1 / median squared distance.
inline double resolve_gamma(const std::string& text, const Matrix& d2) {
  if (text == "median") return synth::median_heuristic_gamma(d2);
  const double g = parse_double_list(text, "--gamma").at(0);
  require(g > 0.0, ErrorCode::BadGamma, "gamma must be positive");
  return g;
}

/// Kernel options shared by the Gram-based subcommands.
struct KernelArgs {
  std::string data;
  std::string metric = "log-euclidean";
  double alpha = 0.5;
  std::string gamma = "1";

  void attach(CLI::App* sub) {
    sub->add_option("--data", data, "dataset JSON")->required();
    sub->add_option("--metric", metric, "metric name")->capture_default_str();
    sub->add_option("--alpha", alpha, "power-Euclidean exponent")->capture_default_str();
    sub->add_option("--gamma", gamma, "kernel bandwidth, or 'median'")->capture_default_str();
  }
};

struct LoadedKernel {
  io::Dataset data;
  GramMatrix gram;
  Matrix d2;
};

inline LoadedKernel load_kernel(const KernelArgs& a, bool audit = false) {
  LoadedKernel out{io::read_dataset(a.data), {Matrix(), KernelSpec(EuclideanMetric{}, 1.0), std::nullopt}, Matrix()};
  const MetricSelector metric = io::parse_metric(a.metric, a.alpha);
  out.d2 = squared_distance_matrix(metric, out.data.points);
  const KernelSpec spec(metric, resolve_gamma(a.gamma, out.d2));
  out.gram = GramMatrix{gaussian_from_sq_distances(out.d2, spec.gamma), spec, std::nullopt};
  if (audit) out.gram.min_eigen = min_eigenvalue(out.gram.entries);
  return out;
}

inline Json header(const Context& ctx) { return io::provenance_json(ctx.provenance()); }

// ------------------------------------------------------------ subcommands

struct DefinitenessArgs {
  std::string manifold = "spd", metric = "log-euclidean", grid = "0.01,0.1,1,10,100";
  double alpha = 0.5;
  Index dim = 3, rank = 1, m = 40;
  int trials = 50;
};

inline int cmd_definiteness(const Context& ctx, const DefinitenessArgs& a) {
  SearchTarget target{io::parse_metric(a.metric, a.alpha), a.dim, a.rank};
  const std::string kind = target.is_spd() ? "spd" : target.is_grassmann() ? "grassmann" : "euclidean";
  require(kind == a.manifold, ErrorCode::UnsupportedMetric,
          "metric " + a.metric + " does not belong to manifold " + a.manifold);
  SearchConfig config{parse_double_list(a.grid, "--gamma-grid"), a.m, a.trials, ctx.seed};
  const DefinitenessReport r = definiteness_search(target, config);
  Json j = Json::object();
  j["provenance"] = header(ctx);
  j["target"] = io::metric_to_json(target.metric);
  j["target"]["dim"] = a.dim;
  if (target.is_grassmann()) j["target"]["rank"] = a.rank;
  j["gamma_grid"] = config.gamma_grid;
  j["points_per_trial"] = a.m;
  j["verdict"] = std::string(verdict_name(r.verdict));
  j["min_eigen"] = r.min_eigen;
  j["gamma_at_min"] = r.gamma;
  j["witness_tol"] = r.witness_tol;
  j["trials_run"] = r.trials_run;
  if (r.witness_trial) {
    j["witness_trial"] = *r.witness_trial;
    j["witness_points"] = io::dataset_to_json({*r.witness_points, {}});
  } else {
    j["witness_trial"] = nullptr;
  }
  ctx.emit_json(j);
  return kOk;
}

inline int cmd_gram(const Context& ctx, const KernelArgs& k, bool audit, const std::string& format) {
  const LoadedKernel lk = load_kernel(k, audit);
  if (format == "json") ctx.emit_json(io::gram_to_json(lk.gram, ctx.provenance()));
  else ctx.emit(io::gram_to_csv(lk.gram, ctx.provenance()));
  return kOk;
}

inline int cmd_cluster(const Context& ctx, const KernelArgs& k, learn::KMeansOptions opts) {
  const LoadedKernel lk = load_kernel(k);
  opts.seed = ctx.seed;
  const learn::ClusterResult r = learn::kernel_kmeans(lk.gram.entries, opts);
  Json j = Json::object();
  j["provenance"] = header(ctx);
  j["kernel"] = io::kernel_spec_to_json(lk.gram.spec);
  j["k"] = opts.k;
  j["labels"] = r.labels;
  j["energy"] = r.energy;
  j["restarts"] = r.restarts_used;
  j["best_restart"] = r.best_restart;
  j["energy_trace"] = r.energy_trace;
  if (!lk.data.labels.empty()) {
    std::vector<int> truth = lk.data.labels;
    std::map<int, int> remap;
    for (int& t : truth) t = remap.emplace(t, static_cast<int>(remap.size())).first->second;
    const int classes = std::max(opts.k, static_cast<int>(remap.size()));
    if (classes <= 8) j["accuracy"] = synth::clustering_accuracy(truth, r.labels, classes);
  }
  ctx.emit_json(j);
  return kOk;
}

inline std::vector<std::string> numbered(const std::string& prefix, Index n) {
  std::vector<std::string> names;
  for (Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

inline std::string eigen_list(const Vector& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + io::format_double(v(i));
  return s;
}

inline int cmd_kpca(const Context& ctx, const KernelArgs& k, Index l) {
  const LoadedKernel lk = load_kernel(k);
  const learn::KernelPcaModel model = learn::kernel_pca(lk.gram.entries, l);
  auto prov = ctx.provenance();
  prov.emplace_back("gamma", io::format_double(lk.gram.spec.gamma));
  prov.emplace_back("eigenvalues", eigen_list(model.embedding.eigenvalues));
  ctx.emit(io::format_csv_matrix(model.embedding.coords, prov, numbered("pc", l)));
  return kOk;
}

inline int cmd_kfda(const Context& ctx, const KernelArgs& k, Index dims, std::optional<double> ridge) {
  const LoadedKernel lk = load_kernel(k);
  require(!lk.data.labels.empty(), ErrorCode::MissingLabels, "kfda needs a labeled dataset");
  const learn::KernelFdaModel model = learn::kernel_fda(lk.gram.entries, lk.data.labels, dims, ridge);
  auto prov = ctx.provenance();
  prov.emplace_back("gamma", io::format_double(lk.gram.spec.gamma));
  prov.emplace_back("ridge", io::format_double(model.ridge));
  prov.emplace_back("eigenvalues", eigen_list(model.embedding.eigenvalues));
  Matrix table(model.embedding.coords.rows(), dims + 1);
  table.leftCols(dims) = model.embedding.coords;
  for (Index i = 0; i < table.rows(); ++i) table(i, dims) = lk.data.labels[static_cast<std::size_t>(i)];
  auto names = numbered("fd", dims);
  names.push_back("label");
  ctx.emit(io::format_csv_matrix(table, prov, names));
  return kOk;
}

struct SvmArgs {
  double C = 1.0;
  double kkt_tol = 1e-3;
  int folds = 0;
  std::string gamma_grid = "0.01,0.1,1,10,100";
  std::string c_grid = "0.1,1,10,100";
};

inline Matrix submatrix(const Matrix& k, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b) out(static_cast<Index>(a), static_cast<Index>(b)) = k(rows[a], cols[b]);
  return out;
}

struct CvCell {
  double gamma, C, accuracy;
};

/// Grid search over (gamma, C) with folds fixed by a seeded shuffle.
inline std::vector<CvCell> cross_validate(const Matrix& d2, const std::vector<int>& labels, int folds,
                                          const std::vector<double>& gammas, const std::vector<double>& cs,
                                          double kkt_tol, std::uint64_t seed) {
  const auto m = static_cast<Index>(labels.size());
  require(folds >= 2 && folds <= m, ErrorCode::InvalidArgument, "--cv needs 2 <= folds <= m");
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(m));
  for (std::size_t p = 0; p < order.size(); ++p) fold_of[static_cast<std::size_t>(order[p])] = static_cast<int>(p) % folds;

  std::vector<CvCell> cells;
  for (double g : gammas) {
    require(g > 0.0, ErrorCode::BadGamma, "gamma grid entries must be positive");
    const Matrix k = gaussian_from_sq_distances(d2, g);
    for (double c : cs) {
      int hits = 0;
      for (int f = 0; f < folds; ++f) {
        std::vector<Index> train, test;
        for (Index i = 0; i < m; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        std::vector<int> y;
        for (Index i : train) y.push_back(labels[static_cast<std::size_t>(i)]);
        bool both = std::find(y.begin(), y.end(), 1) != y.end() && std::find(y.begin(), y.end(), -1) != y.end();
        require(both, ErrorCode::OneClass, "a cross-validation fold leaves only one class for training");
        learn::SvmOptions opts;
        opts.C = c;
        opts.kkt_tol = kkt_tol;
        const learn::SvmModel model = learn::svm_train(submatrix(k, train, train), y, opts);
        const Vector dec = learn::svm_predict(model, submatrix(k, train, test));
        for (std::size_t q = 0; q < test.size(); ++q)
          if ((dec(static_cast<Index>(q)) > 0 ? 1 : -1) == labels[static_cast<std::size_t>(test[q])]) ++hits;
      }
      cells.push_back({g, c, static_cast<double>(hits) / static_cast<double>(m)});
    }
  }
  return cells;
}

inline int cmd_svm_train(const Context& ctx, KernelArgs k, const SvmArgs& a) {
  const io::Dataset data = io::read_dataset(k.data);
  require(!data.labels.empty(), ErrorCode::MissingLabels, "svm-train needs a labeled dataset");
  const MetricSelector metric = io::parse_metric(k.metric, k.alpha);
  const Matrix d2 = squared_distance_matrix(metric, data.points);
  double gamma = 0.0, C = a.C;
  Json cv = nullptr;
  if (a.folds > 0) {
    const auto cells = cross_validate(d2, data.labels, a.folds, parse_double_list(a.gamma_grid, "--gamma-grid"),
                                      parse_double_list(a.c_grid, "--c-grid"), a.kkt_tol, ctx.seed);
    const CvCell* best = &cells.front();
    for (const auto& c : cells)
      if (c.accuracy > best->accuracy) best = &c;
    gamma = best->gamma;
    C = best->C;
    cv = Json::object();
    cv["folds"] = a.folds;
    cv["grid"] = Json::array();
    for (const auto& c : cells) cv["grid"].push_back({{"gamma", c.gamma}, {"C", c.C}, {"accuracy", c.accuracy}});
    cv["best"] = {{"gamma", gamma}, {"C", C}, {"accuracy", best->accuracy}};
  } else {
    gamma = resolve_gamma(k.gamma, d2);
  }
  learn::SvmOptions opts;
  opts.C = C;
  opts.kkt_tol = a.kkt_tol;
  learn::SvmModel model = learn::svm_train(gaussian_from_sq_distances(d2, gamma), data.labels, opts);
  model.spec = KernelSpec(metric, gamma);
  Json j = io::svm_to_json(io::store_svm(model, data.points), ctx.provenance());
  j["kkt_violation"] = model.kkt_violation;
  j["iterations"] = model.iterations;
  j["cross_validation"] = cv;
  ctx.emit_json(j);
  return kOk;
}

inline int cmd_svm_predict(const Context& ctx, const std::string& model_path, const std::string& data_path) {
  const io::StoredSvm s = io::svm_from_json(io::parse_json(io::read_text(model_path), model_path), model_path);
  const io::Dataset data = io::read_dataset(data_path);
  const Matrix kcols = cross_kernel(*s.model.spec, s.support_points.points, data.points);
  const Vector dec = learn::svm_predict(s.model, kcols);
  Matrix table(dec.size(), 2);
  int hits = 0;
  for (Index i = 0; i < dec.size(); ++i) {
    table(i, 0) = dec(i);
    table(i, 1) = dec(i) > 0 ? 1 : -1;
    if (!data.labels.empty() && table(i, 1) == data.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  auto prov = ctx.provenance();
  prov.emplace_back("model", model_path);
  if (!data.labels.empty())
    prov.emplace_back("accuracy", io::format_double(static_cast<double>(hits) / static_cast<double>(dec.size())));
  ctx.emit(io::format_csv_matrix(table, prov, {"decision", "label"}));
  return kOk;
}

inline int cmd_mkl_train(const Context& ctx, const std::vector<std::string>& data_paths,
                         const std::vector<std::string>& kernels, double alpha, learn::MklOptions opts) {
  require(data_paths.size() == 1 || data_paths.size() == kernels.size(), ErrorCode::InvalidArgument,
          "give one --data for all kernels or one per --kernel");
  std::vector<io::Dataset> sets;
  for (const auto& p : data_paths) sets.push_back(io::read_dataset(p));
  const auto& labels = sets.front().labels;
  require(!labels.empty(), ErrorCode::MissingLabels, "mkl-train needs a labeled dataset");
  for (const auto& s : sets)
    require(s.labels == labels, ErrorCode::DimMismatch, "all datasets must carry the same labels");

  std::vector<Matrix> grams;
  Json specs = Json::array();
  for (std::size_t j = 0; j < kernels.size(); ++j) {
    const auto colon = kernels[j].rfind(':');
    require(colon != std::string::npos, ErrorCode::InvalidArgument, "--kernel expects metric:gamma");
    const io::Dataset& d = sets[sets.size() == 1 ? 0 : j];
    const MetricSelector metric = io::parse_metric(kernels[j].substr(0, colon), alpha);
    const Matrix d2 = squared_distance_matrix(metric, d.points);
    const KernelSpec spec(metric, resolve_gamma(kernels[j].substr(colon + 1), d2));
    grams.push_back(gaussian_from_sq_distances(d2, spec.gamma));
    Json s = io::kernel_spec_to_json(spec);
    s["data"] = data_paths[sets.size() == 1 ? 0 : j];
    specs.push_back(std::move(s));
  }
  const learn::MklModel model = learn::mkl_train(grams, labels, opts);
  Json j = Json::object();
  j["provenance"] = header(ctx);
  j["format"] = "manikernel-mkl";
  j["kernels"] = std::move(specs);
  j["weights"] = vector_json(model.weights);
  j["C"] = opts.C;
  j["bias"] = model.svm.bias;
  j["dual_coefs"] = vector_json(model.svm.dual_coefs);
  j["objective_trace"] = model.objective_trace;
  j["converged"] = model.converged;
  ctx.emit_json(j);
  return kOk;
}

struct CovArgs {
  std::vector<std::string> images;
  std::string features = "pedestrian";
  std::vector<std::string> rects;
  std::optional<double> epsilon;
  bool normalize = false;
  std::size_t select = 0;
  std::string positives;
  double max_overlap = 0.75;
  int steps = 5;
  std::string format = "report";
  std::string labels;
};

inline features::Rect parse_rect(const std::string& text) {
  const auto v = parse_int_list(text, "--rect");
  require(v.size() == 4, ErrorCode::InvalidArgument, "--rect expects x0,y0,w,h");
  return {v[0], v[1], v[2], v[3]};
}

inline Json rect_json(const features::Rect& r) { return Json::array({r.x0, r.y0, r.w, r.h}); }

inline int cmd_covdesc(const Context& ctx, const CovArgs& a) {
  require(a.features == "pedestrian" || a.features == "texture", ErrorCode::InvalidArgument,
          "--features must be pedestrian or texture");
  std::vector<features::FeatureStack> stacks;
  for (const auto& path : a.images) {
    const Matrix img = io::read_image(path);
    stacks.push_back(a.features == "pedestrian" ? features::pedestrian_feature_maps(img)
                                                : features::texture_feature_maps(img));
  }
  const Index h = stacks.front().height, w = stacks.front().width;
  for (const auto& s : stacks)
    require(s.height == h && s.width == w, ErrorCode::DimMismatch, "all images must share one size");

  std::vector<features::Rect> rects;
  if (a.select > 0) rects = features::candidate_subwindows(h, w, a.steps);
  else if (a.rects.empty()) rects.push_back({0, 0, w, h});
  else for (const auto& r : a.rects) rects.push_back(parse_rect(r));

  std::vector<std::vector<SpdMatrix>> desc(stacks.size());
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const features::IntegralCovariance integral(stacks[i]);
    const SpdMatrix full = features::region_covariance(integral, {0, 0, w, h}, a.epsilon);
    for (const auto& r : rects) {
      SpdMatrix c = features::region_covariance(integral, r, a.epsilon);
      desc[i].push_back(a.normalize ? features::normalize_descriptor(c, full) : c);
    }
  }

  if (a.format == "dataset") {
    require(a.select == 0, ErrorCode::InvalidArgument, "--format dataset cannot be combined with --select");
    io::Dataset out;
    SpdSet pts;
    for (const auto& row : desc) pts.insert(pts.end(), row.begin(), row.end());
    out.points = std::move(pts);
    if (!a.labels.empty()) out.labels = parse_int_list(a.labels, "--labels");
    require(out.labels.empty() || out.labels.size() == point_count(out.points), ErrorCode::DimMismatch,
            "--labels needs one label per descriptor");
    ctx.emit_json(io::dataset_to_json(out, ctx.provenance()));
    return kOk;
  }
  require(a.format == "report", ErrorCode::InvalidArgument, "--format must be report or dataset");

  Json j = Json::object();
  j["provenance"] = header(ctx);
  j["features"] = stacks.front().names;
  j["height"] = h;
  j["width"] = w;
  if (a.select > 0) {
    std::vector<bool> pos(stacks.size(), true);
    if (!a.positives.empty()) {
      const auto flags = parse_int_list(a.positives, "--positives");
      require(flags.size() == stacks.size(), ErrorCode::DimMismatch, "--positives needs one flag per image");
      for (std::size_t i = 0; i < flags.size(); ++i) pos[i] = flags[i] != 0;
    }
    const auto chosen = features::select_subwindows(rects, desc, pos, a.select, a.max_overlap);
    j["candidates"] = rects.size();
    j["selected"] = Json::array();
    for (const auto& s : chosen) j["selected"].push_back({{"rect", rect_json(s.rect)}, {"score", s.score}});
    ctx.emit_json(j);
    return kOk;
  }
  j["descriptors"] = Json::array();
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    Json per = Json::array();
    for (std::size_t r = 0; r < rects.size(); ++r)
      per.push_back({{"rect", rect_json(rects[r])}, {"covariance", io::matrix_to_json(desc[i][r].matrix())}});
    j["descriptors"].push_back({{"image", a.images[i]}, {"regions", std::move(per)}});
  }
  ctx.emit_json(j);
  return kOk;
}

inline int cmd_subspace(const Context& ctx, const std::vector<std::string>& inputs, Index r, const std::string& labels) {
  GrassmannSet pts;
  for (const auto& path : inputs) pts.push_back(subspace_from_vectors(io::read_csv_matrix(path).transpose(), r));
  io::Dataset out{std::move(pts), {}};
  if (!labels.empty()) out.labels = parse_int_list(labels, "--labels");
  require(out.labels.empty() || out.labels.size() == inputs.size(), ErrorCode::DimMismatch,
          "--labels needs one label per input");
  ctx.emit_json(io::dataset_to_json(out, ctx.provenance()));
  return kOk;
}

struct SynthArgs {
  std::string kind = "spd-blobs";
  int clusters = 3, per_cluster = 40;
  Index dim = 3, ambient = 10, rank = 2;
  double separation = 1.0, spread = 0.3, noise = 0.1;
  bool sign_labels = false;
};

inline int cmd_synth(const Context& ctx, const SynthArgs& a) {
  synth::LabeledPoints lp;
  if (a.kind == "spd-blobs") {
    lp = synth::spd_blobs({a.clusters, a.per_cluster, a.dim, a.separation, a.spread, ctx.seed});
  } else if (a.kind == "grassmann-clusters") {
    lp = synth::grassmann_clusters({a.clusters, a.per_cluster, a.ambient, a.rank, a.spread, ctx.seed});
  } else if (a.kind == "rings") {
    lp = synth::euclidean_rings(a.per_cluster, a.noise, ctx.seed);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown --kind '" + a.kind + "'");
  }
  if (a.sign_labels) {
    for (int& l : lp.labels) {
      require(l == 0 || l == 1, ErrorCode::InvalidArgument, "--sign-labels needs exactly two clusters");
      l = l == 0 ? -1 : 1;
    }
  }
  ctx.emit_json(io::dataset_to_json({std::move(lp.points), std::move(lp.labels)}, ctx.provenance()));
  return kOk;
}

}  // namespace detail

/// Runs one command line (without the program name). Exit codes: 0 success,
/// 1 usage error, 2 data error, 3 numerical failure.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Gaussian RBF kernels and kernel methods on SPD and Grassmann manifolds", "manikernel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kVersion);

  std::uint64_t seed = 0;
  std::string out_path;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
    sub->add_option("--out", out_path, "output file (default: stdout)");
  };

  DefinitenessArgs def;
  auto* s_def = app.add_subcommand("definiteness", "randomized search for non-PSD Gaussian Gram matrices");
  s_def->add_option("--manifold", def.manifold, "spd, grassmann or euclidean")->capture_default_str();
  s_def->add_option("--metric", def.metric)->capture_default_str();
  s_def->add_option("--alpha", def.alpha)->capture_default_str();
  s_def->add_option("--dim", def.dim, "SPD size d or Grassmann ambient n")->capture_default_str();
  s_def->add_option("--rank", def.rank, "Grassmann subspace dimension r")->capture_default_str();
  s_def->add_option("--gamma-grid", def.grid)->capture_default_str();
  s_def->add_option("--m", def.m, "points per trial")->capture_default_str();
  s_def->add_option("--trials", def.trials)->capture_default_str();
  common(s_def);

  KernelArgs kargs;
  bool audit = false;
  std::string gram_format = "csv";
  auto* s_gram = app.add_subcommand("gram", "Gaussian Gram matrix with optional eigenvalue audit");
  kargs.attach(s_gram);
  s_gram->add_flag("--audit", audit, "record the minimum eigenvalue");
  s_gram->add_option("--format", gram_format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  common(s_gram);

  learn::KMeansOptions km;
  auto* s_cluster = app.add_subcommand("cluster", "kernel k-means");
  kargs.attach(s_cluster);
  s_cluster->add_option("--k", km.k)->capture_default_str();
  s_cluster->add_option("--restarts", km.restarts)->capture_default_str();
  s_cluster->add_option("--max-iter", km.max_iter)->capture_default_str();
  common(s_cluster);

  Index l = 2;
  auto* s_kpca = app.add_subcommand("kpca", "kernel PCA embedding");
  kargs.attach(s_kpca);
  s_kpca->add_option("--l", l, "number of components")->capture_default_str();
  common(s_kpca);

  Index dims = 1;
  std::optional<double> ridge;
  auto* s_kfda = app.add_subcommand("kfda", "kernel Fisher discriminant embedding");
  kargs.attach(s_kfda);
  s_kfda->add_option("--dims", dims)->capture_default_str();
  s_kfda->add_option("--ridge", ridge, "within-class regularizer (default: data-scaled)");
  common(s_kfda);

  SvmArgs svm;
  auto* s_train = app.add_subcommand("svm-train", "binary SVM on labels +1/-1");
  kargs.attach(s_train);
  s_train->add_option("--C", svm.C)->capture_default_str();
  s_train->add_option("--kkt-tol", svm.kkt_tol)->capture_default_str();
  s_train->add_option("--cv", svm.folds, "folds for a grid search over gamma and C");
  s_train->add_option("--gamma-grid", svm.gamma_grid)->capture_default_str();
  s_train->add_option("--c-grid", svm.c_grid)->capture_default_str();
  common(s_train);

  std::string model_path, data_path;
  auto* s_pred = app.add_subcommand("svm-predict", "decision values from a stored SVM");
  s_pred->add_option("--model", model_path)->required();
  s_pred->add_option("--data", data_path)->required();
  common(s_pred);

  std::vector<std::string> mkl_data, mkl_kernels;
  double mkl_alpha = 0.5;
  learn::MklOptions mkl;
  auto* s_mkl = app.add_subcommand("mkl-train", "multiple kernel learning over simplex weights");
  s_mkl->add_option("--data", mkl_data, "dataset JSON, once or once per kernel")->required();
  s_mkl->add_option("--kernel", mkl_kernels, "metric:gamma, repeatable")->required();
  s_mkl->add_option("--alpha", mkl_alpha)->capture_default_str();
  s_mkl->add_option("--C", mkl.C)->capture_default_str();
  s_mkl->add_option("--max-outer", mkl.max_outer_iter)->capture_default_str();
  s_mkl->add_option("--tol", mkl.tol)->capture_default_str();
  common(s_mkl);

  CovArgs cov;
  auto* s_cov = app.add_subcommand("covdesc", "region covariance descriptors and subwindow selection");
  s_cov->add_option("--image", cov.images, "PGM or CSV image, repeatable")->required();
  s_cov->add_option("--features", cov.features, "pedestrian or texture")->capture_default_str();
  s_cov->add_option("--rect", cov.rects, "x0,y0,w,h, repeatable (default: whole image)");
  s_cov->add_option("--epsilon", cov.epsilon, "regularizer (default: 1e-6 (trace + 1))");
  s_cov->add_flag("--normalize", cov.normalize, "scale by the full-window covariance diagonal");
  s_cov->add_option("--select", cov.select, "pick this many subwindows from the candidate grid");
  s_cov->add_option("--positives", cov.positives, "0/1 per image (default: all positive)");
  s_cov->add_option("--max-overlap", cov.max_overlap)->capture_default_str();
  s_cov->add_option("--steps", cov.steps, "candidate sizes per axis")->capture_default_str();
  s_cov->add_option("--format", cov.format, "report or dataset")->capture_default_str();
  s_cov->add_option("--labels", cov.labels, "labels for --format dataset");
  common(s_cov);

  std::vector<std::string> sub_inputs;
  Index sub_rank = 1;
  std::string sub_labels;
  auto* s_sub = app.add_subcommand("subspace", "Grassmann points from CSV vector sets (one vector per row)");
  s_sub->add_option("--input", sub_inputs, "CSV file, repeatable")->required();
  s_sub->add_option("--rank", sub_rank)->capture_default_str();
  s_sub->add_option("--labels", sub_labels, "one label per input");
  common(s_sub);

  SynthArgs syn;
  auto* s_syn = app.add_subcommand("synth", "seeded synthetic datasets");
  s_syn->add_option("--kind", syn.kind, "spd-blobs, grassmann-clusters or rings")->capture_default_str();
  s_syn->add_option("--clusters", syn.clusters)->capture_default_str();
  s_syn->add_option("--per-cluster", syn.per_cluster)->capture_default_str();
  s_syn->add_option("--dim", syn.dim, "SPD size")->capture_default_str();
  s_syn->add_option("--ambient", syn.ambient, "Grassmann ambient dimension")->capture_default_str();
  s_syn->add_option("--rank", syn.rank, "Grassmann subspace dimension")->capture_default_str();
  s_syn->add_option("--separation", syn.separation)->capture_default_str();
  s_syn->add_option("--spread", syn.spread)->capture_default_str();
  s_syn->add_option("--noise", syn.noise, "ring radius noise")->capture_default_str();
  s_syn->add_flag("--sign-labels", syn.sign_labels, "map two clusters to labels -1/+1");
  common(s_syn);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  ctx.config = join_config(args);
  ctx.seed = seed;
  ctx.out_path = out_path;
  ctx.out = &out;

  try {
    if (*s_def) return cmd_definiteness(ctx, def);
    if (*s_gram) return cmd_gram(ctx, kargs, audit, gram_format);
    if (*s_cluster) return cmd_cluster(ctx, kargs, km);
    if (*s_kpca) return cmd_kpca(ctx, kargs, l);
    if (*s_kfda) return cmd_kfda(ctx, kargs, dims, ridge);
    if (*s_train) return cmd_svm_train(ctx, kargs, svm);
    if (*s_pred) return cmd_svm_predict(ctx, model_path, data_path);
    if (*s_mkl) return cmd_mkl_train(ctx, mkl_data, mkl_kernels, mkl_alpha, mkl);
    if (*s_cov) return cmd_covdesc(ctx, cov);
    if (*s_sub) return cmd_subspace(ctx, sub_inputs, sub_rank, sub_labels);
    if (*s_syn) return cmd_synth(ctx, syn);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::InvalidArgument) return kUsage;
    return category(e.code()) == ErrorCategory::Numerical ? kNumerical : kData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace manikernel::cli
