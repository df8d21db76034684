// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "manikernel/manikernel.hpp"

using namespace manikernel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<double> kGrid = {1e-2, 1e-1, 1.0, 10.0, 100.0};
constexpr Index kM = 40;

// ------------------------------------------------------------------ AC1

Outcome ac1_definiteness_matrix() {
  Outcome o;
  const auto t0 = Clock::now();
  struct Case {
    std::string name;
    SearchTarget target;
  };
  const std::vector<Case> psd = {
      {"LE SPD(3)", {SpdMetric::log_euclidean(), 3, 1}},
      {"LE SPD(5)", {SpdMetric::log_euclidean(), 5, 1}},
      {"Cholesky SPD(3)", {SpdMetric{SpdMetricKind::Cholesky, 0.5}, 3, 1}},
      {"Cholesky SPD(5)", {SpdMetric{SpdMetricKind::Cholesky, 0.5}, 5, 1}},
      {"PowerEuclidean SPD(3)", {SpdMetric::power_euclidean(0.5), 3, 1}},
      {"PowerEuclidean SPD(5)", {SpdMetric::power_euclidean(0.5), 5, 1}},
      {"Projection G(5,2)", {GrassmannMetric::Projection, 5, 2}},
      {"Projection G(10,3)", {GrassmannMetric::Projection, 10, 3}},
  };
  const std::vector<Case> witness = {
      {"ArcLength G(5,2)", {GrassmannMetric::ArcLength, 5, 2}},
      {"FubiniStudy G(5,2)", {GrassmannMetric::FubiniStudy, 5, 2}},
      {"Chordal2Norm G(5,2)", {GrassmannMetric::Chordal2Norm, 5, 2}},
      {"ChordalFNorm G(5,2)", {GrassmannMetric::ChordalFNorm, 5, 2}},
      {"RootStein SPD(3)", {SpdMetric{SpdMetricKind::RootSteinDivergence, 0.5}, 3, 1}},
  };
  double worst_psd = std::numeric_limits<double>::infinity();
  for (const auto& c : psd) {
    const DefinitenessReport r = definiteness_search(c.target, {kGrid, kM, 50, 7});
    worst_psd = std::min(worst_psd, r.min_eigen);
    o.require(r.verdict == Verdict::PsdWithinTol && r.min_eigen >= -1e-8 * kM,
              c.name + " min eigen " + fmt("%.3g", r.min_eigen));
  }
  double weakest_witness = -std::numeric_limits<double>::infinity();
  for (const auto& c : witness) {
    const DefinitenessReport r = definiteness_search(c.target, {kGrid, kM, 200, 7});
    weakest_witness = std::max(weakest_witness, r.min_eigen);
    o.require(r.verdict == Verdict::WitnessFound && r.min_eigen < -1e-7 * kM,
              c.name + " no witness (min eigen " + fmt("%.3g", r.min_eigen) + ")");
  }
  const double t = seconds_since(t0);
  o.require(t <= 120.0, "runtime " + fmt("%.1f s", t));
  if (o.pass)
    o.detail = "PSD worst min eigen " + fmt("%.3g", worst_psd) + ", weakest witness " + fmt("%.3g", weakest_witness) +
               ", " + fmt("%.1f s", t);
  return o;
}

// ------------------------------------------------------------------ AC2

Outcome ac2_cnd_psd_consistency() {
  Outcome o;
  const std::vector<SearchTarget> yes = {
      {SpdMetric::log_euclidean(), 3, 1},
      {SpdMetric{SpdMetricKind::Cholesky, 0.5}, 3, 1},
      {SpdMetric::power_euclidean(0.5), 3, 1},
      {GrassmannMetric::Projection, 6, 2},
  };
  const double tol = 1e-8 * kM;
  int sets = 0, agreements = 0;
  for (const auto& target : yes) {
    Rng rng(11);
    for (int s = 0; s < 20; ++s, ++sets) {
      const PointSet pts = sample_points(target, kM, rng);
      const Matrix d2 = squared_distance_matrix(target.metric, pts);
      const bool cnd = cnd_check(d2, tol).passed;
      bool all_psd = true;
      for (double g : kGrid) all_psd = all_psd && psd_check(gaussian_from_sq_distances(d2, g), tol).passed;
      if (cnd == all_psd) ++agreements;
      o.require(cnd == all_psd, metric_name(target.metric) + " set " + std::to_string(s) + " disagrees");
    }
  }
  if (o.pass) o.detail = std::to_string(agreements) + "/" + std::to_string(sets) + " sets agree";
  return o;
}

// ------------------------------------------------------------------ AC3

Outcome ac3_fast_projection() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(3);
  std::uniform_int_distribution<Index> rank(1, 5);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Index r = rank(rng);
    const Index n = std::uniform_int_distribution<Index>(r + 1, 50)(rng);
    const GrassmannPoint a = make_grassmann(random_gaussian(n, r, rng));
    const GrassmannPoint b = make_grassmann(random_gaussian(n, r, rng));
    const double fast = static_cast<double>(r) - (a.basis().transpose() * b.basis()).squaredNorm();
    const Matrix pa = a.basis() * a.basis().transpose(), pb = b.basis() * b.basis().transpose();
    const double projector = 0.5 * (pa - pb).squaredNorm();
    const double sines = principal_angles(a, b).array().sin().square().sum();
    worst = std::max({worst, std::abs(fast - projector), std::abs(fast - sines),
                      std::abs(projection_dist_sq_fast(a, b) - projector)});
  }
  const double t = seconds_since(t0);
  o.require(worst <= 1e-9, "max deviation " + fmt("%.3g", worst));
  o.require(t <= 10.0, "runtime " + fmt("%.2f s", t));
  if (o.pass) o.detail = "max deviation " + fmt("%.3g", worst) + ", " + fmt("%.2f s", t);
  return o;
}

// ------------------------------------------------------------------ AC4

Outcome ac4_karcher() {
  Outcome o;
  Rng rng(4);
  double worst_le = 0.0, worst_grad = 0.0;
  for (int s = 0; s < 20; ++s) {
    const Index d = 2 + s % 4;
    SpdSet pts;
    for (int i = 0; i < 8 + s % 5; ++i) pts.push_back(random_spd(d, rng));
    const SpdMatrix closed = karcher_mean_log_euclidean(pts);

    // Riemannian gradient descent for sum d_LE^2, in log coordinates
    std::vector<Matrix> logs;
    for (const auto& p : pts) logs.push_back(spd_log(p));
    Matrix l = logs.front();
    for (int it = 0; it < 500; ++it) {
      Matrix step = Matrix::Zero(d, d);
      for (const auto& x : logs) step += (x - l) / static_cast<double>(logs.size());
      l += 0.5 * step;
      if (step.norm() < 1e-15) break;
    }
    worst_le = std::max(worst_le, (spd_exp(l).matrix() - closed.matrix()).norm());
    worst_le = std::max(worst_le, (karcher_mean_iterative(SpdMetric::log_euclidean(), pts).matrix() - closed.matrix()).norm());

    // affine-invariant stationarity: || (1/m) sum log(M^-1/2 X M^-1/2) ||_F
    const SpdMatrix ai = karcher_mean_iterative(SpdMetric::affine_invariant(), pts);
    Eigen::SelfAdjointEigenSolver<Matrix> es(ai.matrix());
    const Matrix inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                            es.eigenvectors().transpose();
    Matrix grad = Matrix::Zero(d, d);
    for (const auto& p : pts) {
      Eigen::SelfAdjointEigenSolver<Matrix> w(inv_sqrt * p.matrix() * inv_sqrt);
      grad += w.eigenvectors() * w.eigenvalues().array().log().matrix().asDiagonal() * w.eigenvectors().transpose();
    }
    worst_grad = std::max(worst_grad, grad.norm() / static_cast<double>(pts.size()));
  }
  o.require(worst_le <= 1e-8, "LE disagreement " + fmt("%.3g", worst_le));
  o.require(worst_grad < 1e-7, "AI gradient norm " + fmt("%.3g", worst_grad));
  if (o.pass) o.detail = "LE gap " + fmt("%.3g", worst_le) + ", AI gradient " + fmt("%.3g", worst_grad);
  return o;
}

// ------------------------------------------------------------------ AC5

double partition_energy(const Matrix& k, const std::vector<int>& labels) {
  double e = 0.0;
  for (int c = 0; c < 2; ++c) {
    std::vector<Index> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(static_cast<Index>(i));
    if (idx.empty()) continue;
    double block = 0.0;
    for (Index i : idx) {
      e += k(i, i);
      for (Index j : idx) block += k(i, j);
    }
    e -= block / static_cast<double>(idx.size());
  }
  return e;
}

Outcome ac5_oracles() {
  Outcome o;
  int kmeans_ok = 0;
  for (std::uint64_t s = 0; s < 24; ++s) {
    Rng rng(500 + s);
    const Index m = 5 + static_cast<Index>(s % 4);
    SpdSet pts;
    for (Index i = 0; i < m; ++i) pts.push_back(random_spd(2, rng));
    const Matrix d2 = squared_distance_matrix(SpdMetric::log_euclidean(), pts);
    const Matrix k = gaussian_from_sq_distances(d2, synth::median_heuristic_gamma(d2));
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < (1 << (m - 1)); ++mask) {
      std::vector<int> labels(static_cast<std::size_t>(m));
      for (Index i = 0; i < m; ++i) labels[static_cast<std::size_t>(i)] = (mask >> i) & 1;
      best = std::min(best, partition_energy(k, labels));
    }
    const double got = learn::kernel_kmeans(k, {2, 20, 100, s}).energy;
    if (std::abs(got - best) <= 1e-10 * std::max(1.0, best)) ++kmeans_ok;
    else o.require(false, "k-means instance " + std::to_string(s) + " energy " + fmt("%.6g", got) + " vs " + fmt("%.6g", best));
  }

  Rng rng(5);
  const features::FeatureStack stack = features::pedestrian_feature_maps(100.0 * random_gaussian(48, 36, rng));
  const features::IntegralCovariance integral(stack);
  double worst_cov = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Index w = std::uniform_int_distribution<Index>(3, 36)(rng), h = std::uniform_int_distribution<Index>(3, 48)(rng);
    if (w * h < 9) {
      --t;
      continue;
    }
    const features::Rect r{std::uniform_int_distribution<Index>(0, 36 - w)(rng), std::uniform_int_distribution<Index>(0, 48 - h)(rng), w, h};
    Matrix samples(r.area(), stack.channels());
    Index row = 0;
    for (Index y = r.y0; y < r.y0 + r.h; ++y)
      for (Index x = r.x0; x < r.x0 + r.w; ++x, ++row)
        for (Index c = 0; c < stack.channels(); ++c) samples(row, c) = stack.planes[static_cast<std::size_t>(c)](y, x);
    const Matrix centered = samples.rowwise() - samples.colwise().mean();
    const Matrix direct = centered.transpose() * centered / static_cast<double>(r.area() - 1);
    worst_cov = std::max(worst_cov, (integral.covariance(r) - direct).norm() / direct.norm());
  }
  o.require(worst_cov <= 1e-8, "integral covariance relative error " + fmt("%.3g", worst_cov));

  Matrix x = random_gaussian(30, 5, rng) * (Vector(5) << 5, 3, 2, 1, 0.5).finished().asDiagonal();
  x.rowwise() -= x.colwise().mean();
  const Matrix z = learn::kernel_pca(x * x.transpose(), 3).embedding.coords;
  Eigen::SelfAdjointEigenSolver<Matrix> cov(x.transpose() * x);
  const Matrix scores = x * cov.eigenvectors().rowwise().reverse().leftCols(3);
  double worst_pca = 0.0;
  for (Index c = 0; c < 3; ++c)
    worst_pca = std::max(worst_pca, std::min((z.col(c) - scores.col(c)).norm(), (z.col(c) + scores.col(c)).norm()));
  o.require(worst_pca <= 1e-8, "kPCA vs PCA " + fmt("%.3g", worst_pca));
  if (o.pass)
    o.detail = "k-means " + std::to_string(kmeans_ok) + "/24 optimal, covariance " + fmt("%.3g", worst_cov) +
               ", kPCA " + fmt("%.3g", worst_pca);
  return o;
}

// ------------------------------------------------------------------ AC6

Outcome ac6_svm() {
  Outcome o;
  const learn::SvmModel two = learn::svm_train(Matrix::Identity(2, 2), {1, -1});
  o.require(two.alphas(0) == 1.0 && two.alphas(1) == 1.0 && two.bias == 0.0, "two-point dual not exact");
  double worst_kkt = 0.0, worst_gap_ratio = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(600 + s);
    const int m = 30 + 3 * static_cast<int>(s);  // 30..57
    VectorSet pts;
    std::vector<int> y;
    for (int i = 0; i < m; ++i) {
      const int label = i % 2 ? 1 : -1;
      Vector v = random_gaussian(3, 1, rng).col(0);
      v(0) += 0.8 * label;
      pts.push_back(v);
      y.push_back(label);
    }
    const Matrix k = gram_matrix(KernelSpec(EuclideanMetric{}, 0.5), pts).entries;
    learn::SvmOptions opts;
    opts.C = 1.0;
    opts.kkt_tol = 1e-10;
    const learn::SvmModel model = learn::svm_train(k, y, opts);
    const double kkt = learn::svm_kkt_residual(model, k, y);
    const double gap = learn::svm_primal_objective(model, k, y) - model.dual_objective;
    worst_kkt = std::max(worst_kkt, kkt);
    worst_gap_ratio = std::max(worst_gap_ratio, std::abs(gap) / m);
    o.require(kkt <= 1e-3, "seed " + std::to_string(s) + " KKT " + fmt("%.3g", kkt));
    o.require(gap >= -1e-9 && gap <= 1e-6 * m, "seed " + std::to_string(s) + " gap " + fmt("%.3g", gap));
  }
  if (o.pass) o.detail = "max KKT " + fmt("%.3g", worst_kkt) + ", max gap/m " + fmt("%.3g", worst_gap_ratio);
  return o;
}

// ------------------------------------------------------------------ AC7

Outcome ac7_clustering_order() {
  Outcome o;
  const auto t0 = Clock::now();
  std::string summary;
  for (int clusters : {3, 4, 5}) {
    double le = 0.0, kkm_e = 0.0, km_e = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      synth::BlobOptions blob;
      blob.clusters = clusters;
      blob.per_cluster = 40;
      blob.seed = 700 + s;
      const synth::LabeledPoints data = synth::spd_blobs(blob);
      const auto& pts = std::get<SpdSet>(data.points);
      VectorSet flat;
      for (const auto& p : pts) flat.push_back(Eigen::Map<const Vector>(p.matrix().data(), p.matrix().size()));
      Matrix f(static_cast<Index>(flat.size()), flat.front().size());
      for (std::size_t i = 0; i < flat.size(); ++i) f.row(static_cast<Index>(i)) = flat[i];

      const Matrix d2_le = squared_distance_matrix(SpdMetric::log_euclidean(), data.points);
      const Matrix d2_e = squared_distance_matrix(EuclideanMetric{}, PointSet(flat));
      const learn::KMeansOptions km{clusters, 20, 100, s};
      auto accuracy = [&](const Matrix& k) {
        return synth::clustering_accuracy(data.labels, learn::kernel_kmeans(k, km).labels, clusters);
      };
      le += accuracy(gaussian_from_sq_distances(d2_le, synth::median_heuristic_gamma(d2_le))) / 10.0;
      kkm_e += accuracy(gaussian_from_sq_distances(d2_e, synth::median_heuristic_gamma(d2_e))) / 10.0;
      km_e += accuracy(f * f.transpose()) / 10.0;
    }
    const std::string row = std::to_string(clusters) + " clusters: KKM-LE " + fmt("%.3f", le) + " KKM-E " +
                            fmt("%.3f", kkm_e) + " KM-E " + fmt("%.3f", km_e);
    o.require(le - kkm_e >= 0.05 && le - km_e >= 0.05, row);
    summary += (summary.empty() ? "" : "; ") + row;
  }
  const double t = seconds_since(t0);
  o.require(t <= 60.0, "runtime " + fmt("%.1f s", t));
  if (o.pass) o.detail = summary + "; " + fmt("%.1f s", t);
  return o;
}

// ------------------------------------------------------------------ AC8

Outcome ac8_mkl() {
  Outcome o;
  double worst_single = 0.0, worst_noise = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(800 + s);
    VectorSet informative, noise;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      const int label = i % 2 ? 1 : -1;
      Vector v = random_gaussian(2, 1, rng).col(0);
      v(0) += 2.0 * label;
      informative.push_back(v);
      noise.push_back(random_gaussian(2, 1, rng).col(0));
      y.push_back(label);
    }
    const KernelSpec spec(EuclideanMetric{}, 0.5);
    const Matrix k_info = gram_matrix(spec, informative).entries, k_noise = gram_matrix(spec, noise).entries;

    const std::vector<Matrix> single = {k_info};
    const learn::MklModel mkl1 = learn::mkl_train(single, y);
    learn::SvmOptions opts;
    opts.kkt_tol = learn::MklOptions{}.svm_kkt_tol;
    const double plain = learn::svm_train(k_info, y, opts).dual_objective;
    worst_single = std::max(worst_single, std::abs(mkl1.svm.dual_objective - plain));

    const std::vector<Matrix> pair = {k_info, k_noise};
    worst_noise = std::max(worst_noise, learn::mkl_train(pair, y).weights(1));
  }
  o.require(worst_single <= 1e-6, "single-kernel objective gap " + fmt("%.3g", worst_single));
  o.require(worst_noise <= 0.1, "noise weight " + fmt("%.3g", worst_noise));
  if (o.pass) o.detail = "single-kernel gap " + fmt("%.3g", worst_single) + ", max noise weight " + fmt("%.3g", worst_noise);
  return o;
}

// ------------------------------------------------------------------ AC9

Outcome ac9_reproducible() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "manikernel_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto file = [&](const std::string& name) { return (dir / name).string(); };
  auto run = [&](std::vector<std::string> args, const std::string& out) {
    args.insert(args.end(), {"--out", out});
    std::ostringstream so, se;
    const int code = cli::run(args, so, se);
    o.require(code == 0, args[0] + " exited " + std::to_string(code) + ": " + se.str());
  };
  run({"synth", "--kind", "spd-blobs", "--clusters", "2", "--per-cluster", "15", "--seed", "9"}, file("blobs.json"));
  run({"synth", "--kind", "spd-blobs", "--clusters", "2", "--per-cluster", "15", "--sign-labels", "--seed", "9"},
      file("signed.json"));
  const std::vector<std::vector<std::string>> runs = {
      {"definiteness", "--manifold", "spd", "--metric", "log-euclidean", "--dim", "3", "--m", "40", "--trials", "50",
       "--seed", "7"},
      {"definiteness", "--manifold", "grassmann", "--metric", "arc-length", "--dim", "5", "--rank", "2", "--trials",
       "200", "--seed", "7"},
      {"gram", "--data", file("blobs.json"), "--gamma", "median", "--audit", "--seed", "1"},
      {"cluster", "--data", file("blobs.json"), "--k", "2", "--seed", "3"},
      {"kpca", "--data", file("blobs.json"), "--l", "2", "--seed", "1"},
      {"kfda", "--data", file("blobs.json"), "--dims", "1", "--seed", "1"},
      {"svm-train", "--data", file("signed.json"), "--cv", "3", "--seed", "4"},
      {"mkl-train", "--data", file("signed.json"), "--kernel", "log-euclidean:0.5", "--kernel", "cholesky:0.5",
       "--seed", "4"},
      {"synth", "--kind", "grassmann-clusters", "--seed", "5"},
  };
  int identical = 0;
  for (const auto& args : runs) {
    run(args, file("first.out"));
    run(args, file("second.out"));
    const bool same = io::read_text(file("first.out")) == io::read_text(file("second.out"));
    identical += same;
    o.require(same, args[0] + " output differs between runs");
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = std::to_string(identical) + "/" + std::to_string(runs.size()) + " runs byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 definiteness matrix", ac1_definiteness_matrix},
      {"AC2 CND/PSD consistency", ac2_cnd_psd_consistency},
      {"AC3 fast projection identity", ac3_fast_projection},
      {"AC4 Karcher consistency", ac4_karcher},
      {"AC5 oracle equivalences", ac5_oracles},
      {"AC6 SVM correctness", ac6_svm},
      {"AC7 clustering ordering", ac7_clustering_order},
      {"AC8 MKL sanity", ac8_mkl},
      {"AC9 CLI reproducibility", ac9_reproducible},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " | " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
