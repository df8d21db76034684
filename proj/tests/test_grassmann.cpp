#include "test_util.hpp"

#include <numbers>

using namespace mk_test;

namespace {

constexpr double kPi = std::numbers::pi;

const GrassmannMetric kAll[] = {GrassmannMetric::Projection, GrassmannMetric::ArcLength, GrassmannMetric::FubiniStudy,
                                GrassmannMetric::Chordal2Norm, GrassmannMetric::ChordalFNorm};

GrassmannPoint line(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return make_grassmann(m);
}

Matrix projector(const GrassmannPoint& p) { return p.basis() * p.basis().transpose(); }

}  // namespace

TEST(MakeGrassmann, OrthonormalInputUnchangedUpToTolerance) {
  Rng rng(1);
  const GrassmannPoint p = random_grassmann(6, 2, rng);
  const GrassmannPoint q = make_grassmann(p.basis());
  EXPECT_LT((projector(q) - projector(p)).norm(), 1e-12);
  EXPECT_LT((q.basis().cwiseAbs() - p.basis().cwiseAbs()).norm(), 1e-12);
}

TEST(MakeGrassmann, NormalizesSingleColumn) {
  const GrassmannPoint p = line({2, 0, 0});
  EXPECT_LT((p.basis() - Matrix(Vector::Unit(3, 0))).norm(), 1e-15);
}

TEST(MakeGrassmann, ProjectorOracle) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix raw = random_gaussian(6, 2, rng);
    const Matrix oracle = raw * (raw.transpose() * raw).inverse() * raw.transpose();
    EXPECT_LT((projector(make_grassmann(raw)) - oracle).norm(), 1e-10);
  }
}

TEST(MakeGrassmann, PositiveDiagonalConvention) {
  Rng rng(3);
  const Matrix raw = random_gaussian(5, 3, rng);
  const Matrix r = make_grassmann(raw).basis().transpose() * raw;  // the triangular factor
  for (Index i = 0; i < 3; ++i) EXPECT_GE(r(i, i), 0.0);
  EXPECT_LT(r.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm(), 1e-12);
}

TEST(MakeGrassmann, Errors) {
  Matrix deficient(4, 2);
  deficient.col(0) << 1, 2, 3, 4;
  deficient.col(1) = 2.0 * deficient.col(0);
  EXPECT_EQ(error_code_of([&] { make_grassmann(deficient); }), ErrorCode::RankDeficient);
  EXPECT_EQ(error_code_of([] { make_grassmann(Matrix::Identity(3, 3)); }), ErrorCode::BadShape);
  EXPECT_EQ(error_code_of([] { GrassmannPoint(Matrix::Ones(3, 1)); }), ErrorCode::NotOrthonormal);
}

TEST(PrincipalAngles, IdenticalSubspaces) {
  Rng rng(4);
  const GrassmannPoint p = random_grassmann(7, 3, rng);
  EXPECT_LT(principal_angles(p, p).norm(), 1e-12);
}

TEST(PrincipalAngles, OrthogonalLines) {
  EXPECT_NEAR(principal_angles(line({1, 0}), line({0, 1}))(0), kPi / 2, 1e-15);
}

TEST(PrincipalAngles, FortyFiveDegrees) {
  EXPECT_NEAR(principal_angles(line({1, 0}), line({1, 1}))(0), kPi / 4, 1e-15);
}

TEST(PrincipalAngles, RangeOrderAndBasisInvariance) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const GrassmannPoint a = random_grassmann(8, 3, rng), b = random_grassmann(8, 3, rng);
    const Vector th = principal_angles(a, b);
    for (Index i = 0; i < 3; ++i) {
      EXPECT_GE(th(i), 0.0);
      EXPECT_LE(th(i), kPi / 2);
      if (i) EXPECT_LE(th(i - 1), th(i));
    }
    const GrassmannPoint b2(b.basis() * random_orthogonal(3, rng));
    EXPECT_LT((principal_angles(a, b2) - th).norm(), 1e-9);
  }
}

TEST(PrincipalAngles, SmallAnglesAccurate) {
  // arccos alone would lose about half the digits here.
  const double eps = 1e-9;
  const GrassmannPoint a = line({1, 0, 0});
  const GrassmannPoint b = line({std::cos(eps), std::sin(eps), 0});
  EXPECT_NEAR(principal_angles(a, b)(0), eps, 1e-15);
}

TEST(PrincipalAngles, DimMismatch) {
  Rng rng(6);
  const GrassmannPoint a = random_grassmann(5, 2, rng), b = random_grassmann(6, 2, rng);
  const GrassmannPoint c = random_grassmann(5, 3, rng);
  EXPECT_EQ(error_code_of([&] { principal_angles(a, b); }), ErrorCode::DimMismatch);
  EXPECT_EQ(error_code_of([&] { principal_angles(a, c); }), ErrorCode::DimMismatch);
}

TEST(GrassmannDistance, SelfDistanceZero) {
  Rng rng(7);
  const GrassmannPoint p = random_grassmann(6, 2, rng);
  for (auto m : kAll) EXPECT_NEAR(grassmann_distance(m, p, p), 0.0, 1e-12) << metric_name(m);
}

TEST(GrassmannDistance, OrthogonalLines) {
  const GrassmannPoint a = line({1, 0}), b = line({0, 1});
  EXPECT_NEAR(grassmann_distance(GrassmannMetric::Projection, a, b), 1.0, 1e-15);
  EXPECT_NEAR(grassmann_distance(GrassmannMetric::ArcLength, a, b), kPi / 2, 1e-15);
  EXPECT_NEAR(grassmann_distance(GrassmannMetric::FubiniStudy, a, b), kPi / 2, 1e-15);
  EXPECT_NEAR(grassmann_distance(GrassmannMetric::Chordal2Norm, a, b), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(grassmann_distance(GrassmannMetric::ChordalFNorm, a, b), std::sqrt(2.0), 1e-15);
}

TEST(GrassmannDistance, ProjectionMatchesProjectorForm) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const GrassmannPoint a = random_grassmann(6, 2, rng), b = random_grassmann(6, 2, rng);
    const double frob = (projector(a) - projector(b)).norm() / std::sqrt(2.0);
    EXPECT_NEAR(grassmann_distance(GrassmannMetric::Projection, a, b), frob, 1e-9);
  }
}

TEST(GrassmannDistance, FubiniStudyMatchesDeterminant) {
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    const GrassmannPoint a = random_grassmann(6, 2, rng), b = random_grassmann(6, 2, rng);
    const double det = std::abs((a.basis().transpose() * b.basis()).determinant());
    EXPECT_NEAR(grassmann_distance(GrassmannMetric::FubiniStudy, a, b), std::acos(det), 1e-9);
  }
}

// Procrustes forms ||Y1 U - Y2 V|| with U, V from the SVD of Y1^T Y2.
TEST(GrassmannDistance, ChordalMatchesProcrustesForm) {
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    const GrassmannPoint a = random_grassmann(7, 3, rng), b = random_grassmann(7, 3, rng);
    Eigen::JacobiSVD<Matrix> svd(a.basis().transpose() * b.basis(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix diff = a.basis() * svd.matrixU() - b.basis() * svd.matrixV();
    EXPECT_NEAR(grassmann_distance(GrassmannMetric::ChordalFNorm, a, b), diff.norm(), 1e-9);
    EXPECT_NEAR(grassmann_distance(GrassmannMetric::Chordal2Norm, a, b), diff.jacobiSvd().singularValues()(0), 1e-9);
  }
}

TEST(GrassmannDistance, BasisInvariance) {
  Rng rng(11);
  for (int t = 0; t < 30; ++t) {
    const GrassmannPoint a = random_grassmann(6, 3, rng), b = random_grassmann(6, 3, rng);
    const GrassmannPoint bq(b.basis() * random_orthogonal(3, rng));
    for (auto m : kAll) EXPECT_NEAR(grassmann_distance(m, a, bq), grassmann_distance(m, a, b), 1e-9);
  }
}

TEST(GrassmannDistance, MetricAxioms) {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const GrassmannPoint x = random_grassmann(6, 2, rng), y = random_grassmann(6, 2, rng), z = random_grassmann(6, 2, rng);
    for (auto m : kAll) {
      const double dxy = grassmann_distance(m, x, y);
      EXPECT_GE(dxy, 0.0);
      EXPECT_NEAR(dxy, grassmann_distance(m, y, x), 1e-9);
      EXPECT_NEAR(grassmann_distance(m, x, x), 0.0, 1e-9);
      if (m == GrassmannMetric::Projection || m == GrassmannMetric::ArcLength)
        EXPECT_LE(dxy, grassmann_distance(m, x, z) + grassmann_distance(m, z, y) + 1e-9);
    }
  }
}

TEST(ProjectionFast, Trivial) {
  Rng rng(13);
  const GrassmannPoint p = random_grassmann(5, 2, rng);
  EXPECT_NEAR(projection_dist_sq_fast(p, p), 0.0, 1e-14);
  EXPECT_NEAR(projection_dist_sq_fast(line({1, 0}), line({0, 1})), 1.0, 1e-15);
}

TEST(ProjectionFast, MatchesProjectorOracle) {
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const GrassmannPoint a = random_grassmann(20, 3, rng), b = random_grassmann(20, 3, rng);
    const double oracle = 0.5 * (projector(a) - projector(b)).squaredNorm();
    EXPECT_NEAR(projection_dist_sq_fast(a, b), oracle, 1e-9);
    const double d = grassmann_distance(GrassmannMetric::Projection, a, b);
    EXPECT_NEAR(projection_dist_sq_fast(a, b), d * d, 1e-9);
    EXPECT_NEAR(projection_dist_sq_fast(a, b), principal_angles(a, b).array().sin().square().sum(), 1e-9);
  }
}

TEST(SubspaceFromVectors, OrthogonalColumnsPickLargest) {
  Matrix f = Matrix::Zero(4, 3);
  f(0, 0) = 1.0;
  f(1, 1) = -5.0;
  f(2, 2) = 2.0;
  const GrassmannPoint p = subspace_from_vectors(f, 1);
  EXPECT_LT((p.basis() - Matrix(Vector::Unit(4, 1))).norm(), 1e-14);
}

TEST(SubspaceFromVectors, RepeatedColumn) {
  Matrix f = Matrix::Zero(3, 3);
  f(0, 0) = f(0, 1) = 1.0;
  f(1, 2) = 1.0;
  const GrassmannPoint p = subspace_from_vectors(f, 2);
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = expect(1, 1) = 1.0;
  EXPECT_LT((projector(p) - expect).norm(), 1e-12);
}

TEST(SubspaceFromVectors, BeatsRandomCompetitors) {
  Rng rng(15);
  const Matrix f = random_gaussian(10, 6, rng);
  const GrassmannPoint best = subspace_from_vectors(f, 3);
  const double residual = (f - projector(best) * f).norm();
  for (int t = 0; t < 20; ++t) {
    const GrassmannPoint other = random_grassmann(10, 3, rng);
    EXPECT_LE(residual, (f - projector(other) * f).norm());
  }
}

TEST(SubspaceFromVectors, Errors) {
  EXPECT_EQ(error_code_of([] { subspace_from_vectors(Matrix::Ones(4, 3), 3); }), ErrorCode::BadShape);
  EXPECT_EQ(error_code_of([] { subspace_from_vectors(Matrix::Ones(4, 3), 2); }), ErrorCode::RankDeficient);
}

TEST(GrassmannMetricNames, RoundTrip) {
  for (auto m : kAll) EXPECT_EQ(parse_grassmann_metric(metric_name(m)), m);
  EXPECT_FALSE(parse_grassmann_metric("geodesic").has_value());
}
