#include <gtest/gtest.h>

#include "spatial_smooth/error.hpp"
#include "spatial_smooth/numerics.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using testing_support::code_of;

using namespace spatial_smooth;

namespace {

Matrix path3_laplacian() {
  Matrix q(3, 3);
  q << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  return q;
}

}  // namespace

TEST(SymEigen, IdentityHasUnitSpectrum) {
  const auto e = sym_eigen(Matrix::Identity(3, 3));
  EXPECT_TRUE(e.values.isApprox(Vector::Ones(3)));
}

TEST(SymEigen, DiagonalIsAxisAligned) {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << 1, 4;
  const auto e = sym_eigen(m);
  EXPECT_DOUBLE_EQ(e.values(0), 4.0);
  EXPECT_DOUBLE_EQ(e.values(1), 1.0);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1.0, 1e-14);
}

TEST(SymEigen, TwoByTwoMatchesJacobi) {
  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  const auto e = sym_eigen(m);
  const auto ref = oracle::jacobi_eigen(m);
  EXPECT_NEAR(e.values(0), 3.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
  EXPECT_NEAR((e.values - ref.values).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(SymEigen, SignConventionFirstEntryPositive) {
  std::mt19937_64 rng(3);
  const auto e = sym_eigen(oracle::random_symmetric(rng, 6));
  for (Eigen::Index k = 0; k < 6; ++k) {
    for (Eigen::Index i = 0; i < 6; ++i) {
      if (std::abs(e.vectors(i, k)) > 1e-12) {
        EXPECT_GT(e.vectors(i, k), 0.0);
        break;
      }
    }
  }
}

TEST(SymEigen, RejectsAsymmetricAndNonFinite) {
  Matrix m(2, 2);
  m << 1, 2, 2.1, 1;
  EXPECT_EQ(code_of([&] { sym_eigen(m); }), ErrorCode::InvalidMatrix);
  m << 1, NAN, NAN, 1;
  EXPECT_EQ(code_of([&] { sym_eigen(m); }), ErrorCode::InvalidMatrix);
}

TEST(PseudoInverse, IdentityAndZero) {
  EXPECT_TRUE(pseudo_inverse(Matrix::Identity(4, 4)).isApprox(Matrix::Identity(4, 4)));
  EXPECT_EQ(pseudo_inverse(Matrix::Zero(3, 3)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PseudoInverse, PathLaplacianDiagonal) {
  const Matrix p = pseudo_inverse(path3_laplacian());
  EXPECT_NEAR(p(0, 0), 5.0 / 9.0, 1e-12);
  EXPECT_NEAR(p(1, 1), 2.0 / 9.0, 1e-12);
  EXPECT_NEAR(p(2, 2), 5.0 / 9.0, 1e-12);
  EXPECT_LT((p - oracle::pinv(path3_laplacian())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PseudoInverse, RejectsIndefinite) {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  EXPECT_EQ(code_of([&] { pseudo_inverse(m); }), ErrorCode::NotPSD);
}

TEST(CholeskySolve, SmallSystems) {
  Vector b(2);
  b << 1, 2;
  EXPECT_TRUE(cholesky_solve(Matrix::Identity(2, 2), b).isApprox(b));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2, 4;
  b << 2, 4;
  EXPECT_TRUE(cholesky_solve(d, b).isApprox(Vector::Ones(2)));
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  b << 3, 3;
  EXPECT_TRUE(cholesky_solve(a, b).isApprox(Vector::Ones(2)));
}

TEST(CholeskySolve, RejectsIndefinite) {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_EQ(code_of([&] { cholesky_solve(a, Vector::Ones(2)); }), ErrorCode::NotPositiveDefinite);
}

TEST(DoubleCenter, ClosedForms) {
  EXPECT_EQ(double_center(Matrix::Zero(1, 1))(0, 0), 0.0);
  const double d = 3.0;
  Matrix two(2, 2);
  two << 0, d, d, 0;
  Matrix expect(2, 2);
  expect << d * d / 4, -d * d / 4, -d * d / 4, d * d / 4;
  EXPECT_LT((double_center(two) - expect).cwiseAbs().maxCoeff(), 1e-14);

  Matrix tri = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
  const auto e = oracle::jacobi_eigen(double_center(tri));
  EXPECT_NEAR(e.values(0), 0.5, 1e-12);
  EXPECT_NEAR(e.values(1), 0.5, 1e-12);
  EXPECT_NEAR(e.values(2), 0.0, 1e-12);
}

TEST(DoubleCenter, MatchesEntrywiseOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  Matrix pts(12, 2);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) << u(rng), u(rng);
  const Matrix d = oracle::pairwise_distances(pts);
  EXPECT_LT((double_center(d) - oracle::double_center(d)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DoubleCenter, RejectsInvalidDissimilarity) {
  Matrix d(2, 2);
  d << 0, -1, -1, 0;
  EXPECT_EQ(code_of([&] { double_center(d); }), ErrorCode::InvalidDissimilarity);
  d << 1, 1, 1, 0;
  EXPECT_EQ(code_of([&] { double_center(d); }), ErrorCode::InvalidDissimilarity);
}
