#pragma once

#include <Eigen/Dense>

#include "spatial_smooth/error.hpp"

namespace spatial_smooth {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-10;

/// Eigenvalues in descending order; eigenvector columns are orthonormal and
/// sign-normalised so that the first entry with magnitude above 1e-12 is positive.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
};

/// Throws InvalidMatrix unless `m` is square, finite and symmetric within `tol`
/// (relative to the largest magnitude entry).
void check_symmetric(const Matrix& m, double tol = 1e-12);

EigenDecomposition sym_eigen(const Matrix& m);

/// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues below
/// rank_tol * max eigenvalue are treated as exact zeros.
Matrix pseudo_inverse(const Matrix& m, double rank_tol = kDefaultRankTol);

Vector cholesky_solve(const Matrix& a, const Vector& b);

/// Classical-MDS inner product matrix B = -1/2 J D^2 J for a dissimilarity matrix D.
Matrix double_center(const Matrix& d);

/// Clamps negative eigenvalues of a symmetric matrix to zero. Eigenvalues below
/// -neg_tol * max|eigenvalue| make this throw `on_failure`.
Matrix project_psd(const Matrix& m, double neg_tol, ErrorCode on_failure);

}  // namespace spatial_smooth
