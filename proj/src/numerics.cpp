#include "spatial_smooth/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace spatial_smooth {

void check_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::InvalidMatrix, "expected a non-empty square matrix, got " +
                                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw Error(ErrorCode::InvalidMatrix, "matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * scale) {
    throw Error(ErrorCode::InvalidMatrix, "matrix is not symmetric (max |m - m^T| = " + std::to_string(asym) + ")");
  }
}

EigenDecomposition sym_eigen(const Matrix& m) {
  check_symmetric(m);
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidMatrix, "eigensolver did not converge");

  const Eigen::Index n = sym.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const Vector& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return ev(a) > ev(b); });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = ev(src);
    Vector col = solver.eigenvectors().col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
    out.vectors.col(k) = col;
  }
  return out;
}

Matrix pseudo_inverse(const Matrix& m, double rank_tol) {
  const auto eig = sym_eigen(m);
  const double norm = eig.values.cwiseAbs().maxCoeff();
  const double min_ev = eig.values.minCoeff();
  if (min_ev < -1e-10 * std::max(norm, 1e-300)) {
    throw Error(ErrorCode::NotPSD, "negative eigenvalue " + std::to_string(min_ev));
  }
  const double cutoff = rank_tol * std::max(eig.values.maxCoeff(), 0.0);
  Vector inv = Vector::Zero(eig.values.size());
  for (Eigen::Index k = 0; k < inv.size(); ++k) {
    if (eig.values(k) > cutoff && eig.values(k) > 0) inv(k) = 1.0 / eig.values(k);
  }
  Matrix out = eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

Vector cholesky_solve(const Matrix& a, const Vector& b) {
  check_symmetric(a, 1e-10);
  if (b.size() != a.rows()) {
    throw Error(ErrorCode::DimensionError, "rhs has length " + std::to_string(b.size()) + ", matrix order " +
                                               std::to_string(a.rows()));
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "Cholesky pivot is not positive");
  return llt.solve(b);
}

Matrix double_center(const Matrix& d) {
  if (d.rows() != d.cols() || d.rows() == 0) throw Error(ErrorCode::InvalidDissimilarity, "expected a square matrix");
  if (!d.allFinite()) throw Error(ErrorCode::InvalidDissimilarity, "non-finite dissimilarity");
  if (d.minCoeff() < 0) throw Error(ErrorCode::InvalidDissimilarity, "negative dissimilarity");
  if (d.diagonal().cwiseAbs().maxCoeff() > 1e-12) throw Error(ErrorCode::InvalidDissimilarity, "nonzero diagonal");
  check_symmetric(d);

  const Matrix sq = d.cwiseProduct(d);
  const Vector row_mean = sq.rowwise().mean();
  const Vector col_mean = sq.colwise().mean().transpose();
  const double grand = sq.mean();
  Matrix b(d.rows(), d.cols());
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      b(i, j) = -0.5 * (sq(i, j) - row_mean(i) - col_mean(j) + grand);
    }
  }
  return 0.5 * (b + b.transpose());
}

Matrix project_psd(const Matrix& m, double neg_tol, ErrorCode on_failure) {
  const auto eig = sym_eigen(m);
  const double norm = eig.values.cwiseAbs().maxCoeff();
  const double min_ev = eig.values.minCoeff();
  if (min_ev < -neg_tol * norm) {
    throw Error(on_failure, "eigenvalue " + std::to_string(min_ev) + " is below -" + std::to_string(neg_tol) +
                                " * " + std::to_string(norm));
  }
  const Vector clamped = eig.values.cwiseMax(0.0);
  Matrix out = eig.vectors * clamped.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace spatial_smooth
