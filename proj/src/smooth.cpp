#include "spatial_smooth/smooth.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "spatial_smooth/error.hpp"
#include "spatial_smooth/rng.hpp"

namespace spatial_smooth {
namespace {

double distance(const Points& a, Eigen::Index i, const Points& b, Eigen::Index j) {
  return std::hypot(a(i, 0) - b(j, 0), a(i, 1) - b(j, 1));
}

Matrix radial_kernels(const Points& locations, const Points& knots) {
  Matrix out(locations.rows(), knots.rows());
  for (Eigen::Index j = 0; j < knots.rows(); ++j) {
    for (Eigen::Index i = 0; i < locations.rows(); ++i) out(i, j) = tps_radial(distance(locations, i, knots, j));
  }
  return out;
}

}  // namespace

double tps_radial(double r) {
  if (r <= 0.0) return 0.0;
  return r * r * std::log(r);
}

Points select_knots(const ConnectivityCoords& coords, std::size_t k, std::uint64_t seed) {
  const auto& pts = coords.points;
  if (!pts.allFinite()) throw Error(ErrorCode::InvalidArgument, "coordinates must be finite");
  if (k < 4) throw Error(ErrorCode::InvalidArgument, "need at least 4 knots, got " + std::to_string(k));

  std::vector<Eigen::Index> distinct;
  std::set<std::pair<double, double>> seen;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (seen.emplace(pts(i, 0), pts(i, 1)).second) distinct.push_back(i);
  }
  if (k > distinct.size()) {
    throw Error(ErrorCode::TooManyKnots, std::to_string(k) + " knots requested but only " +
                                             std::to_string(distinct.size()) + " distinct locations");
  }

  auto rng = make_rng(seed);
  boost::random::uniform_int_distribution<std::size_t> pick(0, distinct.size() - 1);
  std::vector<double> min_dist(distinct.size(), std::numeric_limits<double>::infinity());
  std::vector<bool> taken(distinct.size(), false);
  Points knots(static_cast<Eigen::Index>(k), 2);

  std::size_t current = pick(rng);
  for (std::size_t m = 0; m < k; ++m) {
    taken[current] = true;
    knots.row(static_cast<Eigen::Index>(m)) = pts.row(distinct[current]);
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t c = 0; c < distinct.size(); ++c) {
      if (taken[c]) continue;
      min_dist[c] = std::min(min_dist[c], distance(pts, distinct[c], pts, distinct[current]));
      if (min_dist[c] > best_dist) {
        best_dist = min_dist[c];
        best = c;
      }
    }
    current = best;
  }
  return knots;
}

SmoothBasis build_tps_basis(const ConnectivityCoords& coords, const Points& knots, const std::string& label) {
  const auto& pts = coords.points;
  const Eigen::Index k = knots.rows();
  if (k < 4) throw Error(ErrorCode::InvalidArgument, "need at least 4 knots, got " + std::to_string(k));
  if (!pts.allFinite() || !knots.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite coordinates");
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      if (distance(knots, a, knots, b) <= 1e-12) {
        throw Error(ErrorCode::DuplicateKnots, "knots " + std::to_string(a) + " and " + std::to_string(b) + " coincide");
      }
    }
  }

  // Radial coefficients are restricted to the orthogonal complement of the
  // knot polynomials {1, x, z}; on that subspace the kernel matrix is PSD.
  Matrix poly(k, 3);
  poly.col(0).setOnes();
  poly.col(1) = knots.col(0);
  poly.col(2) = knots.col(1);
  Eigen::ColPivHouseholderQR<Matrix> rank_check(poly);
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() < 3) throw Error(ErrorCode::DegenerateKnots, "knots are collinear");
  Eigen::HouseholderQR<Matrix> qr(poly);
  const Matrix q = qr.householderQ() * Matrix::Identity(k, k);
  const Matrix constraint = q.rightCols(k - 3);

  const Matrix kernel = radial_kernels(knots, knots);
  Matrix radial_penalty = constraint.transpose() * kernel * constraint;
  radial_penalty = 0.5 * (radial_penalty + radial_penalty.transpose());
  radial_penalty = project_psd(radial_penalty, 1e-8, ErrorCode::PenaltyNotPSD);

  const Eigen::Index n = pts.rows();
  const Eigen::Index m = k - 3;
  const Eigen::Index dim = m + 2;
  Matrix design(n, dim);
  design.leftCols(m) = radial_kernels(pts, knots) * constraint;
  design.col(m) = pts.col(0);
  design.col(m + 1) = pts.col(1);
  const Vector means = design.colwise().mean().transpose();
  design.rowwise() -= means.transpose();

  // Penalty rescaled so its 1-norm matches ||X||_inf^2; this keeps the
  // smoothing-precision hyperprior comparable across coordinate systems.
  const double design_norm = design.cwiseAbs().rowwise().sum().maxCoeff();
  const double penalty_norm = radial_penalty.cwiseAbs().colwise().sum().maxCoeff();
  const double scale = penalty_norm > 0 ? design_norm * design_norm / penalty_norm : 1.0;

  SmoothBasis basis;
  basis.label = label;
  basis.design = std::move(design);
  basis.penalty = Matrix::Zero(dim, dim);
  basis.penalty.topLeftCorner(m, m) = scale * radial_penalty;
  basis.null_penalty = Matrix::Zero(dim, dim);
  basis.null_penalty.bottomRightCorner(2, 2).setIdentity();
  basis.knots = knots;
  basis.null_dim = 2;
  basis.radial_constraint = constraint;
  basis.column_means = means;
  basis.penalty_scale = scale;
  return basis;
}

SmoothBasis make_smooth(const ConnectivityCoords& coords, std::size_t k, std::uint64_t seed) {
  return build_tps_basis(coords, select_knots(coords, k, seed), coords.label);
}

Vector evaluate_smooth(const SmoothBasis& basis, const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != basis.dim()) {
    throw Error(ErrorCode::DimensionError, "beta has length " + std::to_string(beta.size()) + ", basis has " +
                                               std::to_string(basis.dim()) + " columns");
  }
  return basis.design * beta;
}

Matrix basis_at(const SmoothBasis& basis, const Points& locations) {
  const auto m = static_cast<Eigen::Index>(basis.radial_dim());
  Matrix out(locations.rows(), static_cast<Eigen::Index>(basis.dim()));
  out.leftCols(m) = radial_kernels(locations, basis.knots) * basis.radial_constraint;
  out.col(m) = locations.col(0);
  out.col(m + 1) = locations.col(1);
  out.rowwise() -= basis.column_means.transpose();
  return out;
}

}  // namespace spatial_smooth
