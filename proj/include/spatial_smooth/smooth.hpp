#pragma once

#include <cstdint>
#include <string>

#include "spatial_smooth/coords.hpp"
#include "spatial_smooth/numerics.hpp"

namespace spatial_smooth {

inline constexpr std::size_t kDefaultKnots = 30;

/// Thin-plate spline radial function r^2 log r, continuous at 0.
double tps_radial(double r);

/// Knot-based thin-plate spline over a 2-D coordinate system.
///
/// Columns of `design` are, in order, the k - 3 constrained radial functions
/// (radial kernels combined so that their coefficients are orthogonal to the
/// knot polynomials 1, x, z) followed by the two linear functions x and z.
/// Every column is centred over the data, so the constant is carried by the
/// model intercept. The wiggliness penalty lives on the radial block and the
/// null-space ridge on the linear block.
struct SmoothBasis {
  std::string label;
  Matrix design;            // n x K
  Matrix penalty;           // P1, K x K, PSD
  Matrix null_penalty;      // P0, K x K, identity on the linear block
  Points knots;
  std::size_t null_dim = 2;
  /// Radial kernels -> design map (k x (k-3)) and the column means removed,
  /// kept so the smooth can be evaluated at new locations.
  Matrix radial_constraint;
  Vector column_means;
  double penalty_scale = 1.0;

  std::size_t rows() const { return static_cast<std::size_t>(design.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(design.cols()); }
  std::size_t radial_dim() const { return dim() - null_dim; }
};

/// Farthest-point traversal over distinct data locations, starting from a
/// seeded random location.
Points select_knots(const ConnectivityCoords& coords, std::size_t k, std::uint64_t seed);

SmoothBasis build_tps_basis(const ConnectivityCoords& coords, const Points& knots, const std::string& label);

/// Convenience: select_knots followed by build_tps_basis, labelled by the coords.
SmoothBasis make_smooth(const ConnectivityCoords& coords, std::size_t k, std::uint64_t seed);

Vector evaluate_smooth(const SmoothBasis& basis, const Vector& beta);

/// Design rows for arbitrary locations, centred with the training means.
Matrix basis_at(const SmoothBasis& basis, const Points& locations);

}  // namespace spatial_smooth
