#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spatial_smooth {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// A 2-D coordinate system with one point per area unit, in Region order.
struct ConnectivityCoords {
  std::string label;
  Points points;
  std::vector<std::string> warnings;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

/// Maps each column of `points` onto [0, 1]. A constant column throws
/// DegenerateAxis unless `allow_degenerate`, in which case it maps to 0.
Points rescale_unit_square(const Points& points, bool allow_degenerate = false);

}  // namespace spatial_smooth
