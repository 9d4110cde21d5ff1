#include "spatial_smooth/region.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>

#include "spatial_smooth/csv.hpp"
#include "spatial_smooth/error.hpp"
#include "spatial_smooth/rng.hpp"

namespace spatial_smooth {

bool is_connected(const Matrix& adjacency) {
  const auto n = static_cast<std::size_t>(adjacency.rows());
  if (n == 0) return true;
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!frontier.empty()) {
    const auto i = frontier.front();
    frontier.pop();
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
        seen[j] = true;
        ++visited;
        frontier.push(j);
      }
    }
  }
  return visited == n;
}

Region Region::create(std::vector<AreaUnit> units, Matrix adjacency, bool require_connected,
                      std::optional<LatticeShape> lattice) {
  const auto n = units.size();
  if (n == 0) throw Error(ErrorCode::RegionTooSmall, "region has no units");
  if (static_cast<std::size_t>(adjacency.rows()) != n || static_cast<std::size_t>(adjacency.cols()) != n) {
    throw Error(ErrorCode::DimensionError, "adjacency must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  std::set<std::int64_t> ids;
  for (const auto& u : units) {
    if (!ids.insert(u.id).second) throw Error(ErrorCode::DuplicateId, "duplicate unit id " + std::to_string(u.id));
    if (!std::isfinite(u.centroid_x) || !std::isfinite(u.centroid_y)) {
      throw Error(ErrorCode::InvalidArgument, "unit " + std::to_string(u.id) + " has a non-finite centroid");
    }
    if (!(u.population > 0.0) || !std::isfinite(u.population)) {
      throw Error(ErrorCode::InvalidArgument, "unit " + std::to_string(u.id) + " must have positive population");
    }
  }
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    if (adjacency(i, i) != 0.0) throw Error(ErrorCode::AdjacencyError, "adjacency has a self-loop");
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      const double w = adjacency(i, j);
      if (w != 0.0 && w != 1.0) throw Error(ErrorCode::AdjacencyError, "adjacency must be binary");
      if (w != adjacency(j, i)) throw Error(ErrorCode::AdjacencyError, "adjacency must be symmetric");
    }
  }
  const bool connected = is_connected(adjacency);
  if (require_connected && !connected) throw Error(ErrorCode::DisconnectedGraph, "adjacency graph is disconnected");

  Region region;
  region.offsets_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) region.offsets_(static_cast<Eigen::Index>(i)) = units[i].population / kOffsetPerPersons;
  region.units_ = std::move(units);
  region.adjacency_ = std::move(adjacency);
  region.lattice_ = lattice;
  region.connected_ = connected;
  return region;
}

std::vector<std::size_t> Region::neighbours(std::size_t i) const {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < adjacency_.cols(); ++j) {
    if (adjacency_(static_cast<Eigen::Index>(i), j) != 0.0) out.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

void Region::require_connected() const {
  if (!connected_) throw Error(ErrorCode::DisconnectedGraph, "adjacency graph is disconnected");
}

Region make_grid_region(std::size_t rows, std::size_t cols, double pop_min, double pop_max, std::uint64_t seed) {
  if (rows < 2 || cols < 2 || rows * cols < 4) {
    throw Error(ErrorCode::RegionTooSmall, "grid must be at least 2x2, got " + std::to_string(rows) + "x" +
                                               std::to_string(cols));
  }
  if (!(pop_min > 0.0) || !(pop_min <= pop_max) || !std::isfinite(pop_max)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < pop_min <= pop_max");
  }
  auto rng = make_rng(seed);
  const double lo = std::log(pop_min);
  const double hi = std::log(pop_max);
  const auto n = rows * cols;
  std::vector<AreaUnit> units(n);
  Matrix adjacency = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto i = r * cols + c;
      units[i].id = static_cast<std::int64_t>(i);
      units[i].centroid_x = static_cast<double>(c);
      units[i].centroid_y = static_cast<double>(r);
      units[i].population = std::exp(lo + (hi - lo) * uniform01(rng));
      const auto link = [&](std::size_t j) {
        adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
      };
      if (c + 1 < cols) link(i + 1);
      if (r + 1 < rows) link(i + cols);
    }
  }
  return Region::create(std::move(units), std::move(adjacency), true, LatticeShape{rows, cols});
}

Region load_region_csv(const std::filesystem::path& units_path, const std::filesystem::path& adjacency_path,
                       bool require_connected) {
  const auto units_table = csv::read(units_path);
  const auto c_id = units_table.column("id");
  const auto c_x = units_table.column("centroid_x");
  const auto c_y = units_table.column("centroid_y");
  const auto c_pop = units_table.column("population");

  std::vector<AreaUnit> units;
  std::unordered_map<std::int64_t, std::size_t> index;
  for (std::size_t r = 0; r < units_table.rows.size(); ++r) {
    const auto& row = units_table.rows[r];
    const std::string ctx = units_path.string() + " row " + std::to_string(r + 1);
    AreaUnit u;
    u.id = csv::parse_int(row[c_id], ctx);
    u.centroid_x = csv::parse_double(row[c_x], ctx);
    u.centroid_y = csv::parse_double(row[c_y], ctx);
    u.population = csv::parse_double(row[c_pop], ctx);
    if (!index.emplace(u.id, units.size()).second) {
      throw Error(ErrorCode::DuplicateId, ctx + ": duplicate id " + std::to_string(u.id));
    }
    units.push_back(u);
  }

  // Each row is an undirected edge. A file that lists some pair in both
  // orientations is read as a directed listing and must then be reciprocal
  // everywhere.
  const auto adj_table = csv::read(adjacency_path);
  const auto c_a = adj_table.column("id_a");
  const auto c_b = adj_table.column("id_b");
  std::set<std::pair<std::size_t, std::size_t>> directed;
  for (std::size_t r = 0; r < adj_table.rows.size(); ++r) {
    const auto& row = adj_table.rows[r];
    const std::string ctx = adjacency_path.string() + " row " + std::to_string(r + 1);
    const auto a = csv::parse_int(row[c_a], ctx);
    const auto b = csv::parse_int(row[c_b], ctx);
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) throw Error(ErrorCode::AdjacencyError, ctx + ": unknown unit id");
    if (a == b) throw Error(ErrorCode::AdjacencyError, ctx + ": self-loop on id " + std::to_string(a));
    directed.emplace(ia->second, ib->second);
  }
  bool any_reciprocal = false;
  for (const auto& [i, j] : directed) {
    if (directed.count({j, i})) {
      any_reciprocal = true;
      break;
    }
  }
  if (any_reciprocal) {
    for (const auto& [i, j] : directed) {
      if (!directed.count({j, i})) {
        throw Error(ErrorCode::AdjacencyError, "edge " + std::to_string(units[i].id) + " -> " +
                                                   std::to_string(units[j].id) + " has no reciprocal entry");
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(units.size());
  Matrix adjacency = Matrix::Zero(n, n);
  for (const auto& [i, j] : directed) {
    adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return Region::create(std::move(units), std::move(adjacency), require_connected);
}

Points rescale_unit_square(const Points& points, bool allow_degenerate) {
  Points out(points.rows(), 2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double lo = points.col(c).minCoeff();
    const double hi = points.col(c).maxCoeff();
    if (!(hi > lo)) {
      if (!allow_degenerate) throw Error(ErrorCode::DegenerateAxis, "axis " + std::to_string(c) + " is constant");
      out.col(c).setZero();
      continue;
    }
    out.col(c) = ((points.col(c).array() - lo) / (hi - lo)).matrix();
  }
  return out;
}

ConnectivityCoords scaled_centroids(const Region& region) {
  if (region.size() < 2) throw Error(ErrorCode::RegionTooSmall, "need at least 2 units");
  Points raw(static_cast<Eigen::Index>(region.size()), 2);
  for (std::size_t i = 0; i < region.size(); ++i) {
    raw(static_cast<Eigen::Index>(i), 0) = region.units()[i].centroid_x;
    raw(static_cast<Eigen::Index>(i), 1) = region.units()[i].centroid_y;
  }
  return ConnectivityCoords{"distance", rescale_unit_square(raw), {}};
}

}  // namespace spatial_smooth
