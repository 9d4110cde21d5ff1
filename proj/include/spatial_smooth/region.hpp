#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spatial_smooth/coords.hpp"
#include "spatial_smooth/numerics.hpp"

namespace spatial_smooth {

struct AreaUnit {
  std::int64_t id = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  double population = 1.0;  // persons
};

/// Row-major lattice layout, present only for synthetic grid regions. Unit
/// (r, c) sits at index r * cols + c with centroid (c, r).
struct LatticeShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// Offsets per 100,000 persons.
inline constexpr double kOffsetPerPersons = 100000.0;

/// Areal study geography. Immutable once built; construct through the
/// factory functions below or `Region::create`, which validates every invariant.
class Region {
 public:
  /// Validates the units and the binary adjacency. When `require_connected`
  /// is false a disconnected graph is accepted and reported through `connected()`.
  static Region create(std::vector<AreaUnit> units, Matrix adjacency, bool require_connected,
                       std::optional<LatticeShape> lattice = std::nullopt);

  std::size_t size() const { return units_.size(); }
  const std::vector<AreaUnit>& units() const { return units_; }
  const Matrix& adjacency() const { return adjacency_; }
  /// xi_i = population_i / 100000.
  const Vector& offsets() const { return offsets_; }
  Vector log_offsets() const { return offsets_.array().log().matrix(); }
  const std::optional<LatticeShape>& lattice() const { return lattice_; }
  bool connected() const { return connected_; }
  std::vector<std::size_t> neighbours(std::size_t i) const;
  /// Throws DisconnectedGraph when the adjacency graph has more than one component.
  void require_connected() const;

 private:
  Region() = default;

  std::vector<AreaUnit> units_;
  Matrix adjacency_;
  Vector offsets_;
  std::optional<LatticeShape> lattice_;
  bool connected_ = true;
};

bool is_connected(const Matrix& adjacency);

/// rows x cols unit-spaced lattice with rook adjacency and log-uniform populations.
Region make_grid_region(std::size_t rows, std::size_t cols, double pop_min, double pop_max, std::uint64_t seed);

/// Reads `id,centroid_x,centroid_y,population` and `id_a,id_b` CSV files.
Region load_region_csv(const std::filesystem::path& units_path, const std::filesystem::path& adjacency_path,
                       bool require_connected = true);

/// Centroids with each axis affinely mapped onto [0, 1].
ConnectivityCoords scaled_centroids(const Region& region);

}  // namespace spatial_smooth
