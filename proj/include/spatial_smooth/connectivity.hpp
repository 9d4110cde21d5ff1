#pragma once

#include <filesystem>

#include "spatial_smooth/coords.hpp"
#include "spatial_smooth/numerics.hpp"
#include "spatial_smooth/region.hpp"

namespace spatial_smooth {

inline constexpr double kDefaultGravityGamma = 2.0;

struct FlowMatrix {
  Matrix flows;  // symmetric, zero diagonal, non-negative
  double gamma = kDefaultGravityGamma;
};

/// Map from a normalised flow p = flow / max_flow to a raw dissimilarity.
enum class DissimilarityTransform {
  Reciprocal,  // 1 / (1 + p) - 1/2
  OneMinus,    // 1 - p
  NegLog,      // -log p, zero flows pinned to the largest finite value
};

DissimilarityTransform parse_dissimilarity_transform(const std::string& name);

/// flow_ij = pop_i * pop_j / d_ij^gamma.
FlowMatrix gravity_flows(const Region& region, double gamma = kDefaultGravityGamma);

/// Reads `id_a,id_b,flow` rows; unlisted pairs are zero flow. Pairs are undirected.
FlowMatrix load_flows_csv(const Region& region, const std::filesystem::path& path);

/// Monotone decreasing flow -> dissimilarity map, min-max rescaled over the
/// off-diagonal to [0, 1] with a zero diagonal.
Matrix flows_to_dissimilarity(const FlowMatrix& flows,
                              DissimilarityTransform transform = DissimilarityTransform::Reciprocal);

/// Principal-axes embedding before any rescaling.
struct MdsEmbedding {
  Points points;
  Vector eigenvalues;  // all eigenvalues of the double-centred matrix, descending
  bool rank_deficient = false;
};

MdsEmbedding classical_mds_embedding(const Matrix& dissimilarity, std::size_t dim = 2);

/// Classical MDS with each axis rescaled to [0, 1]. Larger-eigenvalue axis
/// first; each axis signed so its first nonzero loading is positive.
ConnectivityCoords classical_mds(const Matrix& dissimilarity, std::size_t dim = 2, const std::string& label = "mds");

ConnectivityCoords movement_coords(const Region& region, double gamma = kDefaultGravityGamma,
                                   DissimilarityTransform transform = DissimilarityTransform::Reciprocal);

ConnectivityCoords movement_coords(const FlowMatrix& flows,
                                   DissimilarityTransform transform = DissimilarityTransform::Reciprocal);

}  // namespace spatial_smooth
