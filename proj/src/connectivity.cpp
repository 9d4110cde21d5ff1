#include "spatial_smooth/connectivity.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "spatial_smooth/csv.hpp"
#include "spatial_smooth/error.hpp"

namespace spatial_smooth {

DissimilarityTransform parse_dissimilarity_transform(const std::string& name) {
  if (name == "reciprocal") return DissimilarityTransform::Reciprocal;
  if (name == "one_minus") return DissimilarityTransform::OneMinus;
  if (name == "neg_log") return DissimilarityTransform::NegLog;
  throw Error(ErrorCode::InvalidArgument, "unknown dissimilarity transform '" + name + "'");
}

FlowMatrix gravity_flows(const Region& region, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  const auto& units = region.units();
  const auto n = static_cast<Eigen::Index>(units.size());
  FlowMatrix out{Matrix::Zero(n, n), gamma};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = units[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& b = units[static_cast<std::size_t>(j)];
      const double d = std::hypot(a.centroid_x - b.centroid_x, a.centroid_y - b.centroid_y);
      if (!(d > 0.0)) {
        throw Error(ErrorCode::ZeroDistance, "units " + std::to_string(a.id) + " and " + std::to_string(b.id) +
                                                 " share a centroid");
      }
      const double f = a.population * b.population / std::pow(d, gamma);
      out.flows(i, j) = f;
      out.flows(j, i) = f;
    }
  }
  return out;
}

FlowMatrix load_flows_csv(const Region& region, const std::filesystem::path& path) {
  std::unordered_map<std::int64_t, Eigen::Index> index;
  for (std::size_t i = 0; i < region.size(); ++i) index.emplace(region.units()[i].id, static_cast<Eigen::Index>(i));
  const auto table = csv::read(path);
  const auto c_a = table.column("id_a");
  const auto c_b = table.column("id_b");
  const auto c_f = table.column("flow");
  const auto n = static_cast<Eigen::Index>(region.size());
  FlowMatrix out{Matrix::Zero(n, n), 0.0};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string ctx = path.string() + " row " + std::to_string(r + 1);
    const auto a = index.find(csv::parse_int(row[c_a], ctx));
    const auto b = index.find(csv::parse_int(row[c_b], ctx));
    if (a == index.end() || b == index.end()) throw Error(ErrorCode::IoError, ctx + ": unknown unit id");
    const double f = csv::parse_double(row[c_f], ctx);
    if (!(f >= 0.0) || !std::isfinite(f)) throw Error(ErrorCode::IoError, ctx + ": flow must be finite and >= 0");
    if (a->second == b->second) continue;
    out.flows(a->second, b->second) = f;
    out.flows(b->second, a->second) = f;
  }
  return out;
}

Matrix flows_to_dissimilarity(const FlowMatrix& flows, DissimilarityTransform transform) {
  const Matrix& f = flows.flows;
  const Eigen::Index n = f.rows();
  if (f.cols() != n || n < 2) throw Error(ErrorCode::DimensionError, "flow matrix must be square with n >= 2");
  if (!f.allFinite() || f.minCoeff() < 0.0) throw Error(ErrorCode::InvalidArgument, "flows must be finite and >= 0");
  double max_flow = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) max_flow = std::max(max_flow, f(i, j));
    }
  }
  if (!(max_flow > 0.0)) throw Error(ErrorCode::DegenerateFlows, "all off-diagonal flows are zero");

  Matrix raw = Matrix::Zero(n, n);
  double largest_finite = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = f(i, j) / max_flow;
      double value = 0.0;
      switch (transform) {
        case DissimilarityTransform::Reciprocal: value = 1.0 / (1.0 + p) - 0.5; break;
        case DissimilarityTransform::OneMinus: value = 1.0 - p; break;
        case DissimilarityTransform::NegLog:
          value = p > 0.0 ? -std::log(p) : std::numeric_limits<double>::infinity();
          break;
      }
      raw(i, j) = value;
      if (std::isfinite(value)) largest_finite = std::max(largest_finite, value);
    }
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!std::isfinite(raw(i, j))) raw(i, j) = largest_finite;
      lo = std::min(lo, raw(i, j));
      hi = std::max(hi, raw(i, j));
    }
  }
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      // Equal flows everywhere: every pair is equally dissimilar.
      out(i, j) = hi > lo ? (raw(i, j) - lo) / (hi - lo) : 1.0;
    }
  }
  return out;
}

MdsEmbedding classical_mds_embedding(const Matrix& dissimilarity, std::size_t dim) {
  if (dim == 0 || dim > static_cast<std::size_t>(dissimilarity.rows())) {
    throw Error(ErrorCode::InvalidArgument, "embedding dimension must be in [1, n]");
  }
  const Matrix centred = double_center(dissimilarity);
  const auto eig = sym_eigen(centred);
  const double scale = eig.values.cwiseAbs().maxCoeff();
  MdsEmbedding out;
  out.eigenvalues = eig.values;
  out.points = Points::Zero(dissimilarity.rows(), 2);
  for (std::size_t a = 0; a < dim && a < 2; ++a) {
    const double lambda = eig.values(static_cast<Eigen::Index>(a));
    if (!(lambda > 1e-10 * scale)) {
      out.rank_deficient = true;
      continue;
    }
    out.points.col(static_cast<Eigen::Index>(a)) = eig.vectors.col(static_cast<Eigen::Index>(a)) * std::sqrt(lambda);
  }
  return out;
}

ConnectivityCoords classical_mds(const Matrix& dissimilarity, std::size_t dim, const std::string& label) {
  if (dim != 2) throw Error(ErrorCode::InvalidArgument, "connectivity coordinates are two-dimensional");
  const auto embedding = classical_mds_embedding(dissimilarity, dim);
  ConnectivityCoords coords{label, rescale_unit_square(embedding.points, true), {}};
  if (embedding.rank_deficient) {
    coords.warnings.emplace_back(std::string(to_string(ErrorCode::RankDeficientEmbedding)) +
                                 ": fewer than 2 positive eigenvalues; degenerate axes set to zero");
  }
  return coords;
}

ConnectivityCoords movement_coords(const FlowMatrix& flows, DissimilarityTransform transform) {
  return classical_mds(flows_to_dissimilarity(flows, transform), 2, "movement");
}

ConnectivityCoords movement_coords(const Region& region, double gamma, DissimilarityTransform transform) {
  return movement_coords(gravity_flows(region, gamma), transform);
}

}  // namespace spatial_smooth
