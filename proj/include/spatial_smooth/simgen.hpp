#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spatial_smooth/coords.hpp"
#include "spatial_smooth/numerics.hpp"
#include "spatial_smooth/region.hpp"

namespace spatial_smooth {

/// Two-bump test surface on the unit square (sigma_x = 0.3, sigma_z = 0.4).
double sm_surface(double x, double z);

enum class Family { Poisson, Binomial, NegativeBinomial };

Family parse_family(const std::string& name);
std::string to_string(Family family);

inline constexpr std::size_t kDefaultTrials = 20;

/// How a smooth component is scaled after centring. `None` keeps the raw
/// centred surface; `UnitVariance` divides by its across-area standard
/// deviation so that the mixing weights are variance shares.
enum class SmoothScaling { None, UnitVariance };

SmoothScaling parse_smooth_scaling(const std::string& name);

struct LatentComponent {
  std::string label;
  double weight = 0.0;  // phi_k
  Vector values;        // unweighted component
};

/// S = sum_k sqrt(phi_k) * component_k; the last component is always "iid".
struct LatentField {
  Vector values;
  std::vector<LatentComponent> components;

  const LatentComponent& component(const std::string& label) const;
  /// Share of var(S) carried by each component under independence:
  /// phi_k var(c_k) / sum_j phi_j var(c_j), with var(iid) taken as 1.
  std::vector<double> variance_shares() const;
};

/// One smooth component per coordinate set plus a trailing iid N(0, 1)
/// component; `phis` has one more entry than `coord_sets`.
LatentField gen_latent_field(std::span<const ConnectivityCoords> coord_sets, std::span<const double> phis,
                             std::uint64_t seed, SmoothScaling scaling = SmoothScaling::None);

/// Observed outcomes plus the fixed model inputs that come with them.
struct Observations {
  Vector y;            // counts or successes
  Vector log_offset;   // log xi_i; zeros for binomial data
  std::size_t trials = 0;
  Family family = Family::Poisson;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
};

struct SimDataset {
  Observations obs;
  LatentField truth;
  double alpha_true = 0.0;
  double theta_true = 0.0;  // only for overdispersed counts
  std::uint64_t seed = 0;
};

/// Poisson counts with mean xi_i exp(alpha + S_i), or Binomial(trials,
/// logistic(alpha + S_i)) with no offset.
SimDataset gen_observations(const Region& region, const LatentField& field, double alpha, Family family,
                            std::size_t trials, std::uint64_t seed);

/// Poisson-gamma mixture counts: y_i ~ Poisson(mu_i G_i), G_i ~ Gamma(theta, theta),
/// so that var(y_i) = mu_i + mu_i^2 / theta.
SimDataset gen_overdispersed_counts(const Region& region, const LatentField& field, double alpha, double theta,
                                    std::uint64_t seed);

/// Writes `id,y,offset,S_true,component_<label>...`.
void write_dataset_csv(const Region& region, const SimDataset& data, const std::filesystem::path& path);

/// Reads `id,y` aligned to the region's units; binomial rows share `trials`.
Observations load_counts_csv(const Region& region, const std::filesystem::path& path, Family family,
                             std::size_t trials);

}  // namespace spatial_smooth
