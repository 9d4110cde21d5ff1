#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spatial_smooth/numerics.hpp"
#include "spatial_smooth/region.hpp"
#include "spatial_smooth/sampler.hpp"
#include "spatial_smooth/simgen.hpp"
#include "spatial_smooth/smooth.hpp"

namespace spatial_smooth {

enum class Baseline { None, Bym2 };

/// Hyperpriors. Precisions are Gamma(shape, rate); the negative-binomial
/// size theta has an exponential prior; the BYM2 mixing weight is uniform.
struct PriorConfig {
  double alpha_mean = 0.0;
  double alpha_sd = 100.0;
  GammaPrior smoothing{0.05, 0.005};
  GammaPrior iid_precision{1.0, 5e-5};
  double dispersion_rate = 0.01;
  GammaPrior bym2_precision{1.0, 5e-4};

  void validate() const;
};

struct ModelOptions {
  Family likelihood = Family::Poisson;
  bool include_iid = true;
  Baseline baseline = Baseline::None;
  PriorConfig priors;
};

struct ModelSpec {
  Family likelihood = Family::Poisson;
  std::size_t trials = 0;
  Vector log_offset;  // zeros for binomial models
  std::vector<SmoothBasis> smooth_terms;
  bool include_iid = true;
  Baseline baseline = Baseline::None;
  Matrix adjacency;  // only for the BYM2 baseline
  PriorConfig priors;

  std::size_t size() const { return static_cast<std::size_t>(log_offset.size()); }
};

/// Validates and assembles a spline-structured (or, with baseline Bym2 and an
/// adjacency, a BYM2) model for the given observations.
ModelSpec build_model(const Observations& obs, std::vector<SmoothBasis> terms, const ModelOptions& options,
                      const Matrix& adjacency = Matrix());

/// Geometric mean of the marginal variances of the sum-to-zero constrained
/// ICAR field with precision diag(W 1) - W.
double icar_scaling(const Matrix& adjacency);

struct McmcOptions {
  std::size_t chains = 2;
  std::size_t iterations = 5000;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

/// Pointwise values of one random term, one row per retained draw.
struct TermDraws {
  std::string label;
  Matrix values;  // draws x n
};

struct ChainSamples {
  std::vector<std::string> scalar_names;
  Matrix scalars;                 // draws x scalar_names.size()
  std::vector<Matrix> betas;      // per smooth term, draws x K, original basis coordinates
  std::vector<TermDraws> terms;   // random terms in model order
  Matrix ustar;                   // BYM2 only: draws x n scaled ICAR field
  Matrix loglik;                  // draws x n
  Vector fitted;                  // posterior mean of E(y_i), or of p_i for binomial models
  std::vector<std::pair<std::string, double>> acceptance;
  std::vector<std::string> warnings;

  std::size_t draws() const { return static_cast<std::size_t>(scalars.rows()); }
  Eigen::Index scalar_index(const std::string& name) const;
};

struct PosteriorSamples {
  std::vector<ChainSamples> chains;
  McmcOptions options;
  Family likelihood = Family::Poisson;
  std::size_t trials = 0;

  const std::vector<std::string>& scalar_names() const { return chains.front().scalar_names; }
  std::vector<std::string> term_labels() const;
  /// All chains stacked, draws in chain order.
  Vector scalar(const std::string& name) const;
  Matrix term(const std::string& label) const;
  Matrix loglik() const;
  Vector fitted() const;
  Vector term_mean(const std::string& label) const;
  std::vector<std::string> warnings() const;
};

/// Metropolis-within-Gibbs sampler. Chains are independent, each seeded from
/// (seed, chain index), so results do not depend on `threads`.
PosteriorSamples run_mcmc(const ModelSpec& model, const Observations& obs, const McmcOptions& options);

PosteriorSamples fit_bym2(const Observations& obs, const Region& region, const PriorConfig& priors,
                          const McmcOptions& options);

/// Pointwise log-likelihood of one observation given its linear predictor.
double observation_loglik(Family family, double y, double log_offset, double eta, std::size_t trials, double theta);

}  // namespace spatial_smooth
