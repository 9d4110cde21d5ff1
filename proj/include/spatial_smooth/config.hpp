#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spatial_smooth/connectivity.hpp"
#include "spatial_smooth/inference.hpp"
#include "spatial_smooth/metrics.hpp"
#include "spatial_smooth/simgen.hpp"

namespace spatial_smooth {

enum class Study { Sim1Distance, Sim1Movement, Sim2Dual, Sim3Binomial, Sim4BinomialDual, CaseStudy };

Study parse_study(const std::string& name);
std::string to_string(Study study);

/// True for studies with two structured terms (distance and movement).
bool is_dual(Study study);

struct RegionConfig {
  std::string source = "grid";  // grid | csv
  std::size_t rows = 20;
  std::size_t cols = 20;
  double pop_min = 1e4;
  double pop_max = 1e6;
  std::uint64_t seed = 7;
  std::filesystem::path units;
  std::filesystem::path adjacency;
  std::filesystem::path flows;  // optional; gravity flows otherwise
};

struct ExperimentConfig {
  Study study = Study::Sim1Distance;
  std::filesystem::path output_dir = "output";
  std::uint64_t seed = 1;
  RegionConfig region;

  // For single-source studies the grid holds phi; for dual studies it holds
  // phi_1 with phi_2 = 1 - iid_weight - phi_1.
  std::vector<double> phi_grid;
  double iid_weight = 0.0;
  double alpha = 0.0;
  Family family = Family::Poisson;
  std::size_t trials = kDefaultTrials;
  SmoothScaling smooth_scaling = SmoothScaling::None;

  // Case study: observed counts, or a synthetic overdispersed dataset.
  std::filesystem::path counts;
  double theta = 2.0;
  std::vector<double> case_phis{0.6, 0.4, 0.0};

  std::size_t knots = kDefaultKnots;
  std::uint64_t knot_seed = 1;
  double gamma = kDefaultGravityGamma;
  DissimilarityTransform dissimilarity = DissimilarityTransform::Reciprocal;
  bool fit_baseline = false;
  bool include_iid = true;
  BrierConvention brier = BrierConvention::PerTrial;
  bool write_draws = true;

  PriorConfig priors;
  McmcOptions mcmc;
  double rhat_threshold = 1.1;

  /// Flattened `section.key = value` pairs in a stable order, for the manifest.
  std::map<std::string, std::string> echo;

  void validate() const;
};

/// Parses a `key = value` file with `[section]` headers. Unknown keys and
/// malformed values throw ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

}  // namespace spatial_smooth
