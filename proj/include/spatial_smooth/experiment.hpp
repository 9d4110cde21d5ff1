#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spatial_smooth/config.hpp"
#include "spatial_smooth/region.hpp"

namespace spatial_smooth {

struct ExperimentResult {
  std::filesystem::path manifest;
  bool converged = true;
  std::vector<std::filesystem::path> artifacts;  // relative to the output directory
  std::vector<std::string> warnings;
};

/// Builds the configured region; connectivity is enforced only when an ICAR
/// baseline is fitted.
Region build_region(const ExperimentConfig& config);

/// Movement coordinates from the configured flows file, or from gravity flows.
ConnectivityCoords build_movement_coords(const ExperimentConfig& config, const Region& region);

/// Mixing weights of grid point `phi` (single-source: {phi, 1 - phi};
/// dual: {phi, 1 - iid_weight - phi, iid_weight}).
std::vector<double> grid_weights(const ExperimentConfig& config, double phi);

/// Generates, fits and scores every grid point (or the case study) and writes
/// all artifacts plus `manifest.json` under the output directory.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Generates and writes the simulated datasets and truth maps only.
ExperimentResult simulate_datasets(const ExperimentConfig& config);

/// Writes movement-based MDS coordinates and the embedding spectrum.
ExperimentResult run_mds(const ExperimentConfig& config);

}  // namespace spatial_smooth
