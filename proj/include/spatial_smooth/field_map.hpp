#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "spatial_smooth/numerics.hpp"
#include "spatial_smooth/region.hpp"

namespace spatial_smooth {

struct FieldMapFiles {
  std::filesystem::path csv;
  std::optional<std::filesystem::path> svg;  // lattice regions only
};

/// Sequential colour ramp on [0, 1]; returns 8-bit RGB.
std::array<int, 3> ramp_colour(double t);

/// Writes `<stem>.csv` (`id,x,y,value`) and, for lattice regions, `<stem>.svg`.
FieldMapFiles export_field_map(const Region& region, const Vector& values, const std::filesystem::path& stem,
                               const std::string& title = "");

/// Coloured-cell rendering of a lattice region; a constant field uses one colour.
std::string render_lattice_svg(const Region& region, const Vector& values, const std::string& title = "");

}  // namespace spatial_smooth
