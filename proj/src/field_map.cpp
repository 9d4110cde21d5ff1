#include "spatial_smooth/field_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "spatial_smooth/csv.hpp"
#include "spatial_smooth/error.hpp"

namespace spatial_smooth {
namespace {

constexpr int kCell = 16;
constexpr int kMargin = 24;
constexpr int kLegendHeight = 40;

// Viridis anchor colours.
constexpr std::array<std::array<double, 3>, 5> kStops{{
    {68, 1, 84},
    {59, 82, 139},
    {33, 145, 140},
    {94, 201, 98},
    {253, 231, 37},
}};

std::string hex(const std::array<int, 3>& rgb) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void check_length(const Region& region, const Vector& values) {
  if (static_cast<std::size_t>(values.size()) != region.size()) {
    throw Error(ErrorCode::DimensionError, "field map needs one value per area (" + std::to_string(region.size()) +
                                               "), got " + std::to_string(values.size()));
  }
}

}  // namespace

std::array<int, 3> ramp_colour(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  const double pos = t * static_cast<double>(kStops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), kStops.size() - 2);
  const double f = pos - static_cast<double>(i);
  std::array<int, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    out[c] = static_cast<int>(std::lround(kStops[i][c] + f * (kStops[i + 1][c] - kStops[i][c])));
  }
  return out;
}

std::string render_lattice_svg(const Region& region, const Vector& values, const std::string& title) {
  check_length(region, values);
  if (!region.lattice()) throw Error(ErrorCode::InvalidArgument, "SVG rendering needs a lattice region");
  const auto [rows, cols] = *region.lattice();
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  const double span = hi - lo;
  const int width = 2 * kMargin + static_cast<int>(cols) * kCell;
  const int height = 2 * kMargin + static_cast<int>(rows) * kCell + kLegendHeight;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << kMargin << "\" y=\"" << kMargin - 8 << "\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape(title) << "</text>\n";
  }
  os << "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto i = static_cast<Eigen::Index>(r * cols + c);
      const double t = span > 0.0 ? (values(i) - lo) / span : 0.5;
      // Row 0 at the bottom, as in the centroid coordinates.
      const int x = kMargin + static_cast<int>(c) * kCell;
      const int y = kMargin + static_cast<int>(rows - 1 - r) * kCell;
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
         << hex(ramp_colour(t)) << "\"><title>" << region.units()[static_cast<std::size_t>(i)].id << ": "
         << label(values(i)) << "</title></rect>\n";
    }
  }
  os << "</g>\n";

  const int legend_y = kMargin + static_cast<int>(rows) * kCell + 10;
  const int legend_w = static_cast<int>(cols) * kCell;
  if (span > 0.0) {
    os << "<defs><linearGradient id=\"ramp\">";
    for (int s = 0; s <= 4; ++s) {
      os << "<stop offset=\"" << s * 25 << "%\" stop-color=\"" << hex(ramp_colour(s / 4.0)) << "\"/>";
    }
    os << "</linearGradient></defs>\n";
    os << "<rect x=\"" << kMargin << "\" y=\"" << legend_y << "\" width=\"" << legend_w
       << "\" height=\"10\" fill=\"url(#ramp)\"/>\n";
  } else {
    os << "<rect x=\"" << kMargin << "\" y=\"" << legend_y << "\" width=\"" << legend_w << "\" height=\"10\" fill=\""
       << hex(ramp_colour(0.5)) << "\"/>\n";
  }
  os << "<text x=\"" << kMargin << "\" y=\"" << legend_y + 24
     << "\" font-family=\"sans-serif\" font-size=\"10\">" << label(lo) << "</text>\n";
  os << "<text x=\"" << kMargin + legend_w << "\" y=\"" << legend_y + 24
     << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << label(hi) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

FieldMapFiles export_field_map(const Region& region, const Vector& values, const std::filesystem::path& stem,
                               const std::string& title) {
  check_length(region, values);
  FieldMapFiles files;
  files.csv = stem;
  files.csv += ".csv";
  std::ostringstream os;
  os << "id,x,y,value\n";
  for (std::size_t i = 0; i < region.size(); ++i) {
    const auto& u = region.units()[i];
    os << u.id << ',' << csv::format_double(u.centroid_x) << ',' << csv::format_double(u.centroid_y) << ','
       << csv::format_double(values(static_cast<Eigen::Index>(i))) << '\n';
  }
  csv::write_text(files.csv, os.str());
  if (region.lattice()) {
    std::filesystem::path svg = stem;
    svg += ".svg";
    csv::write_text(svg, render_lattice_svg(region, values, title));
    files.svg = svg;
  }
  return files;
}

}  // namespace spatial_smooth
