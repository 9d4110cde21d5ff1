#include <regex>
#include <set>

#include <gtest/gtest.h>

#include "spatial_smooth/field_map.hpp"
#include "spatial_smooth/simgen.hpp"
#include "support/helpers.hpp"

using namespace spatial_smooth;
using testing_support::code_of;
using testing_support::read_file;

namespace {

std::vector<std::string> cell_fills(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex cell(R"re(<rect x="\d+" y="\d+" width="16" height="16" fill="(#[0-9a-f]{6})")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1]);
  }
  return out;
}

double luminance(const std::string& hex) {
  const int r = std::stoi(hex.substr(1, 2), nullptr, 16);
  const int g = std::stoi(hex.substr(3, 2), nullptr, 16);
  const int b = std::stoi(hex.substr(5, 2), nullptr, 16);
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

}  // namespace

TEST(FieldMap, ConstantFieldSingleColour) {
  const auto r = make_grid_region(3, 3, 1e4, 1e4, 1);
  const auto fills = cell_fills(render_lattice_svg(r, Vector::Constant(9, 2.0)));
  ASSERT_EQ(fills.size(), 9u);
  EXPECT_EQ(std::set<std::string>(fills.begin(), fills.end()).size(), 1u);
}

TEST(FieldMap, MonotoneRamp) {
  const auto r = make_grid_region(2, 2, 1e4, 1e4, 1);
  Vector v(4);
  v << 1, 2, 3, 4;
  const auto fills = cell_fills(render_lattice_svg(r, v, "ramp"));
  ASSERT_EQ(fills.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_GT(luminance(fills[i]), luminance(fills[i - 1]));
  for (double t = 0.05; t <= 1.0; t += 0.05) {
    const auto a = ramp_colour(t - 0.05);
    const auto b = ramp_colour(t);
    EXPECT_GT(0.2126 * b[0] + 0.7152 * b[1] + 0.0722 * b[2], 0.2126 * a[0] + 0.7152 * a[1] + 0.0722 * a[2]);
  }
}

TEST(FieldMap, BumpFieldPeaksNearFirstCentre) {
  const auto r = make_grid_region(20, 20, 1e4, 1e6, 7);
  const std::vector<ConnectivityCoords> sets{scaled_centroids(r)};
  const auto f = gen_latent_field(sets, std::vector<double>{1.0, 0.0}, 1);
  const auto dir = testing_support::scratch_dir();
  const auto files = export_field_map(r, f.values, dir / "truth", "truth");
  ASSERT_TRUE(files.svg);
  const auto fills = cell_fills(read_file(*files.svg));
  ASSERT_EQ(fills.size(), 400u);
  std::size_t brightest = 0;
  for (std::size_t i = 0; i < fills.size(); ++i)
    if (luminance(fills[i]) > luminance(fills[brightest])) brightest = i;
  // Cells are emitted in unit order; unit (r, c) has scaled centroid (c/19, r/19).
  const double x = static_cast<double>(brightest % 20) / 19.0;
  const double z = static_cast<double>(brightest / 20) / 19.0;
  EXPECT_NEAR(x, 0.2, 0.06);
  EXPECT_NEAR(z, 0.3, 0.06);
}

TEST(FieldMap, CsvAlwaysWritten) {
  std::vector<AreaUnit> units{{5, 0.5, 1.5, 10}, {6, 2.0, 3.0, 10}};
  const auto r = Region::create(units, (Matrix(2, 2) << 0, 1, 1, 0).finished(), true);
  const auto dir = testing_support::scratch_dir();
  Vector v(2);
  v << -1.5, 2.25;
  const auto files = export_field_map(r, v, dir / "sub" / "field");
  EXPECT_FALSE(files.svg);
  EXPECT_EQ(read_file(files.csv), "id,x,y,value\n5,0.5,1.5,-1.5\n6,2,3,2.25\n");
}

TEST(FieldMap, Errors) {
  const auto r = make_grid_region(2, 2, 1e4, 1e4, 1);
  EXPECT_EQ(code_of([&] { render_lattice_svg(r, Vector::Zero(3)); }), ErrorCode::DimensionError);
  EXPECT_EQ(code_of([&] { export_field_map(r, Vector::Zero(4), "/proc/forbidden/x"); }), ErrorCode::IoError);
}
