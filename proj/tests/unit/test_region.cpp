#include <gtest/gtest.h>

#include "spatial_smooth/region.hpp"
#include "support/helpers.hpp"

using namespace spatial_smooth;
using testing_support::code_of;
using testing_support::scratch_dir;
using testing_support::write_file;

namespace {

std::vector<double> row_sums(const Region& r) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < r.adjacency().rows(); ++i) out.push_back(r.adjacency().row(i).sum());
  return out;
}

}  // namespace

TEST(GridRegion, TwoByTwoRook) {
  const auto r = make_grid_region(2, 2, 5e4, 5e4, 1);
  ASSERT_EQ(r.size(), 4u);
  for (double s : row_sums(r)) EXPECT_EQ(s, 2.0);
}

TEST(GridRegion, ThreeByThreeDegrees) {
  const auto r = make_grid_region(3, 3, 1e4, 1e6, 2);
  const auto s = row_sums(r);
  EXPECT_EQ(s[0], 2.0);
  EXPECT_EQ(s[2], 2.0);
  EXPECT_EQ(s[6], 2.0);
  EXPECT_EQ(s[8], 2.0);
  EXPECT_EQ(s[4], 4.0);
  EXPECT_EQ(s[1], 3.0);
}

TEST(GridRegion, TwentyByTwentyDeterministic) {
  const auto a = make_grid_region(20, 20, 1e4, 1e6, 7);
  const auto b = make_grid_region(20, 20, 1e4, 1e6, 7);
  ASSERT_EQ(a.size(), 400u);
  for (double s : row_sums(a)) EXPECT_TRUE(s == 2.0 || s == 3.0 || s == 4.0);
  EXPECT_EQ(a.adjacency(), b.adjacency());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.units()[i].population, b.units()[i].population);
    EXPECT_GE(a.units()[i].population, 1e4);
    EXPECT_LE(a.units()[i].population, 1e6);
  }
  EXPECT_TRUE(a.connected());
  ASSERT_TRUE(a.lattice());
  EXPECT_EQ(a.lattice()->rows, 20u);
}

TEST(GridRegion, TooSmall) {
  EXPECT_EQ(code_of([] { make_grid_region(1, 3, 1, 1, 1); }), ErrorCode::RegionTooSmall);
  EXPECT_EQ(code_of([] { make_grid_region(2, 2, 0, 1, 1); }), ErrorCode::InvalidArgument);
}

TEST(GridRegion, OffsetsPerHundredThousand) {
  const auto r = make_grid_region(3, 3, 1e5, 1e5, 4);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR(r.offsets()(static_cast<Eigen::Index>(i)), 1.0, 1e-12);
    EXPECT_NEAR(r.log_offsets()(static_cast<Eigen::Index>(i)), 0.0, 1e-12);
  }
}

TEST(RegionCsv, TwoUnits) {
  const auto dir = scratch_dir();
  write_file(dir / "units.csv", "id,centroid_x,centroid_y,population\n10,0,0,100000\n11,1,0,200000\n");
  write_file(dir / "adj.csv", "id_a,id_b\n10,11\n");
  const auto r = load_region_csv(dir / "units.csv", dir / "adj.csv");
  Matrix w(2, 2);
  w << 0, 1, 1, 0;
  EXPECT_EQ(r.adjacency(), w);
  EXPECT_DOUBLE_EQ(r.offsets()(0), 1.0);
  EXPECT_DOUBLE_EQ(r.log_offsets()(0), 0.0);
  EXPECT_DOUBLE_EQ(r.offsets()(1), 2.0);
  EXPECT_FALSE(r.lattice());
}

TEST(RegionCsv, BothOrientationsDeduplicated) {
  const auto dir = scratch_dir();
  write_file(dir / "units.csv", "id,centroid_x,centroid_y,population\n1,0,0,1\n2,1,0,1\n3,2,0,1\n");
  write_file(dir / "adj.csv", "id_a,id_b\n1,2\n2,1\n2,3\n3,2\n");
  const auto r = load_region_csv(dir / "units.csv", dir / "adj.csv");
  EXPECT_EQ(r.adjacency().sum(), 4.0);
}

TEST(RegionCsv, MissingReciprocalEdge) {
  const auto dir = scratch_dir();
  write_file(dir / "units.csv", "id,centroid_x,centroid_y,population\n1,0,0,1\n2,1,0,1\n3,2,0,1\n4,3,0,1\n5,4,0,1\n");
  write_file(dir / "adj.csv", "id_a,id_b\n1,2\n2,1\n2,3\n3,2\n3,4\n4,3\n4,5\n");
  EXPECT_EQ(code_of([&] { load_region_csv(dir / "units.csv", dir / "adj.csv"); }), ErrorCode::AdjacencyError);
}

TEST(RegionCsv, DuplicateId) {
  const auto dir = scratch_dir();
  write_file(dir / "units.csv", "id,centroid_x,centroid_y,population\n1,0,0,1\n1,1,0,1\n");
  write_file(dir / "adj.csv", "id_a,id_b\n");
  EXPECT_EQ(code_of([&] { load_region_csv(dir / "units.csv", dir / "adj.csv"); }), ErrorCode::DuplicateId);
}

TEST(RegionCsv, DisconnectedOnlyWhenRequired) {
  const auto dir = scratch_dir();
  write_file(dir / "units.csv", "id,centroid_x,centroid_y,population\n1,0,0,1\n2,1,0,1\n3,5,0,1\n4,6,1,1\n");
  write_file(dir / "adj.csv", "id_a,id_b\n1,2\n3,4\n");
  EXPECT_EQ(code_of([&] { load_region_csv(dir / "units.csv", dir / "adj.csv"); }), ErrorCode::DisconnectedGraph);
  const auto r = load_region_csv(dir / "units.csv", dir / "adj.csv", false);
  EXPECT_FALSE(r.connected());
  EXPECT_EQ(code_of([&] { r.require_connected(); }), ErrorCode::DisconnectedGraph);
}

TEST(RegionCsv, NonPositivePopulation) {
  const auto dir = scratch_dir();
  write_file(dir / "units.csv", "id,centroid_x,centroid_y,population\n1,0,0,0\n2,1,0,1\n");
  write_file(dir / "adj.csv", "id_a,id_b\n1,2\n");
  EXPECT_THROW(load_region_csv(dir / "units.csv", dir / "adj.csv"), Error);
}

TEST(RegionCsv, MissingFileIsIoError) {
  const auto dir = scratch_dir();
  EXPECT_EQ(code_of([&] { load_region_csv(dir / "nope.csv", dir / "adj.csv"); }), ErrorCode::IoError);
}

TEST(ScaledCentroids, AffineMap) {
  auto r = Region::create({{0, 0, 0, 1}, {1, 10, 10, 1}}, (Matrix(2, 2) << 0, 1, 1, 0).finished(), true);
  auto c = scaled_centroids(r);
  EXPECT_EQ(c.label, "distance");
  EXPECT_DOUBLE_EQ(c.points(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(c.points(1, 1), 1.0);

  Matrix w = Matrix::Zero(3, 3);
  w(0, 1) = w(1, 0) = w(1, 2) = w(2, 1) = 1;
  r = Region::create({{0, 0, 0, 1}, {1, 5, 3, 1}, {2, 10, 1, 1}}, w, true);
  c = scaled_centroids(r);
  EXPECT_DOUBLE_EQ(c.points(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.points(2, 0), 1.0);
}

TEST(ScaledCentroids, LatticeCornersAndDegenerateAxis) {
  const auto c = scaled_centroids(make_grid_region(20, 20, 1e4, 1e6, 7));
  EXPECT_EQ(c.points.row(0), Eigen::RowVector2d(0, 0));
  EXPECT_EQ(c.points.row(19), Eigen::RowVector2d(1, 0));
  EXPECT_EQ(c.points.row(380), Eigen::RowVector2d(0, 1));
  EXPECT_EQ(c.points.row(399), Eigen::RowVector2d(1, 1));

  Matrix w = Matrix::Zero(3, 3);
  w(0, 1) = w(1, 0) = w(1, 2) = w(2, 1) = 1;
  const auto flat = Region::create({{0, 0, 0, 1}, {1, 5, 0, 1}, {2, 10, 0, 1}}, w, true);
  EXPECT_EQ(code_of([&] { scaled_centroids(flat); }), ErrorCode::DegenerateAxis);
}
