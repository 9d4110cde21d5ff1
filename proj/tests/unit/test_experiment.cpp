#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "spatial_smooth/experiment.hpp"
#include "support/helpers.hpp"

using namespace spatial_smooth;
using testing_support::code_of;
using testing_support::read_file;
using testing_support::scratch_dir;
using testing_support::write_file;

namespace {

const std::string kSmall =
    "[region]\nrows = 5\ncols = 5\n"
    "[model]\nknots = 8\n"
    "[mcmc]\nchains = 2\niterations = 300\nburn_in = 100\n";

ExperimentConfig small_config(const std::string& study, const std::filesystem::path& out,
                              const std::string& extra = "") {
  auto c = parse_config("[experiment]\nstudy = " + study + "\n" + kSmall + extra);
  c.output_dir = out;
  return c;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

nlohmann::json manifest_of(const ExperimentResult& r) { return nlohmann::json::parse(read_file(r.manifest)); }

void expect_artifacts_exist(const ExperimentResult& r, const std::filesystem::path& out) {
  const auto m = manifest_of(r);
  ASSERT_FALSE(m["artifacts"].empty());
  for (const auto& a : m["artifacts"]) EXPECT_TRUE(std::filesystem::exists(out / a.get<std::string>())) << a;
  EXPECT_EQ(m["artifacts"].size(), r.artifacts.size());
}

}  // namespace

TEST(Experiment, GridWeights) {
  const auto single = parse_config("[experiment]\nstudy = sim1-distance\n");
  EXPECT_EQ(grid_weights(single, 0.3), (std::vector<double>{0.3, 0.7}));
  const auto dual = parse_config("[experiment]\nstudy = sim2-dual\n");
  const auto w = grid_weights(dual, 0.3);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 0.3);
  EXPECT_NEAR(w[1], 0.6, 1e-12);
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
}

TEST(Experiment, GridRunIsDeterministicAndComplete) {
  const auto dir = scratch_dir();
  const auto extra = "[simulation]\nphi_grid = 0, 0.5, 1\n";
  const auto a = run_experiment(small_config("sim1-distance", dir / "a", extra));
  auto cfg_b = small_config("sim1-distance", dir / "b", extra);
  cfg_b.mcmc.threads = 2;
  const auto b = run_experiment(cfg_b);

  expect_artifacts_exist(a, dir / "a");
  ASSERT_EQ(a.artifacts, b.artifacts);
  for (const auto& rel : a.artifacts) {
    if (rel == "manifest.json") continue;
    EXPECT_EQ(read_file(dir / "a" / rel), read_file(dir / "b" / rel)) << rel;
  }

  const auto spline = read_file(dir / "a" / "metrics_spline.csv");
  EXPECT_EQ(spline.substr(0, spline.find('\n')), "phi_true,model,mae,waic,phi_est_mean,phi_est_lo,phi_est_hi,converged");
  EXPECT_EQ(line_count(spline), 4u);
  EXPECT_EQ(line_count(read_file(dir / "a" / "metrics_bym2.csv")), 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "dataset_00" / "maps" / "spline_combined.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "dataset_02" / "maps" / "truth_S.svg"));

  const auto m = manifest_of(a);
  EXPECT_EQ(m["status"], a.converged ? "CONVERGED" : "NOT-CONVERGED");
  EXPECT_EQ(m["config"]["file"]["experiment.study"], "sim1-distance");
}

TEST(Experiment, BinomialDualMetrics) {
  const auto dir = scratch_dir();
  const auto r = run_experiment(small_config("sim4-binomial-dual", dir, "[simulation]\nphi_grid = 0.4\n"));
  expect_artifacts_exist(r, dir);
  const auto metrics = read_file(dir / "metrics_spline.csv");
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "phi_true,model,auroc,brier,waic,phi_est,converged");
  EXPECT_EQ(line_count(metrics), 2u);
  EXPECT_FALSE(std::filesystem::exists(dir / "metrics_bym2.csv"));
  const auto decomposition = read_file(dir / "decomposition.csv");
  EXPECT_NE(decomposition.find("distance"), std::string::npos);
  EXPECT_NE(decomposition.find("movement"), std::string::npos);
}

TEST(Experiment, NotConvergedIsReported) {
  const auto dir = scratch_dir();
  auto c = small_config("sim1-movement", dir, "[simulation]\nphi_grid = 0.5\n");
  c.rhat_threshold = 1e-6;
  const auto r = run_experiment(c);
  EXPECT_FALSE(r.converged);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings.front().find("NOT-CONVERGED"), std::string::npos);
  EXPECT_EQ(manifest_of(r)["status"], "NOT-CONVERGED");
}

TEST(Experiment, CaseStudyOutputs) {
  const auto dir = scratch_dir();
  const auto r = run_experiment(small_config("casestudy", dir));
  expect_artifacts_exist(r, dir);
  for (const auto* name : {"distance", "movement", "unstructured", "combined"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "maps" / (std::string(name) + ".svg"))) << name;
  }
  const auto report = read_file(dir / "decomposition.txt");
  EXPECT_NE(report.find("(distance) = "), std::string::npos);
  EXPECT_NE(report.find("95% CI"), std::string::npos);
}

TEST(Experiment, CaseStudyFromCounts) {
  const auto dir = scratch_dir();
  std::ostringstream counts;
  counts << "id,y\n";
  for (int i = 0; i < 25; ++i) counts << i << ',' << (i % 7) + 1 << '\n';
  write_file(dir / "counts.csv", counts.str());
  auto c = small_config("casestudy", dir / "out");
  c.counts = dir / "counts.csv";
  const auto r = run_experiment(c);
  expect_artifacts_exist(r, dir / "out");
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "data.csv"));
}

TEST(Experiment, SimulateAndMds) {
  const auto dir = scratch_dir();
  const auto sim = simulate_datasets(small_config("sim2-dual", dir / "sim", "[simulation]\nphi_grid = 0, 0.9\n"));
  expect_artifacts_exist(sim, dir / "sim");
  EXPECT_TRUE(std::filesystem::exists(dir / "sim" / "dataset_01" / "data.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "sim" / "dataset_01" / "maps" / "truth_movement.svg"));

  const auto mds = run_mds(small_config("sim1-movement", dir / "mds"));
  expect_artifacts_exist(mds, dir / "mds");
  EXPECT_EQ(line_count(read_file(dir / "mds" / "movement_coords.csv")), 26u);
  EXPECT_EQ(line_count(read_file(dir / "mds" / "mds_eigenvalues.csv")), 26u);
}

TEST(Experiment, RegionAndMovementFromCsv) {
  const auto dir = scratch_dir();
  write_file(dir / "units.csv", "id,centroid_x,centroid_y,population\n1,0,0,1000\n2,1,0,2000\n3,0,1,1500\n4,1,1,3000\n5,2,2,500\n");
  write_file(dir / "adj.csv", "id_a,id_b\n1,2\n1,3\n2,4\n3,4\n4,5\n");
  const auto c = parse_config(
      "[experiment]\nstudy = sim1-movement\n[region]\nsource = csv\nunits = units.csv\nadjacency = adj.csv\n", dir);
  const auto region = build_region(c);
  EXPECT_EQ(region.size(), 5u);
  EXPECT_FALSE(region.lattice());
  const auto coords = build_movement_coords(c, region);
  EXPECT_EQ(coords.label, "movement");
  EXPECT_EQ(coords.size(), 5u);
}

TEST(Experiment, ValidationRunsFirst) {
  auto c = parse_config("[experiment]\nstudy = sim1-distance\n[mcmc]\nchains = 1\n");
  EXPECT_EQ(code_of([&] { run_experiment(c); }), ErrorCode::ConfigError);
}

#ifdef SPATIAL_SMOOTH_CLI
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPATIAL_SMOOTH_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir();
  write_file(dir / "ok.ini", "[experiment]\nstudy = sim1-distance\n" + kSmall + "[simulation]\nphi_grid = 0.5\n");
  write_file(dir / "bad.ini", "[experiment]\nstudy = sim1-distance\nflavour = 3\n");
  write_file(dir / "data.ini",
             "[experiment]\nstudy = casestudy\n[region]\nrows = 5\ncols = 5\n[model]\nknots = 8\n[data]\ncounts = counts.csv\n");
  write_file(dir / "counts.csv", "id,y\n0,1\n1,-4\n");
  write_file(dir / "strict.ini", "[experiment]\nstudy = sim1-distance\n" + kSmall +
                                     "rhat_threshold = 0.000001\n[simulation]\nphi_grid = 0.5\n");
  const auto d = dir.string();

  EXPECT_EQ(run_cli("validate " + d + "/ok.ini"), 0);
  EXPECT_EQ(run_cli("run " + d + "/ok.ini --seed 3 --threads 2 --out " + d + "/out"), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "manifest.json"));
  EXPECT_EQ(run_cli("validate " + d + "/bad.ini"), 2);
  EXPECT_EQ(run_cli("validate " + d + "/missing.ini"), 2);
  EXPECT_EQ(run_cli("frobnicate " + d + "/ok.ini"), 2);
  EXPECT_EQ(run_cli("run " + d + "/ok.ini --threads 0"), 2);
  EXPECT_EQ(run_cli("run " + d + "/data.ini --out " + d + "/data_out"), 3);
  EXPECT_EQ(run_cli("run " + d + "/strict.ini --out " + d + "/s1"), 0);
  EXPECT_EQ(run_cli("run " + d + "/strict.ini --strict --out " + d + "/s2"), 4);
  EXPECT_EQ(run_cli("simulate " + d + "/ok.ini --out " + d + "/sim"), 0);
  EXPECT_EQ(run_cli("mds " + d + "/ok.ini --out " + d + "/mds"), 0);
}
#endif
