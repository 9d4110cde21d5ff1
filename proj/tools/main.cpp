#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spatial_smooth/config.hpp"
#include "spatial_smooth/error.hpp"
#include "spatial_smooth/experiment.hpp"

namespace ss = spatial_smooth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNotConverged = 4;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
  bool strict = false;
};

ss::ExperimentConfig load(const std::string& path, const Overrides& o) {
  auto config = ss::load_config(path);
  if (o.seed) {
    config.seed = *o.seed;
    config.mcmc.seed = *o.seed;
  }
  if (!o.out.empty()) config.output_dir = o.out;
  if (o.threads) config.mcmc.threads = *o.threads;
  config.validate();
  return config;
}

void report(const ss::ExperimentResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << (r.converged ? "CONVERGED" : "NOT-CONVERGED") << ' ' << r.manifest.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial smoothing experiments with connectivity-based splines"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Config file")->required();
    sub->add_option("--seed", o.seed, "Override the data and MCMC seed");
    sub->add_option("--out", o.out, "Override the output directory");
    sub->add_option("--threads", o.threads, "Worker threads for MCMC chains")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", o.strict, "Exit with status 4 when any fit fails to converge");
  };
  auto* run = app.add_subcommand("run", "Generate, fit and score every configured dataset");
  auto* simulate = app.add_subcommand("simulate", "Write simulated datasets and truth maps only");
  auto* mds = app.add_subcommand("mds", "Write movement-based MDS coordinates");
  auto* validate = app.add_subcommand("validate", "Check a config and its input files");
  for (auto* sub : {run, simulate, mds, validate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto config = load(config_path, o);
    if (validate->parsed()) {
      const auto region = ss::build_region(config);
      if (ss::is_dual(config.study) || config.study == ss::Study::Sim1Movement) {
        (void)ss::build_movement_coords(config, region);
      }
      std::cout << "ok: " << ss::to_string(config.study) << ", " << region.size() << " areas\n";
      return kExitOk;
    }
    ss::ExperimentResult result;
    if (run->parsed()) {
      result = ss::run_experiment(config);
    } else if (simulate->parsed()) {
      result = ss::simulate_datasets(config);
    } else {
      result = ss::run_mds(config);
    }
    report(result);
    if (o.strict && !result.converged) return kExitNotConverged;
    return kExitOk;
  } catch (const ss::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ss::ErrorCode::ConfigError ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUnexpected;
  }
}
