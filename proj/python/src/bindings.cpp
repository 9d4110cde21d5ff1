#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spatial_smooth/config.hpp"
#include "spatial_smooth/connectivity.hpp"
#include "spatial_smooth/error.hpp"
#include "spatial_smooth/experiment.hpp"
#include "spatial_smooth/field_map.hpp"
#include "spatial_smooth/inference.hpp"
#include "spatial_smooth/metrics.hpp"
#include "spatial_smooth/numerics.hpp"
#include "spatial_smooth/region.hpp"
#include "spatial_smooth/simgen.hpp"
#include "spatial_smooth/smooth.hpp"

namespace py = pybind11;
namespace ss = spatial_smooth;

namespace {

ss::McmcOptions mcmc_options(std::size_t chains, std::size_t iterations, std::size_t burn_in, std::size_t thin,
                             std::uint64_t seed, std::size_t threads) {
  ss::McmcOptions o;
  o.chains = chains;
  o.iterations = iterations;
  o.burn_in = burn_in;
  o.thin = thin;
  o.seed = seed;
  o.threads = threads;
  return o;
}

ss::Observations observations(const ss::Region& region, const ss::Vector& y, const std::string& family,
                              std::size_t trials) {
  ss::Observations obs;
  obs.family = ss::parse_family(family);
  obs.y = y;
  obs.trials = obs.family == ss::Family::Binomial ? trials : 0;
  obs.log_offset = obs.family == ss::Family::Binomial ? ss::Vector::Zero(y.size()) : region.log_offsets();
  return obs;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Connectivity-based spatial smoothing: regions, splines, MCMC and metrics";

  py::register_exception<ss::Error>(m, "SpatialSmoothError");

  m.def("pseudo_inverse", &ss::pseudo_inverse, py::arg("m"), py::arg("rank_tol") = ss::kDefaultRankTol);
  m.def("double_center", &ss::double_center);
  m.def("sm_surface", &ss::sm_surface, py::arg("x"), py::arg("z"));
  m.def("icar_scaling", &ss::icar_scaling, py::arg("adjacency"));

  py::class_<ss::Region>(m, "Region")
      .def_property_readonly("size", &ss::Region::size)
      .def_property_readonly("adjacency", &ss::Region::adjacency)
      .def_property_readonly("offsets", &ss::Region::offsets)
      .def_property_readonly("ids", [](const ss::Region& r) {
        std::vector<std::int64_t> ids;
        for (const auto& u : r.units()) ids.push_back(u.id);
        return ids;
      })
      .def_property_readonly("centroids", [](const ss::Region& r) {
        ss::Matrix c(static_cast<Eigen::Index>(r.size()), 2);
        for (std::size_t i = 0; i < r.size(); ++i) {
          c(static_cast<Eigen::Index>(i), 0) = r.units()[i].centroid_x;
          c(static_cast<Eigen::Index>(i), 1) = r.units()[i].centroid_y;
        }
        return c;
      });
  m.def("make_grid_region", &ss::make_grid_region, py::arg("rows"), py::arg("cols"), py::arg("pop_min") = 1e4,
        py::arg("pop_max") = 1e6, py::arg("seed") = 7);
  m.def("load_region_csv", &ss::load_region_csv, py::arg("units"), py::arg("adjacency"),
        py::arg("require_connected") = true);

  py::class_<ss::ConnectivityCoords>(m, "ConnectivityCoords")
      .def_readonly("label", &ss::ConnectivityCoords::label)
      .def_property_readonly("points", [](const ss::ConnectivityCoords& c) { return ss::Matrix(c.points); })
      .def_readonly("warnings", &ss::ConnectivityCoords::warnings);
  m.def("scaled_centroids", &ss::scaled_centroids);
  m.def("gravity_flows", [](const ss::Region& r, double gamma) { return ss::gravity_flows(r, gamma).flows; },
        py::arg("region"), py::arg("gamma") = ss::kDefaultGravityGamma);
  m.def("movement_coords",
        [](const ss::Region& r, double gamma, const std::string& transform) {
          return ss::movement_coords(r, gamma, ss::parse_dissimilarity_transform(transform));
        },
        py::arg("region"), py::arg("gamma") = ss::kDefaultGravityGamma, py::arg("transform") = "reciprocal");
  m.def("classical_mds", &ss::classical_mds, py::arg("dissimilarity"), py::arg("dim") = 2, py::arg("label") = "mds");

  py::class_<ss::SmoothBasis>(m, "SmoothBasis")
      .def_readonly("label", &ss::SmoothBasis::label)
      .def_readonly("design", &ss::SmoothBasis::design)
      .def_readonly("penalty", &ss::SmoothBasis::penalty)
      .def_readonly("null_penalty", &ss::SmoothBasis::null_penalty)
      .def_property_readonly("knots", [](const ss::SmoothBasis& b) { return ss::Matrix(b.knots); });
  m.def("make_smooth", &ss::make_smooth, py::arg("coords"), py::arg("k"), py::arg("seed") = 1);

  py::class_<ss::SimDataset>(m, "SimDataset")
      .def_property_readonly("y", [](const ss::SimDataset& d) { return d.obs.y; })
      .def_property_readonly("family", [](const ss::SimDataset& d) { return ss::to_string(d.obs.family); })
      .def_property_readonly("trials", [](const ss::SimDataset& d) { return d.obs.trials; })
      .def_property_readonly("latent", [](const ss::SimDataset& d) { return d.truth.values; })
      .def_property_readonly("variance_shares", [](const ss::SimDataset& d) { return d.truth.variance_shares(); })
      .def_readonly("alpha_true", &ss::SimDataset::alpha_true);
  m.def(
      "simulate",
      [](const ss::Region& region, const std::vector<ss::ConnectivityCoords>& coords, const std::vector<double>& phis,
         double alpha, const std::string& family, std::size_t trials, std::uint64_t seed, const std::string& scaling) {
        const auto field = ss::gen_latent_field(coords, phis, seed, ss::parse_smooth_scaling(scaling));
        return ss::gen_observations(region, field, alpha, ss::parse_family(family), trials, seed);
      },
      py::arg("region"), py::arg("coords"), py::arg("phis"), py::arg("alpha") = 0.0, py::arg("family") = "poisson",
      py::arg("trials") = ss::kDefaultTrials, py::arg("seed") = 1, py::arg("scaling") = "none");

  py::class_<ss::PosteriorSamples>(m, "PosteriorSamples")
      .def_property_readonly("scalar_names", &ss::PosteriorSamples::scalar_names)
      .def_property_readonly("term_labels", &ss::PosteriorSamples::term_labels)
      .def("scalar", &ss::PosteriorSamples::scalar)
      .def("term", &ss::PosteriorSamples::term)
      .def("term_mean", &ss::PosteriorSamples::term_mean)
      .def_property_readonly("loglik", &ss::PosteriorSamples::loglik)
      .def_property_readonly("fitted", &ss::PosteriorSamples::fitted)
      .def_property_readonly("warnings", &ss::PosteriorSamples::warnings);
  m.def(
      "fit_spline",
      [](const ss::Region& region, const ss::Vector& y, const std::vector<ss::SmoothBasis>& terms,
         const std::string& family, std::size_t trials, bool include_iid, std::size_t chains, std::size_t iterations,
         std::size_t burn_in, std::size_t thin, std::uint64_t seed, std::size_t threads) {
        const auto obs = observations(region, y, family, trials);
        ss::ModelOptions options;
        options.likelihood = obs.family;
        options.include_iid = include_iid;
        py::gil_scoped_release release;
        return ss::run_mcmc(ss::build_model(obs, terms, options), obs,
                            mcmc_options(chains, iterations, burn_in, thin, seed, threads));
      },
      py::arg("region"), py::arg("y"), py::arg("terms"), py::arg("family") = "poisson",
      py::arg("trials") = ss::kDefaultTrials, py::arg("include_iid") = true, py::arg("chains") = 2,
      py::arg("iterations") = 5000, py::arg("burn_in") = 2000, py::arg("thin") = 1, py::arg("seed") = 1,
      py::arg("threads") = 1);
  m.def(
      "fit_bym2",
      [](const ss::Region& region, const ss::Vector& y, const std::string& family, std::size_t trials,
         std::size_t chains, std::size_t iterations, std::size_t burn_in, std::size_t thin, std::uint64_t seed,
         std::size_t threads) {
        const auto obs = observations(region, y, family, trials);
        py::gil_scoped_release release;
        return ss::fit_bym2(obs, region, ss::PriorConfig{},
                            mcmc_options(chains, iterations, burn_in, thin, seed, threads));
      },
      py::arg("region"), py::arg("y"), py::arg("family") = "poisson", py::arg("trials") = ss::kDefaultTrials,
      py::arg("chains") = 2, py::arg("iterations") = 5000, py::arg("burn_in") = 2000, py::arg("thin") = 1,
      py::arg("seed") = 1, py::arg("threads") = 1);

  m.def("variance_decomposition", [](const ss::PosteriorSamples& s) {
    py::dict out;
    for (const auto& t : ss::variance_decomposition(s).terms) out[py::str(t.label)] = py::make_tuple(t.mean, t.lo, t.hi);
    return out;
  });
  m.def("waic", [](const ss::Matrix& loglik) {
    const auto w = ss::waic(loglik);
    return py::dict(py::arg("waic") = w.waic, py::arg("p_waic") = w.p_waic, py::arg("lppd") = w.lppd);
  });
  m.def("mae", py::overload_cast<const ss::Vector&, const ss::Vector&>(&ss::mae), py::arg("y"), py::arg("fitted"));
  m.def("auroc", py::overload_cast<const ss::Vector&, const ss::Vector&, std::size_t>(&ss::auroc), py::arg("y"),
        py::arg("p"), py::arg("trials"));
  m.def(
      "brier",
      [](const ss::Vector& y, const ss::Vector& p, std::size_t trials, const std::string& convention) {
        return ss::brier(y, p, trials, ss::parse_brier_convention(convention));
      },
      py::arg("y"), py::arg("p"), py::arg("trials"), py::arg("convention") = "per_trial");
  m.def(
      "rhat_ess",
      [](const std::vector<ss::Vector>& chains) {
        const auto d = ss::rhat_ess(chains);
        return py::make_tuple(d.rhat, d.ess);
      },
      py::arg("chains"));

  m.def(
      "export_field_map",
      [](const ss::Region& region, const ss::Vector& values, const std::filesystem::path& stem,
         const std::string& title) {
        const auto files = ss::export_field_map(region, values, stem, title);
        std::vector<std::filesystem::path> out{files.csv};
        if (files.svg) out.push_back(*files.svg);
        return out;
      },
      py::arg("region"), py::arg("values"), py::arg("stem"), py::arg("title") = "");

  m.def("validate_config", [](const std::filesystem::path& path) { ss::load_config(path).validate(); });
  m.def(
      "run_experiment",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> out) {
        auto config = ss::load_config(path);
        if (out) config.output_dir = *out;
        ss::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = ss::run_experiment(config);
        }
        return py::make_tuple(r.manifest, r.converged);
      },
      py::arg("config"), py::arg("out") = py::none());
}
