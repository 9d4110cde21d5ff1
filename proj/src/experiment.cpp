#include "spatial_smooth/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spatial_smooth/csv.hpp"
#include "spatial_smooth/error.hpp"
#include "spatial_smooth/field_map.hpp"

namespace spatial_smooth {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string dataset_dir(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "dataset_%02zu", index);
  return buf;
}

std::string fmt(double v) { return csv::format_double(v); }

/// Collects artifact paths relative to the output root.
class Artifacts {
 public:
  explicit Artifacts(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  fs::path path(const fs::path& relative) const { return root_ / relative; }

  void add(const fs::path& absolute) { list_.push_back(absolute.lexically_relative(root_)); }
  void add(const FieldMapFiles& files) {
    add(files.csv);
    if (files.svg) add(*files.svg);
  }
  void write(const fs::path& relative, const std::string& content) {
    csv::write_text(path(relative), content);
    list_.push_back(relative);
  }
  const std::vector<fs::path>& list() const { return list_; }

 private:
  fs::path root_;
  std::vector<fs::path> list_;
};

struct FitReport {
  std::string model;
  double max_rhat = 0.0;
  bool converged = true;
  std::vector<std::string> warnings;
};

FitReport report_fit(const std::string& model, const PosteriorSamples& samples,
                     const std::vector<ParameterSummary>& summary, double threshold) {
  FitReport r;
  r.model = model;
  for (const auto& s : summary) {
    if (!std::isfinite(s.rhat) || s.rhat > threshold) r.converged = false;
    if (std::isfinite(s.rhat)) r.max_rhat = std::max(r.max_rhat, s.rhat);
  }
  r.warnings = samples.warnings();
  if (!r.converged) r.warnings.push_back("NOT-CONVERGED: max R-hat above " + fmt(threshold));
  return r;
}

Json fit_json(const FitReport& r) {
  return Json{{"model", r.model}, {"max_rhat", r.max_rhat}, {"converged", r.converged}, {"warnings", r.warnings}};
}

Json config_json(const ExperimentConfig& c) {
  Json echo = Json::object();
  for (const auto& [k, v] : c.echo) echo[k] = v;
  Json effective{{"study", to_string(c.study)},
                 {"seed", c.seed},
                 {"family", to_string(c.family)},
                 {"alpha", c.alpha},
                 {"phi_grid", c.phi_grid},
                 {"iid_weight", c.iid_weight},
                 {"trials", c.trials},
                 {"smooth_scaling", c.smooth_scaling == SmoothScaling::None ? "none" : "unit_variance"},
                 {"knots", c.knots},
                 {"knot_seed", c.knot_seed},
                 {"gamma", c.gamma},
                 {"baseline", c.fit_baseline},
                 {"include_iid", c.include_iid},
                 {"chains", c.mcmc.chains},
                 {"iterations", c.mcmc.iterations},
                 {"burn_in", c.mcmc.burn_in},
                 {"thin", c.mcmc.thin},
                 {"rhat_threshold", c.rhat_threshold}};
  if (c.study == Study::CaseStudy) {
    effective["theta"] = c.theta;
    effective["case_phis"] = c.case_phis;
  }
  return Json{{"file", echo}, {"effective", effective}};
}

std::vector<ConnectivityCoords> study_coords(const ExperimentConfig& c, const Region& region) {
  switch (c.study) {
    case Study::Sim1Distance:
    case Study::Sim3Binomial:
      return {scaled_centroids(region)};
    case Study::Sim1Movement:
      return {build_movement_coords(c, region)};
    default:
      return {scaled_centroids(region), build_movement_coords(c, region)};
  }
}

std::vector<SmoothBasis> study_bases(const ExperimentConfig& c, const std::vector<ConnectivityCoords>& coords) {
  std::vector<SmoothBasis> out;
  for (const auto& cs : coords) out.push_back(make_smooth(cs, c.knots, c.knot_seed));
  return out;
}

SimDataset make_dataset(const ExperimentConfig& c, const Region& region, const std::vector<ConnectivityCoords>& coords,
                        const std::vector<double>& weights, std::uint64_t seed) {
  const auto field = gen_latent_field(coords, weights, seed, c.smooth_scaling);
  if (c.family == Family::NegativeBinomial) return gen_overdispersed_counts(region, field, c.alpha, c.theta, seed);
  return gen_observations(region, field, c.alpha, c.family, c.trials, seed);
}

void write_truth_maps(Artifacts& art, const Region& region, const SimDataset& data, const std::string& dir) {
  art.add(export_field_map(region, data.truth.values, art.path(dir + "/maps/truth_S"), "simulated S"));
  for (const auto& comp : data.truth.components) {
    art.add(export_field_map(region, comp.values, art.path(dir + "/maps/truth_" + comp.label),
                             "simulated component: " + comp.label));
  }
}

std::vector<ParameterSummary> write_fit_outputs(Artifacts& art, const ExperimentConfig& c, const Region& region,
                                                const PosteriorSamples& samples, const std::string& dir,
                                                const std::string& model, const std::vector<std::string>& term_labels) {
  const auto summary = summarize(samples);
  write_summary_csv(summary, art.path(dir + "/" + model + "_summary.csv"));
  art.add(art.path(dir + "/" + model + "_summary.csv"));
  if (c.write_draws) {
    for (const auto& p : write_posterior(samples, term_labels, art.path(dir), model)) art.add(p);
  }
  Vector combined = Vector::Zero(static_cast<Eigen::Index>(region.size()));
  for (const auto& label : samples.term_labels()) {
    const Vector mean = samples.term_mean(label);
    combined += mean;
    art.add(export_field_map(region, mean, art.path(dir + "/maps/" + model + "_" + label),
                             model + " posterior mean: " + label));
  }
  art.add(export_field_map(region, combined, art.path(dir + "/maps/" + model + "_combined"),
                           model + " posterior mean: combined random terms"));
  return summary;
}

std::string decomposition_row(std::size_t index, double phi, const std::string& term, double weight, double share,
                              const TermProportion& est) {
  std::ostringstream os;
  os << index << ',' << fmt(phi) << ',' << term << ',' << fmt(weight) << ',' << fmt(share) << ',' << fmt(est.mean)
     << ',' << fmt(est.lo) << ',' << fmt(est.hi) << '\n';
  return os.str();
}

ExperimentResult finish(const ExperimentConfig& c, Artifacts& art, Json manifest, bool converged,
                        std::vector<std::string> warnings) {
  manifest["status"] = converged ? "CONVERGED" : "NOT-CONVERGED";
  manifest["warnings"] = warnings;
  Json list = Json::array();
  for (const auto& p : art.list()) list.push_back(p.generic_string());
  list.push_back("manifest.json");
  manifest["artifacts"] = list;
  csv::write_text(art.path("manifest.json"), manifest.dump(2) + "\n");

  ExperimentResult r;
  r.manifest = art.path("manifest.json");
  r.converged = converged;
  r.artifacts = art.list();
  r.artifacts.emplace_back("manifest.json");
  r.warnings = std::move(warnings);
  (void)c;
  return r;
}

ExperimentResult run_grid(const ExperimentConfig& c) {
  const Region region = build_region(c);
  const auto coords = study_coords(c, region);
  const auto bases = study_bases(c, coords);
  std::vector<std::string> labels;
  for (const auto& b : bases) labels.push_back(b.label);
  const bool binomial = c.family == Family::Binomial;

  Artifacts art(c.output_dir);
  const std::string poisson_header = "phi_true,model,mae,waic,phi_est_mean,phi_est_lo,phi_est_hi,converged\n";
  const std::string binomial_header = "phi_true,model,auroc,brier,waic,phi_est,converged\n";
  std::string spline_rows = binomial ? binomial_header : poisson_header;
  std::string bym2_rows = spline_rows;
  std::string decomposition = "dataset,phi_true,term,phi_term,derived_share,est_mean,est_lo,est_hi\n";

  Json datasets = Json::array();
  bool converged = true;
  std::vector<std::string> warnings;

  for (std::size_t i = 0; i < c.phi_grid.size(); ++i) {
    const double phi = c.phi_grid[i];
    const auto weights = grid_weights(c, phi);
    const std::uint64_t seed = c.seed + i;
    const std::string dir = dataset_dir(i);
    const SimDataset data = make_dataset(c, region, coords, weights, seed);
    write_dataset_csv(region, data, art.path(dir + "/data.csv"));
    art.add(art.path(dir + "/data.csv"));
    write_truth_maps(art, region, data, dir);

    McmcOptions mcmc = c.mcmc;
    mcmc.seed = seed;
    ModelOptions options;
    options.likelihood = c.family;
    options.include_iid = c.include_iid;
    options.priors = c.priors;
    const auto model = build_model(data.obs, bases, options);
    const auto spline = run_mcmc(model, data.obs, mcmc);
    const auto spline_summary = write_fit_outputs(art, c, region, spline, dir, "spline", labels);
    const auto spline_report = report_fit("spline", spline, spline_summary, c.rhat_threshold);

    const auto shares = data.truth.variance_shares();
    TermProportion est{labels.front(), 0.0, 0.0, 0.0};
    if (spline.term_labels().size() >= 2) {
      const auto vd = variance_decomposition(spline);
      art.write(dir + "/spline_decomposition.txt", format_decomposition(vd));
      est = vd.terms.front();
      for (std::size_t k = 0; k < vd.terms.size() && k < weights.size(); ++k) {
        decomposition += decomposition_row(i, phi, vd.terms[k].label, weights[k], shares[k], vd.terms[k]);
      }
    }
    const auto spline_waic = waic(spline.loglik());
    const std::string flag = spline_report.converged ? "true" : "false";
    if (binomial) {
      spline_rows += fmt(phi) + ",spline," + fmt(auroc(spline, data.obs)) + ',' +
                     fmt(brier(spline, data.obs, c.brier)) + ',' + fmt(spline_waic.waic) + ',' + fmt(est.mean) + ',' +
                     flag + '\n';
    } else {
      spline_rows += fmt(phi) + ",spline," + fmt(mae(spline, data.obs)) + ',' + fmt(spline_waic.waic) + ',' +
                     fmt(est.mean) + ',' + fmt(est.lo) + ',' + fmt(est.hi) + ',' + flag + '\n';
    }

    Json fits = Json::array({fit_json(spline_report)});
    converged = converged && spline_report.converged;
    for (const auto& w : spline_report.warnings) warnings.push_back(dir + " spline: " + w);

    if (c.fit_baseline) {
      const auto bym2 = fit_bym2(data.obs, region, c.priors, mcmc);
      const auto bym2_summary = write_fit_outputs(art, c, region, bym2, dir, "bym2", {});
      const auto bym2_report = report_fit("bym2", bym2, bym2_summary, c.rhat_threshold);
      const Vector phi_draws = bym2.scalar("phi");
      const std::vector<double> pv(phi_draws.data(), phi_draws.data() + phi_draws.size());
      const auto bym2_waic = waic(bym2.loglik());
      const std::string bflag = bym2_report.converged ? "true" : "false";
      if (binomial) {
        bym2_rows += fmt(phi) + ",bym2," + fmt(auroc(bym2, data.obs)) + ',' + fmt(brier(bym2, data.obs, c.brier)) +
                     ',' + fmt(bym2_waic.waic) + ',' + fmt(phi_draws.mean()) + ',' + bflag + '\n';
      } else {
        bym2_rows += fmt(phi) + ",bym2," + fmt(mae(bym2, data.obs)) + ',' + fmt(bym2_waic.waic) + ',' +
                     fmt(phi_draws.mean()) + ',' + fmt(quantile(pv, 0.025)) + ',' + fmt(quantile(pv, 0.975)) + ',' +
                     bflag + '\n';
      }
      fits.push_back(fit_json(bym2_report));
      converged = converged && bym2_report.converged;
      for (const auto& w : bym2_report.warnings) warnings.push_back(dir + " bym2: " + w);
    }

    datasets.push_back(Json{{"index", i},
                            {"directory", dir},
                            {"phi_true", phi},
                            {"weights", weights},
                            {"derived_shares", shares},
                            {"data_seed", seed},
                            {"mcmc_seed", mcmc.seed},
                            {"fits", fits}});
  }

  art.write("metrics_spline.csv", spline_rows);
  if (c.fit_baseline) art.write("metrics_bym2.csv", bym2_rows);
  art.write("decomposition.csv", decomposition);

  Json manifest{{"command", "run"}, {"config", config_json(c)}, {"datasets", datasets}};
  return finish(c, art, std::move(manifest), converged, std::move(warnings));
}

ExperimentResult run_case_study(const ExperimentConfig& c) {
  const Region region = build_region(c);
  const std::vector<ConnectivityCoords> coords{scaled_centroids(region), build_movement_coords(c, region)};
  const auto bases = study_bases(c, coords);
  Artifacts art(c.output_dir);

  Observations obs;
  Json data_json;
  if (!c.counts.empty()) {
    obs = load_counts_csv(region, c.counts, c.family, c.trials);
    data_json = Json{{"source", c.counts.generic_string()}};
  } else {
    const SimDataset data = make_dataset(c, region, coords, c.case_phis, c.seed);
    obs = data.obs;
    write_dataset_csv(region, data, art.path("data.csv"));
    art.add(art.path("data.csv"));
    write_truth_maps(art, region, data, ".");
    data_json = Json{{"source", "synthetic"}, {"weights", c.case_phis}, {"theta", c.theta}, {"data_seed", c.seed}};
  }

  ModelOptions options;
  options.likelihood = c.family;
  options.include_iid = c.include_iid;
  options.priors = c.priors;
  const auto samples = run_mcmc(build_model(obs, bases, options), obs, c.mcmc);
  const auto summary = summarize(samples);
  write_summary_csv(summary, art.path("casestudy_summary.csv"));
  art.add(art.path("casestudy_summary.csv"));
  if (c.write_draws) {
    for (const auto& p : write_posterior(samples, {"distance", "movement"}, art.path("."), "casestudy")) art.add(p);
  }

  // The four maps: distance, movement, unstructured and combined.
  Vector combined = Vector::Zero(static_cast<Eigen::Index>(region.size()));
  for (const auto& label : samples.term_labels()) {
    const Vector mean = samples.term_mean(label);
    combined += mean;
    const std::string name = label == "iid" ? "unstructured" : label;
    art.add(export_field_map(region, mean, art.path("maps/" + name), "posterior mean: " + name));
  }
  art.add(export_field_map(region, combined, art.path("maps/combined"), "posterior mean: combined random terms"));

  const auto vd = variance_decomposition(samples);
  art.write("decomposition.txt", format_decomposition(vd));
  std::string decomposition = "term,est_mean,est_lo,est_hi\n";
  for (const auto& t : vd.terms) decomposition += t.label + ',' + fmt(t.mean) + ',' + fmt(t.lo) + ',' + fmt(t.hi) + '\n';
  art.write("decomposition.csv", decomposition);

  const auto report = report_fit("spline", samples, summary, c.rhat_threshold);
  const auto w = waic(samples.loglik());
  art.write("metrics_casestudy.csv", "model,mae,waic,p_waic,lppd,converged\nspline," + fmt(mae(samples, obs)) + ',' +
                                         fmt(w.waic) + ',' + fmt(w.p_waic) + ',' + fmt(w.lppd) + ',' +
                                         (report.converged ? "true" : "false") + '\n');

  Json manifest{{"command", "run"}, {"config", config_json(c)}, {"data", data_json}, {"fits", Json::array({fit_json(report)})}};
  return finish(c, art, std::move(manifest), report.converged, report.warnings);
}

}  // namespace

Region build_region(const ExperimentConfig& c) {
  if (c.region.source == "csv") return load_region_csv(c.region.units, c.region.adjacency, c.fit_baseline);
  return make_grid_region(c.region.rows, c.region.cols, c.region.pop_min, c.region.pop_max, c.region.seed);
}

ConnectivityCoords build_movement_coords(const ExperimentConfig& c, const Region& region) {
  if (!c.region.flows.empty()) return movement_coords(load_flows_csv(region, c.region.flows), c.dissimilarity);
  return movement_coords(region, c.gamma, c.dissimilarity);
}

std::vector<double> grid_weights(const ExperimentConfig& c, double phi) {
  if (c.study == Study::CaseStudy) return c.case_phis;
  if (is_dual(c.study)) {
    // Clamp the rounding residue so the weights sum to one exactly.
    const double second = std::max(0.0, 1.0 - c.iid_weight - phi);
    return {phi, second, 1.0 - phi - second};
  }
  return {phi, 1.0 - phi};
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  return config.study == Study::CaseStudy ? run_case_study(config) : run_grid(config);
}

ExperimentResult simulate_datasets(const ExperimentConfig& c) {
  c.validate();
  const Region region = build_region(c);
  Artifacts art(c.output_dir);
  Json datasets = Json::array();
  if (c.study == Study::CaseStudy) {
    const std::vector<ConnectivityCoords> coords{scaled_centroids(region), build_movement_coords(c, region)};
    const SimDataset data = make_dataset(c, region, coords, c.case_phis, c.seed);
    write_dataset_csv(region, data, art.path("data.csv"));
    art.add(art.path("data.csv"));
    write_truth_maps(art, region, data, ".");
    datasets.push_back(Json{{"weights", c.case_phis}, {"data_seed", c.seed}});
  } else {
    const auto coords = study_coords(c, region);
    for (std::size_t i = 0; i < c.phi_grid.size(); ++i) {
      const auto weights = grid_weights(c, c.phi_grid[i]);
      const std::string dir = dataset_dir(i);
      const SimDataset data = make_dataset(c, region, coords, weights, c.seed + i);
      write_dataset_csv(region, data, art.path(dir + "/data.csv"));
      art.add(art.path(dir + "/data.csv"));
      write_truth_maps(art, region, data, dir);
      datasets.push_back(Json{{"index", i},
                              {"directory", dir},
                              {"phi_true", c.phi_grid[i]},
                              {"weights", weights},
                              {"derived_shares", data.truth.variance_shares()},
                              {"data_seed", c.seed + i}});
    }
  }
  Json manifest{{"command", "simulate"}, {"config", config_json(c)}, {"datasets", datasets}};
  return finish(c, art, std::move(manifest), true, {});
}

ExperimentResult run_mds(const ExperimentConfig& c) {
  c.validate();
  const Region region = build_region(c);
  Artifacts art(c.output_dir);
  const FlowMatrix flows = c.region.flows.empty() ? gravity_flows(region, c.gamma) : load_flows_csv(region, c.region.flows);
  const Matrix d = flows_to_dissimilarity(flows, c.dissimilarity);
  const auto coords = classical_mds(d, 2, "movement");
  const auto embedding = classical_mds_embedding(d, 2);

  std::ostringstream os;
  os << "id,x,y\n";
  for (std::size_t i = 0; i < region.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    os << region.units()[i].id << ',' << fmt(coords.points(r, 0)) << ',' << fmt(coords.points(r, 1)) << '\n';
  }
  art.write("movement_coords.csv", os.str());
  std::ostringstream ev;
  ev << "index,eigenvalue\n";
  for (Eigen::Index k = 0; k < embedding.eigenvalues.size(); ++k) {
    ev << k + 1 << ',' << fmt(embedding.eigenvalues(k)) << '\n';
  }
  art.write("mds_eigenvalues.csv", ev.str());
  for (std::size_t axis = 0; axis < 2; ++axis) {
    const Vector values = coords.points.col(static_cast<Eigen::Index>(axis));
    art.add(export_field_map(region, values, art.path("maps/movement_axis" + std::to_string(axis + 1)),
                             "movement coordinate " + std::to_string(axis + 1)));
  }
  Json manifest{{"command", "mds"}, {"config", config_json(c)}, {"rank_deficient", embedding.rank_deficient}};
  return finish(c, art, std::move(manifest), true, coords.warnings);
}

}  // namespace spatial_smooth
