#include "spatial_smooth/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "spatial_smooth/csv.hpp"
#include "spatial_smooth/error.hpp"

namespace spatial_smooth {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> grid(double from, double to, double step) {
  std::vector<double> out;
  const auto count = static_cast<int>(std::lround((to - from) / step));
  for (int i = 0; i <= count; ++i) out.push_back(std::round((from + i * step) * 1e12) / 1e12);
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::filesystem::path base) : tree_(tree), base_(std::move(base)) {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw Error(ErrorCode::ConfigError, "key '" + section + "' must be inside a [section]");
      for (const auto& [key, value] : body) keys_.insert(section + "." + key);
    }
  }

  std::optional<std::string> raw(const std::string& key) {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    used_.insert(key);
    return trim(*v);
  }

  void text(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }

  void path(const std::string& key, std::filesystem::path& out) {
    if (auto v = raw(key); v && !v->empty()) {
      const std::filesystem::path p(*v);
      out = p.is_absolute() ? p : base_ / p;
    }
  }

  void number(const std::string& key, double& out) {
    if (auto v = raw(key)) out = parse<double>(key, *v);
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (auto v = raw(key)) {
      const long long x = parse<long long>(key, *v);
      if (x < 0) throw Error(ErrorCode::ConfigError, key + " must be non-negative");
      out = static_cast<Int>(x);
    }
  }

  void flag(const std::string& key, bool& out) {
    if (auto v = raw(key)) {
      if (*v == "true" || *v == "yes" || *v == "1") {
        out = true;
      } else if (*v == "false" || *v == "no" || *v == "0") {
        out = false;
      } else {
        throw Error(ErrorCode::ConfigError, key + ": expected true or false, got '" + *v + "'");
      }
    }
  }

  void list(const std::string& key, std::vector<double>& out) {
    auto v = raw(key);
    if (!v) return;
    out.clear();
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse<double>(key, trim(item)));
  }

  template <class Enum>
  void choice(const std::string& key, Enum& out, Enum (*parser)(const std::string&)) {
    if (auto v = raw(key)) {
      try {
        out = parser(*v);
      } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, key + ": " + e.what());
      }
    }
  }

  void reject_unknown() const {
    for (const auto& k : keys_) {
      if (!used_.count(k)) throw Error(ErrorCode::ConfigError, "unknown configuration key '" + k + "'");
    }
  }

  std::map<std::string, std::string> echo() const {
    std::map<std::string, std::string> out;
    for (const auto& [section, body] : tree_) {
      for (const auto& [key, value] : body) out[section + "." + key] = trim(value.data());
    }
    return out;
  }

 private:
  template <class T>
  static T parse(const std::string& key, const std::string& v) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        return csv::parse_double(v, key);
      } else {
        return csv::parse_int(v, key);
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
  }

  const pt::ptree& tree_;
  std::filesystem::path base_;
  std::set<std::string> keys_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::ConfigError, message);
}

void require_positive(const std::string& name, double v) { require(v > 0.0 && std::isfinite(v), name + " must be positive"); }

}  // namespace

Study parse_study(const std::string& name) {
  if (name == "sim1-distance") return Study::Sim1Distance;
  if (name == "sim1-movement") return Study::Sim1Movement;
  if (name == "sim2-dual") return Study::Sim2Dual;
  if (name == "sim3-binomial") return Study::Sim3Binomial;
  if (name == "sim4-binomial-dual") return Study::Sim4BinomialDual;
  if (name == "casestudy") return Study::CaseStudy;
  throw Error(ErrorCode::ConfigError, "unknown study '" + name + "'");
}

std::string to_string(Study study) {
  switch (study) {
    case Study::Sim1Distance: return "sim1-distance";
    case Study::Sim1Movement: return "sim1-movement";
    case Study::Sim2Dual: return "sim2-dual";
    case Study::Sim3Binomial: return "sim3-binomial";
    case Study::Sim4BinomialDual: return "sim4-binomial-dual";
    case Study::CaseStudy: return "casestudy";
  }
  return "unknown";
}

bool is_dual(Study study) {
  return study == Study::Sim2Dual || study == Study::Sim4BinomialDual || study == Study::CaseStudy;
}

void ExperimentConfig::validate() const {
  const bool binomial_study = study == Study::Sim3Binomial || study == Study::Sim4BinomialDual;
  if (study == Study::CaseStudy) {
    require(family == Family::Poisson || family == Family::NegativeBinomial,
            "casestudy family must be poisson or negbinomial");
    require(case_phis.size() == 3, "case_phis needs three weights (distance, movement, iid)");
    double sum = 0.0;
    for (double p : case_phis) {
      require(p >= 0.0 && p <= 1.0, "case_phis entries must lie in [0, 1]");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-12, "case_phis must sum to 1");
    require_positive("theta", theta);
  } else {
    require(family == (binomial_study ? Family::Binomial : Family::Poisson),
            to_string(study) + " uses the " + (binomial_study ? "binomial" : "poisson") + " family");
    require(!phi_grid.empty(), "phi_grid is empty");
    for (double p : phi_grid) require(p >= 0.0 && p <= 1.0, "phi_grid entries must lie in [0, 1]");
  }
  if (study == Study::Sim2Dual || study == Study::Sim4BinomialDual) {
    const double expected = study == Study::Sim2Dual ? 0.1 : 0.2;
    require(std::abs(iid_weight - expected) <= 1e-12,
            to_string(study) + " holds the iid weight at " + csv::format_double(expected));
    for (double p : phi_grid) require(p <= 1.0 - iid_weight + 1e-12, "phi_grid entries must not exceed 1 - iid_weight");
  }
  if (family == Family::Binomial) require(trials >= 1, "trials must be >= 1");
  require(std::isfinite(alpha) && std::abs(alpha) < 50.0, "alpha must be finite and moderate");

  if (region.source == "grid") {
    require(region.rows >= 2 && region.cols >= 2, "grid needs rows, cols >= 2");
    require(region.pop_min > 0.0 && region.pop_min <= region.pop_max, "need 0 < pop_min <= pop_max");
    require(knots <= region.rows * region.cols, "knots exceed the number of areas");
  } else if (region.source == "csv") {
    require(!region.units.empty() && !region.adjacency.empty(), "csv regions need units and adjacency paths");
    for (const auto& p : {region.units, region.adjacency}) {
      if (!std::filesystem::exists(p)) throw Error(ErrorCode::IoError, "missing input file " + p.string());
    }
  } else {
    throw Error(ErrorCode::ConfigError, "region.source must be grid or csv");
  }
  if (!region.flows.empty() && !std::filesystem::exists(region.flows)) {
    throw Error(ErrorCode::IoError, "missing flows file " + region.flows.string());
  }
  if (!counts.empty() && !std::filesystem::exists(counts)) {
    throw Error(ErrorCode::IoError, "missing counts file " + counts.string());
  }
  require(knots >= 4, "knots must be >= 4");
  require_positive("gamma", gamma);
  require(mcmc.chains >= 2, "at least two chains are needed for convergence diagnostics");
  require(mcmc.iterations > mcmc.burn_in, "iterations must exceed burn_in");
  require(mcmc.thin >= 1, "thin must be >= 1");
  require(mcmc.threads >= 1, "threads must be >= 1");
  require((mcmc.iterations - mcmc.burn_in) / mcmc.thin >= 4, "need at least 4 retained draws per chain");
  require_positive("rhat_threshold", rhat_threshold);
  try {
    priors.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
  }
  Reader r(tree, base_dir);
  ExperimentConfig c;

  std::string study = "sim1-distance";
  r.text("experiment.study", study);
  c.study = parse_study(study);
  r.path("experiment.output_dir", c.output_dir);
  r.integer("experiment.seed", c.seed);

  // Study defaults, overridable below.
  switch (c.study) {
    case Study::Sim1Distance:
    case Study::Sim1Movement:
      c.phi_grid = grid(0.0, 1.0, 0.1);
      break;
    case Study::Sim2Dual:
      c.phi_grid = grid(0.0, 0.9, 0.1);
      c.iid_weight = 0.1;
      break;
    case Study::Sim3Binomial:
      c.phi_grid = grid(0.0, 1.0, 0.1);
      c.family = Family::Binomial;
      break;
    case Study::Sim4BinomialDual:
      c.phi_grid = grid(0.0, 0.8, 0.1);
      c.iid_weight = 0.2;
      c.family = Family::Binomial;
      break;
    case Study::CaseStudy:
      c.phi_grid.clear();
      c.family = Family::NegativeBinomial;
      c.alpha = 2.0;
      break;
  }
  c.fit_baseline = c.study == Study::Sim1Distance || c.study == Study::Sim3Binomial;

  r.text("region.source", c.region.source);
  r.integer("region.rows", c.region.rows);
  r.integer("region.cols", c.region.cols);
  r.number("region.pop_min", c.region.pop_min);
  r.number("region.pop_max", c.region.pop_max);
  r.integer("region.seed", c.region.seed);
  r.path("region.units", c.region.units);
  r.path("region.adjacency", c.region.adjacency);
  r.path("region.flows", c.region.flows);

  r.list("simulation.phi_grid", c.phi_grid);
  r.number("simulation.iid_weight", c.iid_weight);
  r.number("simulation.alpha", c.alpha);
  r.integer("simulation.trials", c.trials);
  r.choice("simulation.smooth_scaling", c.smooth_scaling, &parse_smooth_scaling);
  r.number("simulation.theta", c.theta);
  r.list("simulation.case_phis", c.case_phis);
  r.path("data.counts", c.counts);
  if (c.study == Study::CaseStudy) r.choice("model.family", c.family, &parse_family);

  r.integer("model.knots", c.knots);
  r.integer("model.knot_seed", c.knot_seed);
  r.number("model.gamma", c.gamma);
  r.choice("model.dissimilarity", c.dissimilarity, &parse_dissimilarity_transform);
  r.flag("model.baseline", c.fit_baseline);
  r.flag("model.include_iid", c.include_iid);
  r.choice("metrics.brier", c.brier, &parse_brier_convention);
  r.flag("output.write_draws", c.write_draws);

  r.number("priors.alpha_mean", c.priors.alpha_mean);
  r.number("priors.alpha_sd", c.priors.alpha_sd);
  r.number("priors.smoothing_shape", c.priors.smoothing.shape);
  r.number("priors.smoothing_rate", c.priors.smoothing.rate);
  r.number("priors.iid_shape", c.priors.iid_precision.shape);
  r.number("priors.iid_rate", c.priors.iid_precision.rate);
  r.number("priors.dispersion_rate", c.priors.dispersion_rate);
  r.number("priors.bym2_shape", c.priors.bym2_precision.shape);
  r.number("priors.bym2_rate", c.priors.bym2_precision.rate);

  c.mcmc.seed = c.seed;
  r.integer("mcmc.chains", c.mcmc.chains);
  r.integer("mcmc.iterations", c.mcmc.iterations);
  r.integer("mcmc.burn_in", c.mcmc.burn_in);
  r.integer("mcmc.thin", c.mcmc.thin);
  r.integer("mcmc.threads", c.mcmc.threads);
  r.number("mcmc.rhat_threshold", c.rhat_threshold);

  r.reject_unknown();
  c.echo = r.echo();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace spatial_smooth
