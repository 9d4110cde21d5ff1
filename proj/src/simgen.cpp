#include "spatial_smooth/simgen.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "spatial_smooth/csv.hpp"
#include "spatial_smooth/error.hpp"
#include "spatial_smooth/rng.hpp"

namespace spatial_smooth {
namespace {

constexpr double kSigmaX = 0.3;
constexpr double kSigmaZ = 0.4;
constexpr double kMaxLinearPredictor = 700.0;

double sample_variance(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

double logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void check_overflow(const Vector& eta) {
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (!(eta(i) <= kMaxLinearPredictor)) {
      throw Error(ErrorCode::FieldOverflow, "alpha + S at area " + std::to_string(i) + " is " + std::to_string(eta(i)));
    }
  }
}

}  // namespace

double sm_surface(double x, double z) {
  const double sx2 = kSigmaX * kSigmaX;
  const double sz2 = kSigmaZ * kSigmaZ;
  const double first = 1.2 * std::exp(-(x - 0.2) * (x - 0.2) / sx2 - (z - 0.3) * (z - 0.3) / sz2);
  const double second = 0.8 * std::exp(-(x - 0.7) * (x - 0.7) / sx2 - (z - 0.8) * (z - 0.8) / sz2);
  return std::numbers::pi * kSigmaX * kSigmaZ * (first + second);
}

Family parse_family(const std::string& name) {
  if (name == "poisson") return Family::Poisson;
  if (name == "binomial") return Family::Binomial;
  if (name == "negbinomial") return Family::NegativeBinomial;
  throw Error(ErrorCode::InvalidArgument, "unknown family '" + name + "'");
}

std::string to_string(Family family) {
  switch (family) {
    case Family::Poisson: return "poisson";
    case Family::Binomial: return "binomial";
    case Family::NegativeBinomial: return "negbinomial";
  }
  return "unknown";
}

SmoothScaling parse_smooth_scaling(const std::string& name) {
  if (name == "none") return SmoothScaling::None;
  if (name == "unit_variance") return SmoothScaling::UnitVariance;
  throw Error(ErrorCode::InvalidArgument, "unknown smooth scaling '" + name + "'");
}

const LatentComponent& LatentField::component(const std::string& label) const {
  for (const auto& c : components) {
    if (c.label == label) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "no latent component '" + label + "'");
}

std::vector<double> LatentField::variance_shares() const {
  std::vector<double> parts;
  double total = 0.0;
  for (const auto& c : components) {
    const double var = c.label == "iid" ? 1.0 : sample_variance(c.values);
    parts.push_back(c.weight * var);
    total += parts.back();
  }
  for (auto& p : parts) p = total > 0 ? p / total : 0.0;
  return parts;
}

LatentField gen_latent_field(std::span<const ConnectivityCoords> coord_sets, std::span<const double> phis,
                             std::uint64_t seed, SmoothScaling scaling) {
  if (phis.size() != coord_sets.size() + 1) {
    throw Error(ErrorCode::InvalidMixing, "expected " + std::to_string(coord_sets.size() + 1) + " mixing weights, got " +
                                              std::to_string(phis.size()));
  }
  double total = 0.0;
  for (const double phi : phis) {
    if (!(phi >= 0.0) || !std::isfinite(phi)) throw Error(ErrorCode::InvalidMixing, "mixing weights must be >= 0");
    total += phi;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidMixing, "mixing weights sum to " + csv::format_double(total) + ", not 1");
  }
  if (coord_sets.empty() && phis.empty()) throw Error(ErrorCode::InvalidMixing, "no components");

  Eigen::Index n = -1;
  for (const auto& coords : coord_sets) {
    if (n >= 0 && coords.points.rows() != n) throw Error(ErrorCode::DimensionError, "coordinate sets differ in size");
    n = coords.points.rows();
  }
  if (n < 0) throw Error(ErrorCode::InvalidMixing, "at least one coordinate set is required");

  LatentField field;
  field.values = Vector::Zero(n);
  for (std::size_t k = 0; k < coord_sets.size(); ++k) {
    const auto& pts = coord_sets[k].points;
    Vector values(n);
    for (Eigen::Index i = 0; i < n; ++i) values(i) = sm_surface(pts(i, 0), pts(i, 1));
    values.array() -= values.mean();
    if (scaling == SmoothScaling::UnitVariance) {
      const double sd = std::sqrt(sample_variance(values));
      if (sd > 0) values /= sd;
    }
    field.components.push_back({coord_sets[k].label, phis[k], std::move(values)});
  }
  auto rng = make_rng(seed, 1);
  Vector noise(n);
  for (Eigen::Index i = 0; i < n; ++i) noise(i) = std_normal(rng);
  field.components.push_back({"iid", phis.back(), std::move(noise)});

  for (const auto& c : field.components) field.values += std::sqrt(c.weight) * c.values;
  return field;
}

SimDataset gen_observations(const Region& region, const LatentField& field, double alpha, Family family,
                            std::size_t trials, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(region.size());
  if (field.values.size() != n) throw Error(ErrorCode::DimensionError, "field size does not match region");
  const Vector eta = (field.values.array() + alpha).matrix();

  SimDataset data;
  data.truth = field;
  data.alpha_true = alpha;
  data.seed = seed;
  data.obs.family = family;
  data.obs.y.resize(n);
  auto rng = make_rng(seed, 2);
  switch (family) {
    case Family::Poisson: {
      check_overflow(eta);
      data.obs.log_offset = region.log_offsets();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = region.offsets()(i) * std::exp(eta(i));
        data.obs.y(i) = static_cast<double>(boost::random::poisson_distribution<long long, double>(mean)(rng));
      }
      break;
    }
    case Family::Binomial: {
      if (trials < 1) throw Error(ErrorCode::InvalidArgument, "binomial data needs trials >= 1");
      data.obs.trials = trials;
      data.obs.log_offset = Vector::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        boost::random::binomial_distribution<long long, double> draw(static_cast<long long>(trials), logistic(eta(i)));
        data.obs.y(i) = static_cast<double>(draw(rng));
      }
      break;
    }
    case Family::NegativeBinomial:
      throw Error(ErrorCode::InvalidArgument, "use gen_overdispersed_counts for overdispersed counts");
  }
  return data;
}

SimDataset gen_overdispersed_counts(const Region& region, const LatentField& field, double alpha, double theta,
                                    std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(region.size());
  if (field.values.size() != n) throw Error(ErrorCode::DimensionError, "field size does not match region");
  if (!(theta > 0.0)) throw Error(ErrorCode::InvalidArgument, "theta must be positive");
  const Vector eta = (field.values.array() + alpha).matrix();
  check_overflow(eta);

  SimDataset data;
  data.truth = field;
  data.alpha_true = alpha;
  data.theta_true = theta;
  data.seed = seed;
  data.obs.family = Family::NegativeBinomial;
  data.obs.log_offset = region.log_offsets();
  data.obs.y.resize(n);
  auto rng = make_rng(seed, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = region.offsets()(i) * std::exp(eta(i)) * gamma_rate(rng, theta, theta);
    data.obs.y(i) = static_cast<double>(boost::random::poisson_distribution<long long, double>(mean)(rng));
  }
  return data;
}

void write_dataset_csv(const Region& region, const SimDataset& data, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "id,y,offset,S_true";
  for (const auto& c : data.truth.components) out << ",component_" << c.label;
  out << '\n';
  for (std::size_t i = 0; i < region.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out << region.units()[i].id << ',' << csv::format_double(data.obs.y(row)) << ','
        << csv::format_double(region.offsets()(row)) << ',' << csv::format_double(data.truth.values(row));
    for (const auto& c : data.truth.components) out << ',' << csv::format_double(c.values(row));
    out << '\n';
  }
  csv::write_text(path, out.str());
}

Observations load_counts_csv(const Region& region, const std::filesystem::path& path, Family family,
                             std::size_t trials) {
  std::unordered_map<std::int64_t, Eigen::Index> index;
  for (std::size_t i = 0; i < region.size(); ++i) index.emplace(region.units()[i].id, static_cast<Eigen::Index>(i));
  const auto table = csv::read(path);
  const auto c_id = table.column("id");
  const auto c_y = table.column("y");
  const auto n = static_cast<Eigen::Index>(region.size());
  Observations obs;
  obs.family = family;
  obs.y = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  obs.trials = family == Family::Binomial ? trials : 0;
  obs.log_offset = family == Family::Binomial ? Vector::Zero(n) : region.log_offsets();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string ctx = path.string() + " row " + std::to_string(r + 1);
    const auto it = index.find(csv::parse_int(table.rows[r][c_id], ctx));
    if (it == index.end()) throw Error(ErrorCode::IoError, ctx + ": unknown unit id");
    const double y = csv::parse_double(table.rows[r][c_y], ctx);
    if (!(y >= 0.0) || y != std::floor(y)) throw Error(ErrorCode::IoError, ctx + ": y must be a non-negative integer");
    if (family == Family::Binomial && y > static_cast<double>(trials)) {
      throw Error(ErrorCode::IoError, ctx + ": y exceeds the number of trials");
    }
    obs.y(it->second) = y;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(obs.y(i))) {
      throw Error(ErrorCode::IoError, path.string() + ": no count for unit " + std::to_string(region.units()[i].id));
    }
  }
  return obs;
}

}  // namespace spatial_smooth
