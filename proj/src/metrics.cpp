#include "spatial_smooth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "spatial_smooth/csv.hpp"
#include "spatial_smooth/error.hpp"

namespace spatial_smooth {
namespace {

double sample_variance(const Eigen::Ref<const Vector>& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Average ranks (1-based) of the pooled values.
std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double classic_rhat(const std::vector<Vector>& chains) {
  const auto m = static_cast<double>(chains.size());
  const auto n = static_cast<double>(chains.front().size());
  Vector means(chains.size());
  double w = 0.0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    means(static_cast<Eigen::Index>(c)) = chains[c].mean();
    w += sample_variance(chains[c]);
  }
  w /= m;
  const double b = n * sample_variance(means);
  if (w <= 0.0) return b > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double autocovariance(const Vector& x, double mean, Eigen::Index lag) {
  const Eigen::Index n = x.size();
  double s = 0.0;
  for (Eigen::Index i = 0; i + lag < n; ++i) s += (x(i) - mean) * (x(i + lag) - mean);
  return s / static_cast<double>(n);
}

// Multi-chain effective sample size with Geyer's initial monotone sequence.
double geyer_ess(const std::vector<Vector>& chains) {
  const auto m = static_cast<Eigen::Index>(chains.size());
  const Eigen::Index n = chains.front().size();
  std::vector<double> means(static_cast<std::size_t>(m));
  double w = 0.0;
  for (Eigen::Index c = 0; c < m; ++c) {
    means[static_cast<std::size_t>(c)] = chains[static_cast<std::size_t>(c)].mean();
    w += sample_variance(chains[static_cast<std::size_t>(c)]);
  }
  w /= static_cast<double>(m);
  const Vector mv = Eigen::Map<const Vector>(means.data(), m);
  const double b_over_n = m > 1 ? sample_variance(mv) : 0.0;
  const double var_plus = w * static_cast<double>(n - 1) / static_cast<double>(n) + b_over_n;
  if (!(var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  const auto mean_acov = [&](Eigen::Index lag) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < m; ++c) {
      s += autocovariance(chains[static_cast<std::size_t>(c)], means[static_cast<std::size_t>(c)], lag);
    }
    return s / static_cast<double>(m);
  };
  const auto rho_at = [&](Eigen::Index lag) { return 1.0 - (w - mean_acov(lag)) / var_plus; };

  std::vector<double> rho(static_cast<std::size_t>(n) + 2, 0.0);
  rho[0] = 1.0;
  double even = 1.0;
  double odd = n > 1 ? rho_at(1) : 0.0;
  rho[1] = odd;
  Eigen::Index t = 1;
  while (t < n - 5 && std::isfinite(even + odd) && even + odd > 0.0) {
    even = rho_at(t + 1);
    odd = rho_at(t + 2);
    if (even + odd >= 0.0) {
      rho[static_cast<std::size_t>(t + 1)] = even;
      rho[static_cast<std::size_t>(t + 2)] = odd;
    }
    t += 2;
  }
  const auto max_t = static_cast<std::size_t>(t);
  for (std::size_t k = 1; k + 3 <= max_t; k += 2) {
    if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
      rho[k + 1] = 0.5 * (rho[k - 1] + rho[k]);
      rho[k + 2] = rho[k + 1];
    }
  }
  double tau = -1.0;
  for (std::size_t k = 0; k <= max_t; ++k) tau += 2.0 * rho[k];
  tau += rho[max_t + 1];
  const double total = static_cast<double>(m * n);
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

}  // namespace

const TermProportion& VarianceDecomposition::at(const std::string& label) const {
  for (const auto& t : terms) {
    if (t.label == label) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "no term '" + label + "' in the decomposition");
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

VarianceDecomposition variance_decomposition(const std::vector<TermDraws>& terms) {
  if (terms.size() < 2) throw Error(ErrorCode::InvalidArgument, "variance decomposition needs at least two random terms");
  const Eigen::Index draws = terms.front().values.rows();
  const Eigen::Index n = terms.front().values.cols();
  for (const auto& t : terms) {
    if (t.values.rows() != draws || t.values.cols() != n) {
      throw Error(ErrorCode::DimensionError, "random terms have mismatched draw matrices");
    }
  }
  if (draws < 1 || n < 2) throw Error(ErrorCode::InvalidArgument, "need at least one draw of two or more areas");

  std::vector<std::vector<double>> props(terms.size(), std::vector<double>(static_cast<std::size_t>(draws)));
  VarianceDecomposition out;
  out.draws = static_cast<std::size_t>(draws);
  for (Eigen::Index s = 0; s < draws; ++s) {
    Vector total = Vector::Zero(n);
    for (const auto& t : terms) total += t.values.row(s).transpose();
    const double denom = sample_variance(total);
    const bool flagged = !(denom > 0.0);
    if (flagged) ++out.flagged_draws;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      props[k][static_cast<std::size_t>(s)] =
          flagged ? 0.0 : sample_variance(terms[k].values.row(s).transpose()) / denom;
    }
  }
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& p = props[k];
    out.terms.push_back({terms[k].label, std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size()),
                         quantile(p, 0.025), quantile(p, 0.975)});
  }
  return out;
}

VarianceDecomposition variance_decomposition(const PosteriorSamples& samples) {
  std::vector<TermDraws> terms;
  for (const auto& label : samples.term_labels()) terms.push_back({label, samples.term(label)});
  return variance_decomposition(terms);
}

std::string format_decomposition(const VarianceDecomposition& d) {
  std::ostringstream os;
  for (std::size_t k = 0; k < d.terms.size(); ++k) {
    const auto& t = d.terms[k];
    os << "phi_" << k + 1 << " (" << t.label << ") = " << fixed(t.mean, 3) << ", 95% CI: " << fixed(t.lo, 3) << ", "
       << fixed(t.hi, 3) << "\n";
  }
  if (d.flagged_draws > 0) os << "flagged draws with zero total variance: " << d.flagged_draws << "\n";
  return os.str();
}

Vector expected_response(const PosteriorSamples& samples) {
  Vector fitted = samples.fitted();
  if (samples.likelihood == Family::Binomial) fitted *= static_cast<double>(samples.trials);
  return fitted;
}

double mae(const Vector& y, const Vector& fitted) {
  if (y.size() != fitted.size() || y.size() == 0) throw Error(ErrorCode::DimensionError, "mae: length mismatch");
  return (y - fitted).cwiseAbs().mean();
}

double mae(const PosteriorSamples& samples, const Observations& obs) { return mae(obs.y, expected_response(samples)); }

WaicResult waic(const Matrix& loglik) {
  if (loglik.rows() < 2) throw Error(ErrorCode::InvalidArgument, "waic needs at least two draws");
  if (!loglik.allFinite()) throw Error(ErrorCode::NumericalError, "waic: non-finite log-likelihood");
  WaicResult r;
  const auto s = static_cast<double>(loglik.rows());
  for (Eigen::Index i = 0; i < loglik.cols(); ++i) {
    const auto col = loglik.col(i);
    const double top = col.maxCoeff();
    r.lppd += top + std::log((col.array() - top).exp().sum() / s);
    r.p_waic += sample_variance(col);
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  if (!std::isfinite(r.waic)) throw Error(ErrorCode::NumericalError, "waic is not finite");
  return r;
}

BrierConvention parse_brier_convention(const std::string& name) {
  if (name == "per_trial") return BrierConvention::PerTrial;
  if (name == "per_area") return BrierConvention::PerArea;
  throw Error(ErrorCode::InvalidArgument, "unknown Brier convention '" + name + "' (per_trial | per_area)");
}

double brier(const Vector& y, const Vector& p, std::size_t trials, BrierConvention convention) {
  if (y.size() != p.size() || y.size() == 0) throw Error(ErrorCode::DimensionError, "brier: length mismatch");
  const auto t = static_cast<double>(trials);
  if (convention == BrierConvention::PerArea) return ((y / t) - p).squaredNorm() / static_cast<double>(y.size());
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    s += y(i) * (1.0 - p(i)) * (1.0 - p(i)) + (t - y(i)) * p(i) * p(i);
  }
  return s / (static_cast<double>(y.size()) * t);
}

double brier(const PosteriorSamples& samples, const Observations& obs, BrierConvention convention) {
  if (samples.likelihood != Family::Binomial || obs.family != Family::Binomial) {
    throw Error(ErrorCode::WrongFamily, "Brier score needs a binomial dataset and fit");
  }
  return brier(obs.y, samples.fitted(), obs.trials, convention);
}

double auroc(const Vector& y, const Vector& p, std::size_t trials) {
  if (y.size() != p.size() || y.size() == 0) throw Error(ErrorCode::DimensionError, "auroc: length mismatch");
  const auto t = static_cast<double>(trials);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(y.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p(a) < p(b); });
  double positives = y.sum();
  double negatives = t * static_cast<double>(y.size()) - positives;
  if (positives <= 0.0 || negatives <= 0.0) throw Error(ErrorCode::UndefinedAUROC, "all outcomes are in one class");
  double neg_below = 0.0;
  double wins = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double pos_group = 0.0;
    double neg_group = 0.0;
    while (j < order.size() && p(order[j]) == p(order[i])) {
      pos_group += y(order[j]);
      neg_group += t - y(order[j]);
      ++j;
    }
    wins += pos_group * (neg_below + 0.5 * neg_group);
    neg_below += neg_group;
    i = j;
  }
  return wins / (positives * negatives);
}

double auroc(const PosteriorSamples& samples, const Observations& obs) {
  if (samples.likelihood != Family::Binomial || obs.family != Family::Binomial) {
    throw Error(ErrorCode::WrongFamily, "AUROC needs a binomial dataset and fit");
  }
  return auroc(obs.y, samples.fitted(), obs.trials);
}

ConvergenceDiagnostic rhat_ess(const std::vector<Vector>& chains, const std::string& name) {
  if (chains.size() < 2) throw Error(ErrorCode::InvalidArgument, "convergence diagnostics need at least two chains");
  const Eigen::Index n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw Error(ErrorCode::DimensionError, "chains differ in length");
  }
  if (n < 4) throw Error(ErrorCode::TooShort, "chains need at least 4 draws");

  // Split each chain in half, then rank-normalise the pooled draws.
  const Eigen::Index half = n / 2;
  const Eigen::Index offset = n - half;  // drops the middle draw for odd lengths
  std::vector<double> pooled;
  for (const auto& c : chains) {
    pooled.insert(pooled.end(), c.data(), c.data() + half);
    pooled.insert(pooled.end(), c.data() + offset, c.data() + n);
  }
  const auto ranks = average_ranks(pooled);
  const boost::math::normal_distribution<double> normal;
  const auto total = static_cast<double>(pooled.size());
  std::vector<Vector> split(2 * chains.size(), Vector(half));
  for (std::size_t k = 0; k < pooled.size(); ++k) {
    const double z = boost::math::quantile(normal, (ranks[k] - 0.375) / (total + 0.25));
    split[k / static_cast<std::size_t>(half)](static_cast<Eigen::Index>(k % static_cast<std::size_t>(half))) = z;
  }
  return {name, classic_rhat(split), geyer_ess(split)};
}

std::vector<ConvergenceDiagnostic> rhat_ess(const PosteriorSamples& samples) {
  std::vector<ConvergenceDiagnostic> out;
  for (const auto& name : samples.scalar_names()) {
    std::vector<Vector> chains;
    for (const auto& c : samples.chains) chains.emplace_back(c.scalars.col(c.scalar_index(name)));
    out.push_back(rhat_ess(chains, name));
  }
  return out;
}

std::vector<ParameterSummary> summarize(const PosteriorSamples& samples) {
  std::vector<ParameterSummary> out;
  const bool diagnostics = samples.chains.size() >= 2 && samples.chains.front().draws() >= 4;
  for (const auto& name : samples.scalar_names()) {
    const Vector all = samples.scalar(name);
    const std::vector<double> v(all.data(), all.data() + all.size());
    ParameterSummary s;
    s.name = name;
    s.mean = all.mean();
    s.sd = all.size() > 1 ? std::sqrt(sample_variance(all)) : 0.0;
    s.q025 = quantile(v, 0.025);
    s.q500 = quantile(v, 0.5);
    s.q975 = quantile(v, 0.975);
    s.rhat = std::numeric_limits<double>::quiet_NaN();
    s.ess = std::numeric_limits<double>::quiet_NaN();
    if (diagnostics) {
      std::vector<Vector> chains;
      for (const auto& c : samples.chains) chains.emplace_back(c.scalars.col(c.scalar_index(name)));
      const auto d = rhat_ess(chains, name);
      s.rhat = d.rhat;
      s.ess = d.ess;
    }
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(const std::vector<ParameterSummary>& summary, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "parameter,mean,sd,q2.5,q50,q97.5,rhat,ess\n";
  for (const auto& s : summary) {
    os << s.name;
    for (double v : {s.mean, s.sd, s.q025, s.q500, s.q975, s.rhat, s.ess}) os << ',' << csv::format_double(v);
    os << '\n';
  }
  csv::write_text(path, os.str());
}

std::vector<std::filesystem::path> write_posterior(const PosteriorSamples& samples,
                                                   const std::vector<std::string>& term_labels,
                                                   const std::filesystem::path& dir, const std::string& stem) {
  std::vector<std::filesystem::path> written;
  for (std::size_t c = 0; c < samples.chains.size(); ++c) {
    const auto& chain = samples.chains[c];
    std::ostringstream os;
    std::vector<std::string> header = chain.scalar_names;
    for (std::size_t k = 0; k < chain.betas.size(); ++k) {
      const std::string label = k < term_labels.size() ? term_labels[k] : "term" + std::to_string(k);
      for (Eigen::Index j = 0; j < chain.betas[k].cols(); ++j) {
        header.push_back("beta_" + label + "[" + std::to_string(j + 1) + "]");
      }
    }
    for (std::size_t h = 0; h < header.size(); ++h) os << (h ? "," : "") << header[h];
    os << '\n';
    for (Eigen::Index s = 0; s < chain.scalars.rows(); ++s) {
      bool first = true;
      const auto put = [&](double v) {
        os << (first ? "" : ",") << csv::format_double(v);
        first = false;
      };
      for (Eigen::Index j = 0; j < chain.scalars.cols(); ++j) put(chain.scalars(s, j));
      for (const auto& b : chain.betas) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) put(b(s, j));
      }
      os << '\n';
    }
    const auto path = dir / (stem + "_chain" + std::to_string(c + 1) + ".csv");
    csv::write_text(path, os.str());
    written.push_back(path);
  }

  std::ostringstream meta;
  meta << "seed = " << samples.options.seed << "\n"
       << "chains = " << samples.options.chains << "\n"
       << "iterations = " << samples.options.iterations << "\n"
       << "burn_in = " << samples.options.burn_in << "\n"
       << "thin = " << samples.options.thin << "\n"
       << "likelihood = " << to_string(samples.likelihood) << "\n";
  for (std::size_t c = 0; c < samples.chains.size(); ++c) {
    for (const auto& [name, rate] : samples.chains[c].acceptance) {
      meta << "acceptance.chain" << c + 1 << "." << name << " = " << fixed(rate, 4) << "\n";
    }
  }
  for (const auto& w : samples.warnings()) meta << "warning = " << w << "\n";
  const auto meta_path = dir / (stem + "_meta.txt");
  csv::write_text(meta_path, meta.str());
  written.push_back(meta_path);
  return written;
}

}  // namespace spatial_smooth
