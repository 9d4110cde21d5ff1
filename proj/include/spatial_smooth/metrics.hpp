#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spatial_smooth/inference.hpp"

namespace spatial_smooth {

struct TermProportion {
  std::string label;
  double mean = 0.0;
  double lo = 0.0;  // 2.5% quantile
  double hi = 0.0;  // 97.5% quantile
};

/// Per-draw share var(term_k) / var(sum of terms), summarised across draws.
struct VarianceDecomposition {
  std::vector<TermProportion> terms;
  std::size_t draws = 0;
  std::size_t flagged_draws = 0;  // draws whose total had zero variance

  const TermProportion& at(const std::string& label) const;
};

VarianceDecomposition variance_decomposition(const std::vector<TermDraws>& terms);
VarianceDecomposition variance_decomposition(const PosteriorSamples& samples);

/// One line per term, e.g. `phi_1 (distance) = 0.850, 95% CI: 0.823, 0.876`.
std::string format_decomposition(const VarianceDecomposition& decomposition);

/// Expected response per area: E(y_i) for counts, trials * p_i for binomial fits.
Vector expected_response(const PosteriorSamples& samples);

double mae(const Vector& y, const Vector& fitted);
double mae(const PosteriorSamples& samples, const Observations& obs);

struct WaicResult {
  double waic = 0.0;
  double p_waic = 0.0;
  double lppd = 0.0;
};

WaicResult waic(const Matrix& loglik);

enum class BrierConvention { PerTrial, PerArea };

BrierConvention parse_brier_convention(const std::string& name);

/// `p` holds posterior-mean success probabilities.
double brier(const Vector& y, const Vector& p, std::size_t trials, BrierConvention convention = BrierConvention::PerTrial);
double brier(const PosteriorSamples& samples, const Observations& obs,
             BrierConvention convention = BrierConvention::PerTrial);

/// Each area contributes y_i positives and trials - y_i negatives scored p_i.
double auroc(const Vector& y, const Vector& p, std::size_t trials);
double auroc(const PosteriorSamples& samples, const Observations& obs);

struct ConvergenceDiagnostic {
  std::string name;
  double rhat = 0.0;
  double ess = 0.0;
};

/// Rank-normalised split R-hat and bulk effective sample size of one scalar.
ConvergenceDiagnostic rhat_ess(const std::vector<Vector>& chains, const std::string& name = "");
std::vector<ConvergenceDiagnostic> rhat_ess(const PosteriorSamples& samples);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
  double rhat = 0.0;
  double ess = 0.0;
};

/// Summaries of every scalar parameter across all chains.
std::vector<ParameterSummary> summarize(const PosteriorSamples& samples);

/// `parameter,mean,sd,q2.5,q50,q97.5,rhat,ess`.
void write_summary_csv(const std::vector<ParameterSummary>& summary, const std::filesystem::path& path);

/// One CSV per chain (`<stem>_chain<c>.csv`, scalar parameters then the
/// coefficients of each smooth term) plus `<stem>_meta.txt`. Returns the paths written.
std::vector<std::filesystem::path> write_posterior(const PosteriorSamples& samples, const std::vector<std::string>& term_labels,
                                                   const std::filesystem::path& dir, const std::string& stem);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

}  // namespace spatial_smooth
