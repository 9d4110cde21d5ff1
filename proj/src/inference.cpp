#include "spatial_smooth/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <set>
#include <thread>

#include "spatial_smooth/error.hpp"

namespace spatial_smooth {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;
// Chains draw from streams disjoint from the data generators.
constexpr std::uint64_t kChainStreamBase = 0x100;

double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// Per-observation log-likelihood with the y-only constants cached.
class Likelihood {
 public:
  Likelihood(Family family, const Observations& obs, const Vector& log_offset)
      : family_(family), y_(obs.y), offset_(log_offset), trials_(static_cast<double>(obs.trials)) {
    constant_.resize(y_.size());
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double y = y_(i);
      constant_(i) = family_ == Family::Binomial
                         ? std::lgamma(trials_ + 1.0) - std::lgamma(y + 1.0) - std::lgamma(trials_ - y + 1.0)
                         : -std::lgamma(y + 1.0);
    }
  }

  Eigen::Index size() const { return y_.size(); }

  double operator()(Eigen::Index i, double eta, double theta) const {
    const double y = y_(i);
    switch (family_) {
      case Family::Poisson: {
        const double log_mu = offset_(i) + eta;
        return constant_(i) + y * log_mu - std::exp(log_mu);
      }
      case Family::NegativeBinomial: {
        const double log_mu = offset_(i) + eta;
        const double log_theta = std::log(theta);
        const double a = std::max(log_theta, log_mu);
        const double log_sum = a + std::log(std::exp(log_theta - a) + std::exp(log_mu - a));
        return constant_(i) + std::lgamma(y + theta) - std::lgamma(theta) + theta * log_theta + y * log_mu -
               (y + theta) * log_sum;
      }
      case Family::Binomial:
        return constant_(i) + y * eta - trials_ * log1p_exp(eta);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  double total(const Vector& eta, double theta) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) s += (*this)(i, eta(i), theta);
    return s;
  }

  /// Approximate negative second derivative of the log-likelihood at the
  /// data-implied linear predictor.
  double curvature_guess(Eigen::Index i) const {
    const double y = y_(i);
    if (family_ == Family::Binomial) return std::max(y * (trials_ - y) / trials_, 0.25);
    return y + 0.5;
  }

  /// Mean response for a linear predictor: E(y) for counts, p for binomial.
  double response(Eigen::Index i, double eta) const {
    return family_ == Family::Binomial ? logistic(eta) : std::exp(offset_(i) + eta);
  }

 private:
  Family family_;
  const Vector& y_;
  const Vector& offset_;
  double trials_;
  Vector constant_;
};

double initial_intercept(const ModelSpec& model, const Observations& obs) {
  const double total = obs.y.sum();
  double alpha = 0.0;
  if (model.likelihood == Family::Binomial) {
    const double p = total / (static_cast<double>(obs.size()) * static_cast<double>(model.trials));
    alpha = std::log(p / (1.0 - p));
  } else {
    alpha = std::log(total / model.log_offset.array().exp().sum());
  }
  if (!std::isfinite(alpha)) {
    throw Error(ErrorCode::InitializationError,
                "initial intercept is not finite (all-zero or all-success data cannot be fitted)");
  }
  return alpha;
}

/// Coordinates gamma with beta = transform * gamma such that
/// beta' P1 beta = |gamma_range|^2 and beta' P0 beta = |gamma_null|^2.
struct WhitenedTerm {
  Matrix transform;
  Eigen::Index range_dim = 0;
  Eigen::Index null_dim = 0;
  Eigen::Index offset = 0;  // first column in the stacked design
};

WhitenedTerm whiten(const SmoothBasis& basis) {
  const auto eig = sym_eigen(basis.penalty);
  const Eigen::Index k = eig.values.size();
  const double top = std::max(eig.values(0), 0.0);
  Eigen::Index range = 0;
  while (range < k && eig.values(range) > 1e-10 * top && eig.values(range) > 0) ++range;

  const Matrix range_vectors = eig.vectors.leftCols(range);
  const Matrix null_vectors = eig.vectors.rightCols(k - range);
  const double p0_norm = std::max(1.0, basis.null_penalty.cwiseAbs().maxCoeff());
  if (range > 0 && (basis.null_penalty * range_vectors).cwiseAbs().maxCoeff() > 1e-8 * p0_norm) {
    throw Error(ErrorCode::IncompatibleSpec, "null-space penalty of '" + basis.label +
                                                 "' must vanish on the range of the wiggliness penalty");
  }
  WhitenedTerm out;
  out.range_dim = range;
  out.null_dim = k - range;
  out.transform = Matrix::Zero(k, k);
  out.transform.leftCols(range) =
      range_vectors * eig.values.head(range).cwiseSqrt().cwiseInverse().asDiagonal();
  if (k > range) {
    Matrix restricted = null_vectors.transpose() * basis.null_penalty * null_vectors;
    restricted = 0.5 * (restricted + restricted.transpose());
    const auto null_eig = sym_eigen(restricted);
    if (!(null_eig.values.minCoeff() > 1e-10)) {
      throw Error(ErrorCode::IncompatibleSpec, "penalties of '" + basis.label + "' do not sum to a definite matrix");
    }
    out.transform.rightCols(k - range) =
        null_vectors * null_eig.vectors * null_eig.values.cwiseSqrt().cwiseInverse().asDiagonal();
  }
  return out;
}

struct WindowBookkeeping {
  std::size_t stalled_windows = 0;
  std::set<std::string> stalled_names;

  void note(bool stalled, const std::string& name) {
    if (!stalled) return;
    ++stalled_windows;
    if (stalled_names.size() < 5) stalled_names.insert(name);
  }

  void report(std::vector<std::string>& warnings) const {
    if (stalled_windows == 0) return;
    std::string names;
    for (const auto& n : stalled_names) names += (names.empty() ? "" : ", ") + n;
    warnings.push_back("AdaptationStalled: " + std::to_string(stalled_windows) +
                       " burn-in windows accepted nothing (e.g. " + names + ")");
  }
};

std::size_t retained_draws(const McmcOptions& o) { return (o.iterations - o.burn_in + o.thin - 1) / o.thin; }

/// Shared machinery: the per-area linear predictors eta_i updated one at a
/// time by adaptive random-walk Metropolis against
/// loglik_i(eta_i) - (eta_i - mean_i)^2 / (2 variance).
class LatentPredictor {
 public:
  LatentPredictor(const Likelihood& lik, double initial, double theta)
      : lik_(lik), eta_(Vector::Constant(lik.size(), initial)), loglik_(lik.size()), curvature_(lik.size()) {
    scales_.assign(static_cast<std::size_t>(lik.size()), AdaptiveScale(2.0, kTargetScalarAcceptance));
    for (Eigen::Index i = 0; i < lik.size(); ++i) curvature_(i) = lik.curvature_guess(i);
    refresh(theta);
  }

  const Vector& eta() const { return eta_; }
  const Vector& loglik() const { return loglik_; }

  void refresh(double theta) {
    for (Eigen::Index i = 0; i < eta_.size(); ++i) loglik_(i) = lik_(i, eta_(i), theta);
  }

  void set(const Vector& eta, const Vector& loglik) {
    eta_ = eta;
    loglik_ = loglik;
  }

  void sweep(const Vector& mean, double variance, double theta, Rng& rng) {
    const double half_prec = 0.5 / variance;
    for (Eigen::Index i = 0; i < eta_.size(); ++i) {
      auto& scale = scales_[static_cast<std::size_t>(i)];
      const double current = eta_(i);
      // Step relative to a rough conditional standard deviation, so the tuned
      // multiplier survives large moves of the prior variance.
      const double sd = 1.0 / std::sqrt(1.0 / variance + curvature_(i));
      const double proposal = current + scale.scale() * sd * std_normal(rng);
      const double ll_new = lik_(i, proposal, theta);
      const double d_old = current - mean(i);
      const double d_new = proposal - mean(i);
      const double log_ratio = ll_new - loglik_(i) - half_prec * (d_new * d_new - d_old * d_old);
      const bool accept = std::isfinite(ll_new) && std::log(uniform01(rng)) < log_ratio;
      if (accept) {
        eta_(i) = proposal;
        loglik_(i) = ll_new;
      }
      scale.record(accept);
    }
  }

  void end_window(WindowBookkeeping& book) {
    for (std::size_t i = 0; i < scales_.size(); ++i) book.note(scales_[i].end_window(), "eta[" + std::to_string(i) + "]");
  }

  void freeze() {
    for (auto& s : scales_) s.reset_counts();
  }

  double mean_acceptance() const {
    double s = 0.0;
    for (const auto& sc : scales_) s += sc.acceptance_rate();
    return scales_.empty() ? 0.0 : s / static_cast<double>(scales_.size());
  }

 private:
  const Likelihood& lik_;
  Vector eta_;
  Vector loglik_;
  Vector curvature_;
  std::vector<AdaptiveScale> scales_;
};

/// Random-walk update of the negative-binomial size on the log scale.
bool update_dispersion(const Likelihood& lik, const Vector& eta, Vector& loglik, double& theta, double prior_rate,
                       AdaptiveScale& scale, Rng& rng) {
  const double proposal = theta * std::exp(scale.scale() * std_normal(rng));
  Vector candidate(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) candidate(i) = lik(i, eta(i), proposal);
  // Exponential prior plus the log-scale Jacobian.
  const double log_ratio = candidate.sum() - loglik.sum() - prior_rate * (proposal - theta) +
                           std::log(proposal) - std::log(theta);
  const bool accept = std::isfinite(log_ratio) && std::log(uniform01(rng)) < log_ratio;
  if (accept) {
    theta = proposal;
    loglik = candidate;
  }
  scale.record(accept);
  return accept;
}

// ---------------------------------------------------------------------------
// Spline-structured models: eta = alpha + sum_k X_k beta_k + v.

class SplineChain {
 public:
  SplineChain(const ModelSpec& model, const Observations& obs, const McmcOptions& options, std::size_t chain)
      : model_(model),
        options_(options),
        rng_(make_rng(options.seed, kChainStreamBase + chain)),
        lik_(model.likelihood, obs, model.log_offset),
        n_(static_cast<Eigen::Index>(model.size())) {
    Eigen::Index p = 1;
    for (const auto& basis : model.smooth_terms) {
      terms_.push_back(whiten(basis));
      terms_.back().offset = p;
      p += static_cast<Eigen::Index>(basis.dim());
    }
    design_ = Matrix(n_, p);
    design_.col(0).setOnes();
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      design_.middleCols(t.offset, t.transform.cols()) = model.smooth_terms[k].design * t.transform;
    }
    gram_ = design_.transpose() * design_;

    coef_ = Vector::Zero(p);
    coef_(0) = initial_intercept(model, obs);
    lambda_range_.assign(terms_.size(), 1.0);
    lambda_null_.assign(terms_.size(), 1.0);
    mean_ = design_ * coef_;
    if (model.include_iid) {
      latent_.emplace(lik_, coef_(0), theta_);
    } else {
      loglik_.resize(n_);
      for (Eigen::Index i = 0; i < n_; ++i) loglik_(i) = lik_(i, mean_(i), theta_);
    }
    for (Eigen::Index start = 0, remaining = p; remaining > 0;) {
      const Eigen::Index blocks = (remaining + static_cast<Eigen::Index>(kMaxBlockSize) - 1) /
                                  static_cast<Eigen::Index>(kMaxBlockSize);
      const Eigen::Index len = (remaining + blocks - 1) / blocks;
      block_ranges_.emplace_back(start, len);
      blocks_.emplace_back(static_cast<std::size_t>(len), 0.05);
      start += len;
      remaining -= len;
    }
    const double initial = log_target_check();
    if (!std::isfinite(initial)) throw Error(ErrorCode::InitializationError, "initial log posterior is not finite");
    scale_iid_ = AdaptiveScale(0.3);
    scale_theta_ = AdaptiveScale(0.2);
    scale_range_.assign(terms_.size(), AdaptiveScale(0.5));
    scale_null_.assign(terms_.size(), AdaptiveScale(0.5));
    collapsed_range_.assign(terms_.size(), AdaptiveScale(1.0));
    collapsed_null_.assign(terms_.size(), AdaptiveScale(1.0));
  }

  ChainSamples run() {
    ChainSamples out;
    out.scalar_names.push_back("alpha");
    for (const auto& basis : model_.smooth_terms) {
      out.scalar_names.push_back("lambda1_" + basis.label);
      out.scalar_names.push_back("lambda0_" + basis.label);
    }
    if (model_.include_iid) out.scalar_names.push_back("prec_iid");
    if (model_.likelihood == Family::NegativeBinomial) out.scalar_names.push_back("theta");

    const auto draws = static_cast<Eigen::Index>(retained_draws(options_));
    out.scalars.resize(draws, static_cast<Eigen::Index>(out.scalar_names.size()));
    for (const auto& basis : model_.smooth_terms) {
      out.betas.emplace_back(draws, static_cast<Eigen::Index>(basis.dim()));
      out.terms.push_back({basis.label, Matrix(draws, n_)});
    }
    if (model_.include_iid) out.terms.push_back({"iid", Matrix(draws, n_)});
    out.loglik.resize(draws, n_);
    out.fitted = Vector::Zero(n_);

    WindowBookkeeping book;
    if (options_.burn_in == 0) freeze();
    Eigen::Index row = 0;
    for (std::size_t it = 0; it < options_.iterations; ++it) {
      step();
      if (it < options_.burn_in && (it + 1) % kAdaptationWindow == 0) end_window(book);
      if (it + 1 == options_.burn_in) freeze();
      if (it >= options_.burn_in && (it - options_.burn_in) % options_.thin == 0) record(out, row++);
    }
    out.fitted /= static_cast<double>(std::max<Eigen::Index>(row, 1));

    if (latent_) out.acceptance.emplace_back("eta (mean over areas)", latent_->mean_acceptance());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      out.acceptance.emplace_back("coef_block" + std::to_string(b), blocks_[b].acceptance_rate());
    }
    out.acceptance.emplace_back("alpha (shift)", scale_shift_.acceptance_rate());
    if (model_.include_iid) {
      out.acceptance.emplace_back("prec_iid (rescaling)", scale_iid_.acceptance_rate());
      out.acceptance.emplace_back("prec_iid (collapsed)", collapsed_iid_.acceptance_rate());
      for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& label = model_.smooth_terms[k].label;
        out.acceptance.emplace_back("lambda1_" + label + " (collapsed)", collapsed_range_[k].acceptance_rate());
        out.acceptance.emplace_back("lambda0_" + label + " (collapsed)", collapsed_null_[k].acceptance_rate());
      }
    }
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& label = model_.smooth_terms[k].label;
      out.acceptance.emplace_back("lambda1_" + label + " (rescaling)", scale_range_[k].acceptance_rate());
      out.acceptance.emplace_back("lambda0_" + label + " (rescaling)", scale_null_[k].acceptance_rate());
    }
    if (model_.likelihood == Family::NegativeBinomial) out.acceptance.emplace_back("theta", scale_theta_.acceptance_rate());
    book.report(out.warnings);
    return out;
  }

 private:
  const Vector& eta() const { return latent_ ? latent_->eta() : mean_; }
  const Vector& current_loglik() const { return latent_ ? latent_->loglik() : loglik_; }

  double prior_precision(Eigen::Index j) const {
    if (j == 0) return 1.0 / (model_.priors.alpha_sd * model_.priors.alpha_sd);
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      if (j >= t.offset && j < t.offset + t.range_dim) return lambda_range_[k];
      if (j >= t.offset + t.range_dim && j < t.offset + t.range_dim + t.null_dim) return lambda_null_[k];
    }
    return 1.0;
  }

  double coef_log_prior() const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < coef_.size(); ++j) {
      const double c = j == 0 ? coef_(0) - model_.priors.alpha_mean : coef_(j);
      s -= 0.5 * prior_precision(j) * c * c;
    }
    return s;
  }

  double log_target_check() const {
    double s = current_loglik().sum() + coef_log_prior();
    if (latent_) s += gaussian_layer(mean_);
    return s;
  }

  /// log N(eta | m, 1/prec_iid), up to a constant.
  double gaussian_layer(const Vector& m) const {
    return 0.5 * static_cast<double>(n_) * std::log(prec_iid_) - 0.5 * prec_iid_ * (latent_->eta() - m).squaredNorm();
  }

  void step() {
    if (latent_) {
      latent_->sweep(mean_, 1.0 / prec_iid_, theta_, rng_);
      update_collapsed_precisions();
      draw_coefficients();
    }
    update_coefficient_blocks();
    shift_intercept();
    draw_smoothing_precisions();
    rescale_smoothing();
    if (latent_) {
      const Vector resid = latent_->eta() - mean_;
      prec_iid_ = draw_penalty_precision(rng_, model_.priors.iid_precision, resid.squaredNorm(),
                                         static_cast<double>(n_));
      rescale_iid();
    }
    if (model_.likelihood == Family::NegativeBinomial) {
      if (latent_) {
        Vector ll = latent_->loglik();
        update_dispersion(lik_, latent_->eta(), ll, theta_, model_.priors.dispersion_rate, scale_theta_, rng_);
        latent_->set(latent_->eta(), ll);
      } else {
        update_dispersion(lik_, mean_, loglik_, theta_, model_.priors.dispersion_rate, scale_theta_, rng_);
      }
    }
  }

  Vector prior_diagonal(const std::vector<double>& range, const std::vector<double>& null) const {
    Vector d(coef_.size());
    d(0) = 1.0 / (model_.priors.alpha_sd * model_.priors.alpha_sd);
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      d.segment(t.offset, t.range_dim).setConstant(range[k]);
      d.segment(t.offset + t.range_dim, t.null_dim).setConstant(null[k]);
    }
    return d;
  }

  /// Gaussian conditional of the coefficients given eta, and the log density
  /// of eta with the coefficients integrated out (up to a constant).
  struct Collapsed {
    Eigen::LLT<Matrix> llt;
    Vector rhs;
    double log_density = 0.0;
  };

  Collapsed collapse(const std::vector<double>& range, const std::vector<double>& null, double prec,
                     const Vector& design_eta, double eta_sq) const {
    const Vector d = prior_diagonal(range, null);
    Matrix precision = prec * gram_;
    precision.diagonal() += d;
    Collapsed c;
    c.rhs = prec * design_eta;
    c.rhs(0) += model_.priors.alpha_mean * d(0);
    c.llt.compute(precision);
    if (c.llt.info() != Eigen::Success) {
      c.log_density = -std::numeric_limits<double>::infinity();
      return c;
    }
    const Vector half = c.llt.matrixL().solve(c.rhs);
    const double log_det = 2.0 * c.llt.matrixLLT().diagonal().array().log().sum();
    c.log_density = 0.5 * d.array().log().sum() - 0.5 * log_det + 0.5 * half.squaredNorm() - 0.5 * prec * eta_sq +
                    0.5 * static_cast<double>(n_) * std::log(prec) -
                    0.5 * d(0) * model_.priors.alpha_mean * model_.priors.alpha_mean;
    return c;
  }

  // Precisions updated with the coefficients integrated out; the coefficients
  // are then redrawn exactly, so the pair moves as one block.
  void update_collapsed_precisions() {
    design_eta_ = design_.transpose() * latent_->eta();
    const double eta_sq = latent_->eta().squaredNorm();
    double current = collapse(lambda_range_, lambda_null_, prec_iid_, design_eta_, eta_sq).log_density;
    const auto attempt = [&](double& value, const GammaPrior& prior, AdaptiveScale& scale) {
      const double old = value;
      const double proposal = old * std::exp(scale.scale() * std_normal(rng_));
      value = proposal;
      const double candidate = collapse(lambda_range_, lambda_null_, prec_iid_, design_eta_, eta_sq).log_density;
      const double log_ratio = candidate - current + prior.log_density(proposal) - prior.log_density(old) +
                               std::log(proposal) - std::log(old);
      const bool accept = std::isfinite(log_ratio) && std::log(uniform01(rng_)) < log_ratio;
      if (accept) {
        current = candidate;
      } else {
        value = old;
      }
      scale.record(accept);
    };
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      if (terms_[k].range_dim > 0) attempt(lambda_range_[k], model_.priors.smoothing, collapsed_range_[k]);
      if (terms_[k].null_dim > 0) attempt(lambda_null_[k], model_.priors.smoothing, collapsed_null_[k]);
    }
    attempt(prec_iid_, model_.priors.iid_precision, collapsed_iid_);
  }

  // Exact Gaussian draw of (alpha, gamma) given eta: a linear regression with
  // known noise precision and independent normal priors.
  void draw_coefficients() {
    const Eigen::Index p = coef_.size();
    const auto c = collapse(lambda_range_, lambda_null_, prec_iid_, design_eta_, 0.0);
    if (c.llt.info() != Eigen::Success) throw Error(ErrorCode::NumericalError, "coefficient precision is not PD");
    Vector z(p);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = std_normal(rng_);
    coef_ = c.llt.solve(c.rhs) + c.llt.matrixU().solve(z);
    mean_ = design_ * coef_;
  }

  // Random-walk blocks against the likelihood. With an iid layer the
  // residual eta - mean is held fixed, so eta moves with the coefficients;
  // this complements the exact draw above when the iid variance is small.
  void update_coefficient_blocks() {
    const Vector resid = latent_ ? Vector(latent_->eta() - mean_) : Vector::Zero(n_);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto [start, len] = block_ranges_[b];
      const auto cols = design_.middleCols(start, len);
      const Vector base = mean_ - cols * coef_.segment(start, len) + resid;
      Vector block = coef_.segment(start, len);
      Vector candidate_ll(n_);
      const auto target = [&](const Vector& candidate) {
        const Vector m = base + cols * candidate;
        double s = 0.0;
        for (Eigen::Index i = 0; i < n_; ++i) s += candidate_ll(i) = lik_(i, m(i), theta_);
        return s - 0.5 * block_prior_quad(start, len, candidate);
      };
      double current = current_loglik().sum() - 0.5 * block_prior_quad(start, len, block);
      if (rw_block_step(blocks_[b], block, current, target, rng_)) {
        coef_.segment(start, len) = block;
        const Vector eta_new = base + cols * block;
        mean_ = eta_new - resid;
        if (latent_) {
          latent_->set(eta_new, candidate_ll);
        } else {
          loglik_ = candidate_ll;
        }
      }
    }
  }

  // Moves alpha and eta together by the same amount.
  void shift_intercept() {
    const double delta = scale_shift_.scale() * std_normal(rng_);
    const Vector candidate_eta = (eta().array() + delta).matrix();
    Vector candidate_ll(n_);
    for (Eigen::Index i = 0; i < n_; ++i) candidate_ll(i) = lik_(i, candidate_eta(i), theta_);
    const double a0 = coef_(0) - model_.priors.alpha_mean;
    const double a1 = a0 + delta;
    const double log_ratio =
        candidate_ll.sum() - current_loglik().sum() - 0.5 * prior_precision(0) * (a1 * a1 - a0 * a0);
    const bool accept = std::isfinite(log_ratio) && std::log(uniform01(rng_)) < log_ratio;
    if (accept) {
      coef_(0) += delta;
      mean_.array() += delta;
      if (latent_) {
        latent_->set(candidate_eta, candidate_ll);
      } else {
        loglik_ = candidate_ll;
      }
    }
    scale_shift_.record(accept);
  }

  double block_prior_quad(Eigen::Index start, Eigen::Index len, const Vector& block) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < len; ++j) {
      const double c = start + j == 0 ? block(j) - model_.priors.alpha_mean : block(j);
      s += prior_precision(start + j) * c * c;
    }
    return s;
  }

  void draw_smoothing_precisions() {
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      const auto range = coef_.segment(t.offset, t.range_dim);
      const auto null = coef_.segment(t.offset + t.range_dim, t.null_dim);
      if (t.range_dim > 0) {
        lambda_range_[k] = draw_penalty_precision(rng_, model_.priors.smoothing, range.squaredNorm(),
                                                  static_cast<double>(t.range_dim));
      }
      if (t.null_dim > 0) {
        lambda_null_[k] = draw_penalty_precision(rng_, model_.priors.smoothing, null.squaredNorm(),
                                                 static_cast<double>(t.null_dim));
      }
    }
  }

  // Non-centred moves: rescale a coefficient group together with its
  // precision so the whitened draws stay fixed. This breaks the funnel
  // between a weakly identified term and its smoothing precision.
  void rescale_smoothing() {
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      rescale_group(t.offset, t.range_dim, lambda_range_[k], scale_range_[k]);
      rescale_group(t.offset + t.range_dim, t.null_dim, lambda_null_[k], scale_null_[k]);
    }
  }

  void rescale_group(Eigen::Index start, Eigen::Index len, double& lambda, AdaptiveScale& scale) {
    if (len == 0) return;
    const double proposal = lambda * std::exp(scale.scale() * std_normal(rng_));
    const double factor = std::sqrt(lambda / proposal);
    const Vector shift = (factor - 1.0) * (design_.middleCols(start, len) * coef_.segment(start, len));
    // The iid residual stays fixed, so eta moves with the mean.
    const Vector candidate_eta = eta() + shift;
    Vector candidate_ll(n_);
    for (Eigen::Index i = 0; i < n_; ++i) candidate_ll(i) = lik_(i, candidate_eta(i), theta_);
    const double log_ratio = candidate_ll.sum() - current_loglik().sum() +
                             model_.priors.smoothing.log_density(proposal) -
                             model_.priors.smoothing.log_density(lambda) + std::log(proposal) - std::log(lambda);
    const bool accept = std::isfinite(log_ratio) && std::log(uniform01(rng_)) < log_ratio;
    if (accept) {
      lambda = proposal;
      coef_.segment(start, len) *= factor;
      mean_ += shift;
      if (latent_) {
        latent_->set(candidate_eta, candidate_ll);
      } else {
        loglik_ = candidate_ll;
      }
    }
    scale.record(accept);
  }

  void rescale_iid() {
    const double proposal = prec_iid_ * std::exp(scale_iid_.scale() * std_normal(rng_));
    const Vector resid = latent_->eta() - mean_;
    const Vector candidate = mean_ + resid * std::sqrt(prec_iid_ / proposal);
    Vector candidate_ll(n_);
    for (Eigen::Index i = 0; i < n_; ++i) candidate_ll(i) = lik_(i, candidate(i), theta_);
    const auto& prior = model_.priors.iid_precision;
    const double log_ratio = candidate_ll.sum() - latent_->loglik().sum() + prior.log_density(proposal) -
                             prior.log_density(prec_iid_) + std::log(proposal) - std::log(prec_iid_);
    const bool accept = std::isfinite(log_ratio) && std::log(uniform01(rng_)) < log_ratio;
    if (accept) {
      prec_iid_ = proposal;
      latent_->set(candidate, candidate_ll);
    }
    scale_iid_.record(accept);
  }

  void end_window(WindowBookkeeping& book) {
    if (latent_) latent_->end_window(book);
    for (std::size_t b = 0; b < blocks_.size(); ++b) book.note(blocks_[b].end_window(), "coef_block" + std::to_string(b));
    book.note(scale_shift_.end_window(), "alpha (shift)");
    if (latent_) {
      book.note(scale_iid_.end_window(), "prec_iid");
      book.note(collapsed_iid_.end_window(), "prec_iid (collapsed)");
      for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& label = model_.smooth_terms[k].label;
        if (terms_[k].range_dim > 0) book.note(collapsed_range_[k].end_window(), "lambda1_" + label + " (collapsed)");
        if (terms_[k].null_dim > 0) book.note(collapsed_null_[k].end_window(), "lambda0_" + label + " (collapsed)");
      }
    }
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      book.note(scale_range_[k].end_window(), "lambda1_" + model_.smooth_terms[k].label);
      book.note(scale_null_[k].end_window(), "lambda0_" + model_.smooth_terms[k].label);
    }
    if (model_.likelihood == Family::NegativeBinomial) book.note(scale_theta_.end_window(), "theta");
  }

  void freeze() {
    if (latent_) latent_->freeze();
    for (auto& b : blocks_) b.freeze();
    scale_iid_.reset_counts();
    scale_theta_.reset_counts();
    for (auto& s : scale_range_) s.reset_counts();
    for (auto& s : scale_null_) s.reset_counts();
    for (auto& s : collapsed_range_) s.reset_counts();
    for (auto& s : collapsed_null_) s.reset_counts();
    collapsed_iid_.reset_counts();
    scale_shift_.reset_counts();
  }

  void record(ChainSamples& out, Eigen::Index row) {
    Eigen::Index c = 0;
    out.scalars(row, c++) = coef_(0);
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      out.scalars(row, c++) = lambda_range_[k];
      out.scalars(row, c++) = lambda_null_[k];
    }
    if (model_.include_iid) out.scalars(row, c++) = prec_iid_;
    if (model_.likelihood == Family::NegativeBinomial) out.scalars(row, c++) = theta_;

    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      const auto gamma = coef_.segment(t.offset, t.transform.cols());
      out.betas[k].row(row) = (t.transform * gamma).transpose();
      out.terms[k].values.row(row) = (design_.middleCols(t.offset, t.transform.cols()) * gamma).transpose();
    }
    if (latent_) out.terms.back().values.row(row) = (latent_->eta() - mean_).transpose();
    out.loglik.row(row) = current_loglik().transpose();
    const Vector& e = eta();
    for (Eigen::Index i = 0; i < n_; ++i) out.fitted(i) += lik_.response(i, e(i));
  }

  const ModelSpec& model_;
  const McmcOptions& options_;
  Rng rng_;
  Likelihood lik_;
  Eigen::Index n_;

  std::vector<WhitenedTerm> terms_;
  Matrix design_;
  Matrix gram_;

  Vector coef_;
  Vector mean_;
  std::vector<double> lambda_range_;
  std::vector<double> lambda_null_;
  double prec_iid_ = 1.0;
  double theta_ = 1.0;

  std::optional<LatentPredictor> latent_;
  Vector loglik_;  // used when there is no iid layer
  std::vector<std::pair<Eigen::Index, Eigen::Index>> block_ranges_;
  std::vector<AdaptiveRwBlock> blocks_;

  AdaptiveScale scale_iid_;
  AdaptiveScale scale_theta_;
  std::vector<AdaptiveScale> scale_range_;
  std::vector<AdaptiveScale> scale_null_;
  std::vector<AdaptiveScale> collapsed_range_;
  std::vector<AdaptiveScale> collapsed_null_;
  AdaptiveScale collapsed_iid_{0.3};
  AdaptiveScale scale_shift_{0.05};
  Vector design_eta_;
};

// ---------------------------------------------------------------------------
// BYM2: eta = alpha + sqrt(phi / tau) u* + sqrt((1 - phi) / tau) v*, u* a
// scaled sum-to-zero ICAR field, tau the total precision.

class Bym2Chain {
 public:
  Bym2Chain(const ModelSpec& model, const Observations& obs, const McmcOptions& options, std::size_t chain,
            const EigenDecomposition& structure, double scaling)
      : model_(model),
        options_(options),
        rng_(make_rng(options.seed, kChainStreamBase + chain)),
        lik_(model.likelihood, obs, model.log_offset),
        n_(static_cast<Eigen::Index>(model.size())),
        structure_(structure),
        scaling_(scaling),
        alpha_(initial_intercept(model, obs)),
        ustar_(Vector::Zero(n_)),
        latent_(lik_, alpha_, theta_) {
    zero_mode_ = n_ - 1;  // eigenvalues are sorted descending; the constant mode is last
    const double initial = latent_.loglik().sum() + gaussian_layer(phi_, tau_);
    if (!std::isfinite(initial)) throw Error(ErrorCode::InitializationError, "initial log posterior is not finite");
  }

  ChainSamples run() {
    ChainSamples out;
    out.scalar_names = {"alpha", "phi", "tau"};
    if (model_.likelihood == Family::NegativeBinomial) out.scalar_names.push_back("theta");
    const auto draws = static_cast<Eigen::Index>(retained_draws(options_));
    out.scalars.resize(draws, static_cast<Eigen::Index>(out.scalar_names.size()));
    out.terms.push_back({"structured", Matrix(draws, n_)});
    out.terms.push_back({"unstructured", Matrix(draws, n_)});
    out.ustar.resize(draws, n_);
    out.loglik.resize(draws, n_);
    out.fitted = Vector::Zero(n_);

    WindowBookkeeping book;
    if (options_.burn_in == 0) freeze();
    Eigen::Index row = 0;
    for (std::size_t it = 0; it < options_.iterations; ++it) {
      step();
      if (it < options_.burn_in && (it + 1) % kAdaptationWindow == 0) {
        latent_.end_window(book);
        book.note(scale_phi_.end_window(), "phi (collapsed)");
        book.note(scale_tau_.end_window(), "tau (collapsed)");
        book.note(scale_phi_nc_.end_window(), "phi (non-centred)");
        book.note(scale_tau_nc_.end_window(), "tau (non-centred)");
        book.note(scale_shift_.end_window(), "alpha (shift)");
        if (model_.likelihood == Family::NegativeBinomial) book.note(scale_theta_.end_window(), "theta");
      }
      if (it + 1 == options_.burn_in) freeze();
      if (it >= options_.burn_in && (it - options_.burn_in) % options_.thin == 0) record(out, row++);
    }
    out.fitted /= static_cast<double>(std::max<Eigen::Index>(row, 1));
    out.acceptance = {{"eta (mean over areas)", latent_.mean_acceptance()},
                      {"phi (collapsed)", scale_phi_.acceptance_rate()},
                      {"tau (collapsed)", scale_tau_.acceptance_rate()},
                      {"phi (non-centred)", scale_phi_nc_.acceptance_rate()},
                      {"tau (non-centred)", scale_tau_nc_.acceptance_rate()},
                      {"alpha (shift)", scale_shift_.acceptance_rate()}};
    if (model_.likelihood == Family::NegativeBinomial) out.acceptance.emplace_back("theta", scale_theta_.acceptance_rate());
    book.report(out.warnings);
    return out;
  }

 private:
  double structured_weight(double phi, double tau) const { return std::sqrt(phi / tau); }
  double noise_variance(double phi, double tau) const { return (1.0 - phi) / tau; }

  Vector structured_mean(double phi, double tau) const {
    return (alpha_ + structured_weight(phi, tau) * ustar_.array()).matrix();
  }

  double gaussian_layer(double phi, double tau) const {
    const double var = noise_variance(phi, tau);
    return -0.5 * static_cast<double>(n_) * (kLog2Pi + std::log(var)) -
           0.5 * (latent_.eta() - structured_mean(phi, tau)).squaredNorm() / var;
  }

  double log_prior(double phi, double tau) const {
    // Uniform phi on (0, 1) and Jacobians of the logit / log transforms.
    return model_.priors.bym2_precision.log_density(tau) + std::log(tau) + std::log(phi) + std::log1p(-phi);
  }

  static double logit(double p) { return std::log(p / (1.0 - p)); }

  void step() {
    latent_.sweep(structured_mean(phi_, tau_), noise_variance(phi_, tau_), theta_, rng_);
    update_phi_tau_collapsed();
    draw_structured();
    draw_intercept();
    update_phi_tau_noncentred();
    shift_intercept();
    if (model_.likelihood == Family::NegativeBinomial) {
      Vector ll = latent_.loglik();
      update_dispersion(lik_, latent_.eta(), ll, theta_, model_.priors.dispersion_rate, scale_theta_, rng_);
      latent_.set(latent_.eta(), ll);
    }
  }

  void draw_intercept() {
    const double var = noise_variance(phi_, tau_);
    const double prior_prec = 1.0 / (model_.priors.alpha_sd * model_.priors.alpha_sd);
    const double resid_sum = (latent_.eta() - structured_weight(phi_, tau_) * ustar_).sum();
    const double precision = static_cast<double>(n_) / var + prior_prec;
    const double mean = (resid_sum / var + model_.priors.alpha_mean * prior_prec) / precision;
    alpha_ = mean + std_normal(rng_) / std::sqrt(precision);
  }

  // u* | rest is Gaussian with precision s Q + (phi / (1 - phi)) I; both terms
  // are diagonal in the eigenbasis of Q, and the constant mode is pinned to 0.
  void draw_structured() {
    const double var = noise_variance(phi_, tau_);
    const double weight = structured_weight(phi_, tau_);
    const Vector projected = structure_.vectors.transpose() * ((latent_.eta().array() - alpha_).matrix() * (weight / var));
    const double ridge = weight * weight / var;
    Vector coef(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (j == zero_mode_) {
        coef(j) = 0.0;
        continue;
      }
      const double precision = scaling_ * structure_.values(j) + ridge;
      coef(j) = projected(j) / precision + std_normal(rng_) / std::sqrt(precision);
    }
    ustar_ = structure_.vectors * coef;
    ustar_.array() -= ustar_.mean();
  }

  // log N(eta - alpha | 0, (phi / tau) (s Q)^+ + ((1 - phi) / tau) I) in the
  // eigenbasis of Q, i.e. with u* integrated out.
  double collapsed_layer(const Vector& projected, double phi, double tau) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double structured = j == zero_mode_ ? 0.0 : phi / (tau * scaling_ * structure_.values(j));
      const double var = structured + (1.0 - phi) / tau;
      s -= 0.5 * (std::log(var) + projected(j) * projected(j) / var);
    }
    return s;
  }

  // Metropolis on (logit phi, log tau) against the collapsed layer; u* is
  // redrawn exactly afterwards, so (phi, tau, u*) move as one block.
  void update_phi_tau_collapsed() {
    const Vector projected = structure_.vectors.transpose() * (latent_.eta().array() - alpha_).matrix();
    double current = collapsed_layer(projected, phi_, tau_);
    const auto attempt = [&](double phi_new, double tau_new, AdaptiveScale& scale) {
      bool accept = false;
      if (phi_new > 0.0 && phi_new < 1.0 && tau_new > 0.0 && std::isfinite(tau_new)) {
        const double candidate = collapsed_layer(projected, phi_new, tau_new);
        const double log_ratio = candidate - current + log_prior(phi_new, tau_new) - log_prior(phi_, tau_);
        accept = std::isfinite(log_ratio) && std::log(uniform01(rng_)) < log_ratio;
        if (accept) {
          phi_ = phi_new;
          tau_ = tau_new;
          current = candidate;
        }
      }
      scale.record(accept);
    };
    attempt(1.0 / (1.0 + std::exp(-(logit(phi_) + scale_phi_.scale() * std_normal(rng_)))), tau_, scale_phi_);
    attempt(phi_, tau_ * std::exp(scale_tau_.scale() * std_normal(rng_)), scale_tau_);
  }

  // Moves alpha and eta together by the same amount.
  void shift_intercept() {
    const double delta = scale_shift_.scale() * std_normal(rng_);
    const Vector candidate_eta = (latent_.eta().array() + delta).matrix();
    Vector candidate_ll(n_);
    for (Eigen::Index i = 0; i < n_; ++i) candidate_ll(i) = lik_(i, candidate_eta(i), theta_);
    const double prior_prec = 1.0 / (model_.priors.alpha_sd * model_.priors.alpha_sd);
    const double a0 = alpha_ - model_.priors.alpha_mean;
    const double a1 = a0 + delta;
    const double log_ratio = candidate_ll.sum() - latent_.loglik().sum() - 0.5 * prior_prec * (a1 * a1 - a0 * a0);
    const bool accept = std::isfinite(log_ratio) && std::log(uniform01(rng_)) < log_ratio;
    if (accept) {
      alpha_ += delta;
      latent_.set(candidate_eta, candidate_ll);
    }
    scale_shift_.record(accept);
  }

  // Same parameters with the standardised unstructured effect v* held fixed,
  // so the linear predictor (and the likelihood) moves instead.
  void update_phi_tau_noncentred() {
    const auto attempt = [&](double phi_new, double tau_new, AdaptiveScale& scale) {
      const double sd = std::sqrt(noise_variance(phi_, tau_));
      const Vector vstar = (latent_.eta() - structured_mean(phi_, tau_)) / sd;
      bool accept = false;
      if (phi_new > 0.0 && phi_new < 1.0 && tau_new > 0.0 && std::isfinite(tau_new)) {
        const Vector candidate =
            structured_mean(phi_new, tau_new) + std::sqrt(noise_variance(phi_new, tau_new)) * vstar;
        Vector candidate_ll(n_);
        for (Eigen::Index i = 0; i < n_; ++i) candidate_ll(i) = lik_(i, candidate(i), theta_);
        const double log_ratio =
            candidate_ll.sum() - latent_.loglik().sum() + log_prior(phi_new, tau_new) - log_prior(phi_, tau_);
        accept = std::isfinite(log_ratio) && std::log(uniform01(rng_)) < log_ratio;
        if (accept) {
          phi_ = phi_new;
          tau_ = tau_new;
          latent_.set(candidate, candidate_ll);
        }
      }
      scale.record(accept);
    };
    attempt(1.0 / (1.0 + std::exp(-(logit(phi_) + scale_phi_nc_.scale() * std_normal(rng_)))), tau_, scale_phi_nc_);
    attempt(phi_, tau_ * std::exp(scale_tau_nc_.scale() * std_normal(rng_)), scale_tau_nc_);
  }

  void freeze() {
    latent_.freeze();
    for (auto* s : {&scale_phi_, &scale_tau_, &scale_phi_nc_, &scale_tau_nc_, &scale_theta_, &scale_shift_}) {
      s->reset_counts();
    }
  }

  void record(ChainSamples& out, Eigen::Index row) {
    out.scalars(row, 0) = alpha_;
    out.scalars(row, 1) = phi_;
    out.scalars(row, 2) = tau_;
    if (model_.likelihood == Family::NegativeBinomial) out.scalars(row, 3) = theta_;
    const Vector structured = structured_weight(phi_, tau_) * ustar_;
    out.terms[0].values.row(row) = structured.transpose();
    out.terms[1].values.row(row) = (latent_.eta().array() - alpha_ - structured.array()).matrix().transpose();
    out.ustar.row(row) = ustar_.transpose();
    out.loglik.row(row) = latent_.loglik().transpose();
    for (Eigen::Index i = 0; i < n_; ++i) out.fitted(i) += lik_.response(i, latent_.eta()(i));
  }

  const ModelSpec& model_;
  const McmcOptions& options_;
  Rng rng_;
  Likelihood lik_;
  Eigen::Index n_;
  const EigenDecomposition& structure_;
  double scaling_;
  Eigen::Index zero_mode_ = 0;

  double alpha_;
  double phi_ = 0.5;
  double tau_ = 1.0;
  double theta_ = 1.0;
  Vector ustar_;
  LatentPredictor latent_;

  AdaptiveScale scale_phi_{0.5};
  AdaptiveScale scale_tau_{0.5};
  AdaptiveScale scale_phi_nc_{0.3};
  AdaptiveScale scale_tau_nc_{0.3};
  AdaptiveScale scale_theta_{0.2};
  AdaptiveScale scale_shift_{0.05};
};

Matrix icar_precision(const Matrix& adjacency) {
  Matrix q = -adjacency;
  q.diagonal() = adjacency.rowwise().sum();
  return q;
}

template <class Runner>
std::vector<ChainSamples> run_chains(std::size_t chains, std::size_t threads, Runner&& runner) {
  std::vector<ChainSamples> out(chains);
  std::vector<std::exception_ptr> errors(chains);
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, chains));
  for (std::size_t first = 0; first < chains; first += workers) {
    std::vector<std::thread> pool;
    for (std::size_t c = first; c < std::min(chains, first + workers); ++c) {
      pool.emplace_back([&, c] {
        try {
          out[c] = runner(c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void validate_options(const McmcOptions& o) {
  if (o.chains < 1) throw Error(ErrorCode::InvalidArgument, "need at least one chain");
  if (o.iterations <= o.burn_in) throw Error(ErrorCode::InvalidArgument, "iterations must exceed burn_in");
  if (o.thin < 1) throw Error(ErrorCode::InvalidArgument, "thin must be >= 1");
}

}  // namespace

void PriorConfig::validate() const {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(alpha_sd) || !std::isfinite(alpha_mean) || !positive(smoothing.shape) || !positive(smoothing.rate) ||
      !positive(iid_precision.shape) || !positive(iid_precision.rate) || !positive(dispersion_rate) ||
      !positive(bym2_precision.shape) || !positive(bym2_precision.rate)) {
    throw Error(ErrorCode::InvalidArgument, "prior hyperparameters must be strictly positive");
  }
}

double observation_loglik(Family family, double y, double log_offset, double eta, std::size_t trials, double theta) {
  Observations obs;
  obs.y = Vector::Constant(1, y);
  obs.trials = trials;
  const Vector offset = Vector::Constant(1, log_offset);
  const Likelihood lik(family, obs, offset);
  return lik(0, eta, theta);
}

ModelSpec build_model(const Observations& obs, std::vector<SmoothBasis> terms, const ModelOptions& options,
                      const Matrix& adjacency) {
  options.priors.validate();
  const auto n = obs.size();
  if (n == 0) throw Error(ErrorCode::DimensionError, "no observations");
  if (static_cast<std::size_t>(obs.log_offset.size()) != n && options.likelihood != Family::Binomial) {
    throw Error(ErrorCode::DimensionError, "offset length does not match observations");
  }
  for (Eigen::Index i = 0; i < obs.y.size(); ++i) {
    if (!(obs.y(i) >= 0.0)) throw Error(ErrorCode::InvalidArgument, "observations must be non-negative");
    if (options.likelihood == Family::Binomial && obs.y(i) > static_cast<double>(obs.trials)) {
      throw Error(ErrorCode::InvalidArgument, "binomial successes exceed trials");
    }
  }
  std::set<std::string> labels;
  for (const auto& t : terms) {
    if (t.rows() != n) {
      throw Error(ErrorCode::DimensionError, "term '" + t.label + "' has " + std::to_string(t.rows()) +
                                                 " rows, data has " + std::to_string(n));
    }
    if (!labels.insert(t.label).second || t.label == "iid") {
      throw Error(ErrorCode::IncompatibleSpec, "term label '" + t.label + "' is not unique");
    }
  }
  if (options.baseline == Baseline::Bym2) {
    if (!terms.empty()) throw Error(ErrorCode::IncompatibleSpec, "the BYM2 baseline takes no smooth terms");
    if (static_cast<std::size_t>(adjacency.rows()) != n || adjacency.cols() != adjacency.rows()) {
      throw Error(ErrorCode::DimensionError, "BYM2 needs an n x n adjacency matrix");
    }
    if (!is_connected(adjacency)) throw Error(ErrorCode::DisconnectedGraph, "BYM2 needs a connected adjacency graph");
  } else if (terms.empty() && !options.include_iid) {
    throw Error(ErrorCode::IncompatibleSpec, "model needs at least one random term");
  }
  if (options.likelihood == Family::Binomial && obs.trials < 1) {
    throw Error(ErrorCode::InvalidArgument, "binomial model needs trials >= 1");
  }

  ModelSpec spec;
  spec.likelihood = options.likelihood;
  spec.trials = options.likelihood == Family::Binomial ? obs.trials : 0;
  spec.log_offset = options.likelihood == Family::Binomial ? Vector::Zero(static_cast<Eigen::Index>(n)) : obs.log_offset;
  spec.smooth_terms = std::move(terms);
  spec.include_iid = options.baseline == Baseline::Bym2 ? true : options.include_iid;
  spec.baseline = options.baseline;
  if (options.baseline == Baseline::Bym2) spec.adjacency = adjacency;
  spec.priors = options.priors;
  return spec;
}

double icar_scaling(const Matrix& adjacency) {
  if (!is_connected(adjacency)) throw Error(ErrorCode::DisconnectedGraph, "ICAR scaling needs a connected graph");
  const Matrix cov = pseudo_inverse(icar_precision(adjacency));
  double log_sum = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) log_sum += std::log(cov(i, i));
  return std::exp(log_sum / static_cast<double>(cov.rows()));
}

PosteriorSamples run_mcmc(const ModelSpec& model, const Observations& obs, const McmcOptions& options) {
  validate_options(options);
  if (obs.size() != model.size()) throw Error(ErrorCode::DimensionError, "observations do not match the model");
  PosteriorSamples out;
  out.options = options;
  out.likelihood = model.likelihood;
  out.trials = model.trials;
  if (model.baseline == Baseline::Bym2) {
    const auto structure = sym_eigen(icar_precision(model.adjacency));
    const double scaling = icar_scaling(model.adjacency);
    out.chains = run_chains(options.chains, options.threads, [&](std::size_t c) {
      return Bym2Chain(model, obs, options, c, structure, scaling).run();
    });
  } else {
    out.chains = run_chains(options.chains, options.threads,
                            [&](std::size_t c) { return SplineChain(model, obs, options, c).run(); });
  }
  return out;
}

PosteriorSamples fit_bym2(const Observations& obs, const Region& region, const PriorConfig& priors,
                          const McmcOptions& options) {
  region.require_connected();
  ModelOptions opts;
  opts.likelihood = obs.family;
  opts.baseline = Baseline::Bym2;
  opts.priors = priors;
  return run_mcmc(build_model(obs, {}, opts, region.adjacency()), obs, options);
}

Eigen::Index ChainSamples::scalar_index(const std::string& name) const {
  for (std::size_t i = 0; i < scalar_names.size(); ++i) {
    if (scalar_names[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "no scalar parameter '" + name + "'");
}

std::vector<std::string> PosteriorSamples::term_labels() const {
  std::vector<std::string> out;
  for (const auto& t : chains.front().terms) out.push_back(t.label);
  return out;
}

Vector PosteriorSamples::scalar(const std::string& name) const {
  std::vector<double> values;
  for (const auto& c : chains) {
    const auto col = c.scalars.col(c.scalar_index(name));
    values.insert(values.end(), col.data(), col.data() + col.size());
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Matrix PosteriorSamples::term(const std::string& label) const {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<const Matrix*> parts;
  for (const auto& c : chains) {
    const Matrix* found = nullptr;
    for (const auto& t : c.terms) {
      if (t.label == label) found = &t.values;
    }
    if (!found) throw Error(ErrorCode::InvalidArgument, "no random term '" + label + "'");
    parts.push_back(found);
    rows += found->rows();
    cols = found->cols();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto* p : parts) {
    out.middleRows(r, p->rows()) = *p;
    r += p->rows();
  }
  return out;
}

Matrix PosteriorSamples::loglik() const {
  Eigen::Index rows = 0;
  for (const auto& c : chains) rows += c.loglik.rows();
  Matrix out(rows, chains.front().loglik.cols());
  Eigen::Index r = 0;
  for (const auto& c : chains) {
    out.middleRows(r, c.loglik.rows()) = c.loglik;
    r += c.loglik.rows();
  }
  return out;
}

Vector PosteriorSamples::fitted() const {
  Vector out = Vector::Zero(chains.front().fitted.size());
  for (const auto& c : chains) out += c.fitted;
  return out / static_cast<double>(chains.size());
}

Vector PosteriorSamples::term_mean(const std::string& label) const {
  return term(label).colwise().mean().transpose();
}

std::vector<std::string> PosteriorSamples::warnings() const {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (const auto& w : chains[c].warnings) out.push_back("chain " + std::to_string(c) + ": " + w);
  }
  return out;
}

}  // namespace spatial_smooth
