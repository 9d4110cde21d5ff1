#include "spatial_smooth/sampler.hpp"

#include <algorithm>

#include "spatial_smooth/error.hpp"

namespace spatial_smooth {

double draw_penalty_precision(Rng& rng, const GammaPrior& prior, double quad_form, double rank) {
  return gamma_rate(rng, prior.shape + 0.5 * rank, prior.rate + 0.5 * quad_form);
}

bool AdaptiveScale::end_window() {
  const bool stalled = window_proposed_ > 0 && window_accepted_ == 0;
  if (window_proposed_ > 0) {
    const double rate = static_cast<double>(window_accepted_) / static_cast<double>(window_proposed_);
    const double step = std::min(1.0, 3.0 / std::sqrt(static_cast<double>(windows_) + 1.0));
    log_scale_ += step * (rate - target_);
    if (stalled) log_scale_ -= 1.0;
    log_scale_ = std::clamp(log_scale_, -30.0, 10.0);
  }
  ++windows_;
  window_accepted_ = 0;
  window_proposed_ = 0;
  return stalled;
}

AdaptiveRwBlock::AdaptiveRwBlock(std::size_t dim, double initial_sd, double target)
    : scale_(2.38 / std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1))), target),
      chol_(Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)) * initial_sd),
      mean_(Vector::Zero(static_cast<Eigen::Index>(dim))),
      scatter_(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {
  if (dim == 0 || dim > kMaxBlockSize) {
    throw Error(ErrorCode::InvalidArgument, "block size must be in [1, " + std::to_string(kMaxBlockSize) + "]");
  }
}

Vector AdaptiveRwBlock::propose(const Vector& current, Rng& rng) const {
  Vector z(current.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std_normal(rng);
  return current + scale_.scale() * (chol_ * z);
}

void AdaptiveRwBlock::record(const Vector& state, bool accepted) {
  scale_.record(accepted);
  if (!adapting_) return;
  // Welford update of the visited-state covariance.
  ++count_;
  const Vector delta = state - mean_;
  mean_ += delta / static_cast<double>(count_);
  scatter_ += delta * (state - mean_).transpose();
}

bool AdaptiveRwBlock::end_window() {
  if (!adapting_) return false;
  const bool stalled = scale_.end_window();
  const auto d = static_cast<Eigen::Index>(dim());
  if (count_ > static_cast<std::size_t>(2 * d + 10)) {
    Matrix cov = scatter_ / static_cast<double>(count_ - 1);
    const double ridge = 1e-10 * std::max(1.0, cov.diagonal().maxCoeff());
    cov += ridge * Matrix::Identity(d, d);
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) chol_ = llt.matrixL();
  }
  return stalled;
}

}  // namespace spatial_smooth
