#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "spatial_smooth/numerics.hpp"
#include "spatial_smooth/rng.hpp"

namespace spatial_smooth {

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;

  double log_density(double x) const {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
  }
};

/// Draw from the Gamma full conditional of a precision lambda whose Gaussian
/// prior contributes lambda^(rank/2) exp(-lambda * quad_form / 2).
double draw_penalty_precision(Rng& rng, const GammaPrior& prior, double quad_form, double rank);

inline constexpr double kTargetScalarAcceptance = 0.40;
inline constexpr double kTargetBlockAcceptance = 0.30;
inline constexpr std::size_t kAdaptationWindow = 50;
inline constexpr std::size_t kMaxBlockSize = 25;

/// Step size of a one-dimensional random-walk Metropolis update, tuned on the
/// log scale at the end of every burn-in window and frozen afterwards.
class AdaptiveScale {
 public:
  explicit AdaptiveScale(double initial = 0.1, double target = kTargetScalarAcceptance)
      : log_scale_(std::log(initial)), target_(target) {}

  double scale() const { return std::exp(log_scale_); }
  void record(bool accepted) {
    ++window_proposed_;
    ++total_proposed_;
    if (accepted) {
      ++window_accepted_;
      ++total_accepted_;
    }
  }
  /// Returns true when the closing window accepted nothing.
  bool end_window();
  void reset_counts() {
    total_accepted_ = 0;
    total_proposed_ = 0;
  }
  double acceptance_rate() const {
    return total_proposed_ ? static_cast<double>(total_accepted_) / static_cast<double>(total_proposed_) : 0.0;
  }

 private:
  double log_scale_;
  double target_;
  std::size_t windows_ = 0;
  std::size_t window_accepted_ = 0;
  std::size_t window_proposed_ = 0;
  std::size_t total_accepted_ = 0;
  std::size_t total_proposed_ = 0;
};

/// Random-walk Metropolis on a block of at most kMaxBlockSize coordinates.
/// During burn-in the proposal covariance tracks the empirical covariance of
/// the block's visited states and the overall scale is tuned toward the
/// target acceptance rate; both are frozen by `freeze()`.
class AdaptiveRwBlock {
 public:
  AdaptiveRwBlock(std::size_t dim, double initial_sd, double target = kTargetBlockAcceptance);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  Vector propose(const Vector& current, Rng& rng) const;
  /// Records the outcome and, while adapting, the state after the update.
  void record(const Vector& state, bool accepted);
  bool end_window();
  void freeze() {
    adapting_ = false;
    scale_.reset_counts();
  }
  double acceptance_rate() const { return scale_.acceptance_rate(); }

 private:
  AdaptiveScale scale_;
  Matrix chol_;
  Vector mean_;
  Matrix scatter_;
  std::size_t count_ = 0;
  bool adapting_ = true;
};

/// One Metropolis step: proposes from `block`, evaluates `log_density` and
/// updates `state`/`current_log_density` in place on acceptance.
template <class LogDensity>
bool rw_block_step(AdaptiveRwBlock& block, Vector& state, double& current_log_density, LogDensity&& log_density,
                   Rng& rng) {
  const Vector proposal = block.propose(state, rng);
  const double candidate = log_density(proposal);
  const bool accept = std::isfinite(candidate) && std::log(uniform01(rng)) < candidate - current_log_density;
  if (accept) {
    state = proposal;
    current_log_density = candidate;
  }
  block.record(state, accept);
  return accept;
}

}  // namespace spatial_smooth
