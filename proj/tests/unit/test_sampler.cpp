#include <gtest/gtest.h>

#include "spatial_smooth/metrics.hpp"
#include "spatial_smooth/sampler.hpp"
#include "spatial_smooth/smooth.hpp"
#include "support/oracles.hpp"

using namespace spatial_smooth;

TEST(PenaltyPrecision, MatchesGammaFullConditional) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0, 1);
  ConnectivityCoords c{"x", Points(80, 2), {}};
  for (Eigen::Index i = 0; i < 80; ++i) c.points.row(i) << u(gen), u(gen);
  const auto basis = make_smooth(c, 12, 1);
  std::normal_distribution<double> nd;
  Vector beta(static_cast<Eigen::Index>(basis.dim()));
  for (Eigen::Index j = 0; j < beta.size(); ++j) beta(j) = nd(gen);
  const double quad = beta.dot(basis.penalty * beta);
  const auto eig = oracle::jacobi_eigen(basis.penalty);
  const double rank = static_cast<double>((eig.values.array() > 1e-9 * eig.values.maxCoeff()).count());
  ASSERT_EQ(rank, static_cast<double>(basis.radial_dim()));

  const GammaPrior prior{0.05, 0.005};
  auto rng = make_rng(99);
  std::vector<double> draws(10000);
  for (auto& d : draws) d = draw_penalty_precision(rng, prior, quad, rank);
  // Prior lambda^(a-1) e^(-b lambda) times lambda^(r/2) e^(-lambda q / 2).
  const double shape = prior.shape + rank / 2.0;
  const double rate = prior.rate + quad / 2.0;
  const auto [d, p] = oracle::ks_test(draws, [&](double x) { return oracle::gamma_cdf(x, shape, rate); });
  EXPECT_GT(p, 0.01) << "KS D=" << d;
}

TEST(AdaptiveScale, MovesTowardTarget) {
  AdaptiveScale s(1.0, 0.4);
  for (int i = 0; i < 50; ++i) s.record(true);
  EXPECT_FALSE(s.end_window());
  EXPECT_GT(s.scale(), 1.0);
  const double before = s.scale();
  for (int i = 0; i < 50; ++i) s.record(false);
  EXPECT_TRUE(s.end_window());
  EXPECT_LT(s.scale(), before);
}

TEST(AdaptiveRwBlock, RejectsOversizedBlocks) {
  EXPECT_THROW(AdaptiveRwBlock(kMaxBlockSize + 1, 1.0), Error);
  EXPECT_THROW(AdaptiveRwBlock(0, 1.0), Error);
}

TEST(AdaptiveRwBlock, NormalNormalPosterior) {
  // y_j ~ N(mu, sigma^2), mu ~ N(m0, s0^2).
  const std::vector<double> y{1.2, 0.7, 2.1, 1.5, 0.9, 1.8, 1.1, 1.4};
  const double sigma = 0.8, m0 = 0.0, s0 = 2.0;
  const double post_prec = 1.0 / (s0 * s0) + static_cast<double>(y.size()) / (sigma * sigma);
  const double post_mean = (m0 / (s0 * s0) + std::accumulate(y.begin(), y.end(), 0.0) / (sigma * sigma)) / post_prec;
  const double post_sd = 1.0 / std::sqrt(post_prec);

  auto log_post = [&](const Vector& v) {
    double lp = -0.5 * std::pow((v(0) - m0) / s0, 2);
    for (double yi : y) lp -= 0.5 * std::pow((yi - v(0)) / sigma, 2);
    return lp;
  };
  std::vector<Vector> chains;
  for (std::uint64_t c = 0; c < 2; ++c) {
    auto rng = make_rng(5, c);
    AdaptiveRwBlock block(1, 1.0);
    Vector state = Vector::Constant(1, 3.0 * c - 1.0);
    double lp = log_post(state);
    for (std::size_t it = 0; it < 2000; ++it) {
      rw_block_step(block, state, lp, log_post, rng);
      if ((it + 1) % kAdaptationWindow == 0) block.end_window();
    }
    block.freeze();
    Vector draws(20000);
    for (Eigen::Index it = 0; it < draws.size(); ++it) {
      rw_block_step(block, state, lp, log_post, rng);
      draws(it) = state(0);
    }
    EXPECT_GT(block.acceptance_rate(), 0.15);
    chains.push_back(draws);
  }
  Vector all(40000);
  all << chains[0], chains[1];
  const auto diag = rhat_ess(chains);
  EXPECT_LT(diag.rhat, 1.01);
  const double mean = all.mean();
  const double sd = std::sqrt(oracle::sample_variance(all));
  const double mcse_mean = sd / std::sqrt(diag.ess);
  const double mcse_sd = sd / std::sqrt(2.0 * diag.ess);
  EXPECT_NEAR(mean, post_mean, 3.0 * mcse_mean);
  EXPECT_NEAR(sd, post_sd, 3.0 * mcse_sd);
}
