// Randomised invariants. Each property draws its inputs from a fixed-seed
// generator so failures reproduce; the seed and case index are reported.

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spatial_smooth/connectivity.hpp"
#include "spatial_smooth/metrics.hpp"
#include "spatial_smooth/numerics.hpp"
#include "spatial_smooth/simgen.hpp"
#include "spatial_smooth/smooth.hpp"
#include "support/oracles.hpp"

using namespace spatial_smooth;

namespace {

constexpr int kCases = 50;

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Points random_points(std::mt19937_64& rng, int n) {
  Points p(n, 2);
  for (int i = 0; i < n; ++i) p.row(i) << uniform(rng), uniform(rng);
  return p;
}

Matrix random_draws(std::mt19937_64& rng, int draws, int n, double scale) {
  std::normal_distribution<double> z(0.0, scale);
  Matrix m(draws, n);
  for (int s = 0; s < draws; ++s)
    for (int i = 0; i < n; ++i) m(s, i) = z(rng);
  return m;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Numerics, EigenReconstructsAndIsOrthonormal) {
  std::mt19937_64 rng(101);
  for (int c = 0; c < kCases; ++c) {
    const int n = uniform_int(rng, 1, 50);
    const Matrix a = oracle::random_symmetric(rng, n);
    const auto e = sym_eigen(a);
    const Matrix recon = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LT(max_abs(recon - a), 1e-9 * std::max(1.0, max_abs(a))) << "case " << c << " n=" << n;
    EXPECT_LT(max_abs(e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)), 1e-10) << "case " << c;
    for (int i = 1; i < n; ++i) EXPECT_GE(e.values(i - 1), e.values(i));
  }
}

TEST(Numerics, PseudoInverseMoorePenrose) {
  std::mt19937_64 rng(102);
  for (int c = 0; c < kCases; ++c) {
    const int n = uniform_int(rng, 2, 30);
    const int rank = uniform_int(rng, 1, n);
    const Matrix a = oracle::random_psd(rng, n, rank);
    const Matrix p = pseudo_inverse(a);
    const double tol = 1e-7 * std::max(1.0, max_abs(a));
    EXPECT_LT(max_abs(a * p * a - a), tol) << "case " << c;
    EXPECT_LT(max_abs(p * a * p - p), 1e-7 * std::max(1.0, max_abs(p))) << "case " << c;
    EXPECT_LT(max_abs((a * p).transpose() - a * p), 1e-7) << "case " << c;
    EXPECT_LT(max_abs((p * a).transpose() - p * a), 1e-7) << "case " << c;
  }
}

TEST(Numerics, DoubleCenteringHasZeroMargins) {
  std::mt19937_64 rng(103);
  for (int c = 0; c < kCases; ++c) {
    const int n = uniform_int(rng, 2, 40);
    const Matrix d = oracle::pairwise_distances(random_points(rng, n));
    const Matrix b = double_center(d);
    EXPECT_LT(b.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10) << "case " << c;
    EXPECT_LT(b.colwise().sum().cwiseAbs().maxCoeff(), 1e-10) << "case " << c;
    EXPECT_LT(max_abs(b - b.transpose()), 1e-12);
  }
}

TEST(Smooth, PenaltiesArePsdOnRandomKnotSets) {
  std::mt19937_64 rng(104);
  for (int c = 0; c < kCases; ++c) {
    const int n = uniform_int(rng, 10, 200);
    const auto k = static_cast<std::size_t>(uniform_int(rng, 4, std::min(n, 40)));
    const ConnectivityCoords coords{"random", random_points(rng, n), {}};
    const auto basis = make_smooth(coords, k, static_cast<std::uint64_t>(c));
    ASSERT_EQ(basis.dim(), k - 1);
    const auto p1 = sym_eigen(basis.penalty).values;
    const auto p0 = sym_eigen(basis.null_penalty).values;
    EXPECT_GE(p1.minCoeff(), -1e-9 * std::max(1.0, p1.maxCoeff())) << "case " << c << " n=" << n << " k=" << k;
    EXPECT_GE(p0.minCoeff(), -1e-12) << "case " << c;
    EXPECT_GT(sym_eigen(basis.penalty + basis.null_penalty).values.minCoeff(), 0.0) << "case " << c;
    EXPECT_LT(basis.design.colwise().sum().cwiseAbs().maxCoeff(), 1e-8 * n) << "case " << c;
  }
}

TEST(Connectivity, DissimilarityIsMonotoneInFlow) {
  std::mt19937_64 rng(105);
  for (auto transform : {DissimilarityTransform::Reciprocal, DissimilarityTransform::OneMinus,
                         DissimilarityTransform::NegLog}) {
    for (int c = 0; c < kCases / 2; ++c) {
      const int n = uniform_int(rng, 3, 25);
      FlowMatrix f;
      f.flows = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) f.flows(i, j) = f.flows(j, i) = std::exp(uniform(rng, -5.0, 5.0));
      const Matrix d = flows_to_dissimilarity(f, transform);
      EXPECT_NEAR(d.diagonal().cwiseAbs().maxCoeff(), 0.0, 0.0);
      EXPECT_GE(d.minCoeff(), 0.0);
      EXPECT_LE(d.maxCoeff(), 1.0 + 1e-12);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
              if (i == j || a == b) continue;
              if (f.flows(i, j) > f.flows(a, b)) EXPECT_LE(d(i, j), d(a, b) + 1e-12);
            }
    }
  }
}

TEST(Coords, RescaleIsIdempotent) {
  std::mt19937_64 rng(106);
  for (int c = 0; c < kCases; ++c) {
    const int n = uniform_int(rng, 2, 100);
    Points p = random_points(rng, n) * uniform(rng, 0.1, 1e5);
    p.col(1).array() += uniform(rng, -1e3, 1e3);
    const Points once = rescale_unit_square(p);
    const Points twice = rescale_unit_square(once);
    EXPECT_LT(max_abs(once - twice), 1e-12) << "case " << c;
    EXPECT_NEAR(once.colwise().minCoeff().maxCoeff(), 0.0, 1e-15);
    EXPECT_NEAR(once.colwise().maxCoeff().minCoeff(), 1.0, 1e-15);
  }
}

TEST(Simgen, FieldIsWeightedSumOfComponents) {
  std::mt19937_64 rng(107);
  for (int c = 0; c < kCases; ++c) {
    const int n = uniform_int(rng, 5, 80);
    const int sources = uniform_int(rng, 1, 3);
    std::vector<ConnectivityCoords> sets;
    for (int s = 0; s < sources; ++s) sets.push_back({"s" + std::to_string(s), random_points(rng, n), {}});
    std::vector<double> phis(sources + 1);
    double total = 0.0;
    for (auto& p : phis) total += (p = uniform(rng));
    for (auto& p : phis) p /= total;
    const auto f = gen_latent_field(sets, phis, static_cast<std::uint64_t>(c));
    Vector sum = Vector::Zero(n);
    for (const auto& comp : f.components) sum += std::sqrt(comp.weight) * comp.values;
    EXPECT_LT((sum - f.values).cwiseAbs().maxCoeff(), 1e-12) << "case " << c;
    ASSERT_EQ(f.components.size(), phis.size());
    EXPECT_EQ(f.components.back().label, "iid");
  }
}

TEST(Metrics, AurocInvariantToMonotoneTransforms) {
  std::mt19937_64 rng(108);
  for (int c = 0; c < kCases; ++c) {
    const int n = uniform_int(rng, 2, 60);
    const auto trials = static_cast<std::size_t>(uniform_int(rng, 1, 20));
    Vector y(n), p(n);
    for (int i = 0; i < n; ++i) {
      p(i) = uniform(rng, 0.01, 0.99);
      y(i) = std::binomial_distribution<int>(static_cast<int>(trials), p(i))(rng);
    }
    if (y.sum() == 0.0) y(0) = 1.0;
    if (y.sum() == static_cast<double>(n * trials)) y(0) -= 1.0;
    const Vector logit = (p.array() / (1.0 - p.array())).log().matrix();
    const Vector cubed = p.array().cube().matrix();
    const double base = auroc(y, p, trials);
    EXPECT_NEAR(base, oracle::auroc_brute(y, p, trials), 1e-12) << "case " << c;
    EXPECT_NEAR(auroc(y, cubed, trials), base, 1e-12) << "case " << c;
    EXPECT_NEAR(auroc(y, (0.5 * logit.array()).exp().matrix(), trials), base, 1e-12) << "case " << c;
  }
}

TEST(Metrics, DecompositionIsShiftInvariant) {
  std::mt19937_64 rng(109);
  for (int c = 0; c < kCases / 2; ++c) {
    const int draws = uniform_int(rng, 20, 200);
    const int n = uniform_int(rng, 5, 40);
    std::vector<TermDraws> terms{{"a", random_draws(rng, draws, n, 1.0)}, {"b", random_draws(rng, draws, n, 0.5)}};
    const auto base = variance_decomposition(terms);
    for (auto& t : terms) {
      for (int s = 0; s < draws; ++s) t.values.row(s).array() += uniform(rng, -10.0, 10.0);
    }
    const auto shifted = variance_decomposition(terms);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_NEAR(shifted.terms[k].mean, base.terms[k].mean, 1e-9) << "case " << c;
      EXPECT_NEAR(shifted.terms[k].lo, base.terms[k].lo, 1e-9);
      EXPECT_NEAR(shifted.terms[k].hi, base.terms[k].hi, 1e-9);
    }
  }
}

TEST(Metrics, ScoresAreNonNegative) {
  std::mt19937_64 rng(110);
  for (int c = 0; c < kCases; ++c) {
    const int n = uniform_int(rng, 1, 50);
    const auto trials = static_cast<std::size_t>(uniform_int(rng, 1, 30));
    Vector y(n), p(n), fitted(n);
    for (int i = 0; i < n; ++i) {
      y(i) = uniform_int(rng, 0, static_cast<int>(trials));
      p(i) = uniform(rng);
      fitted(i) = uniform(rng, 0.0, 40.0);
    }
    EXPECT_GE(mae(y, fitted), 0.0);
    EXPECT_EQ(mae(y, y), 0.0);
    for (auto conv : {BrierConvention::PerTrial, BrierConvention::PerArea}) {
      const double b = brier(y, p, trials, conv);
      EXPECT_GE(b, 0.0) << "case " << c;
      EXPECT_LE(b, 1.0) << "case " << c;
    }
  }
}

TEST(Metrics, WaicOrdering) {
  std::mt19937_64 rng(111);
  for (int c = 0; c < kCases; ++c) {
    const int draws = uniform_int(rng, 2, 100);
    const int n = uniform_int(rng, 1, 30);
    Matrix ll = random_draws(rng, draws, n, 1.0).array() - 3.0;
    const auto base = waic(ll);
    // Jensen: the log of the mean likelihood dominates the mean log likelihood.
    EXPECT_GE(base.lppd, ll.colwise().mean().sum() - 1e-12) << "case " << c;
    EXPECT_GE(base.p_waic, 0.0);
    const double shift = uniform(rng, 0.1, 2.0);
    const auto better = waic((ll.array() + shift).matrix());
    EXPECT_NEAR(better.waic, base.waic - 2.0 * shift * n, 1e-9) << "case " << c;
    EXPECT_NEAR(better.p_waic, base.p_waic, 1e-9);
    EXPECT_LT(better.waic, base.waic);
  }
}
