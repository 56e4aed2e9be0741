#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "depkde/density.hpp"
#include "oracles.hpp"

using namespace depkde;

namespace {

// f_h''(x) straight from its definition.
double fhat2(std::span<const double> ys, double h, double x) {
  double acc = 0.0;
  for (double y : ys) {
    const double u = (x - y) / h;
    acc += (u * u - 1.0) * oracle::phi(u);
  }
  return acc / (static_cast<double>(ys.size()) * h * h * h);
}

double roughness_by_quadrature(std::span<const double> ys, double h) {
  const auto [mn, mx] = std::minmax_element(ys.begin(), ys.end());
  const double lo = *mn - 12 * h, hi = *mx + 12 * h;
  const std::size_t m = 20001;
  const double dx = (hi - lo) / (m - 1);
  std::vector<double> v(m);
  for (std::size_t k = 0; k < m; ++k) v[k] = std::pow(fhat2(ys, h, lo + k * dx), 2);
  return oracle::simpson_uniform(v, dx);
}

}  // namespace

TEST(Sample, RejectsDegenerateInput) {
  EXPECT_THROW(Sample({1.0}), degenerate_sample);
  EXPECT_THROW(Sample({2.0, 2.0, 2.0}), degenerate_sample);
  EXPECT_THROW(Sample({0.0, std::nan("")}), degenerate_sample);
  EXPECT_NO_THROW(Sample({0.0, 1.0}));
}

TEST(Grid, UniformAndPadded) {
  const auto ys = oracle::normal_draws(300, 4);
  const double h = 0.3;
  const auto g = make_grid(ys, h);
  ASSERT_EQ(g.size(), default_grid_points);
  for (std::size_t k = 1; k < g.size(); ++k)
    EXPECT_NEAR((g[k] - g[k - 1]) / g.spacing(), 1.0, 1e-12);
  const auto [mn, mx] = std::minmax_element(ys.begin(), ys.end());
  EXPECT_LE(g.lo(), *mn - 8 * h);
  EXPECT_GE(g.hi(), *mx + 8 * h);
}

TEST(Kde, PointValues) {
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_DOUBLE_EQ(kde_at(zeros, 1.0, 0.0), gauss_pdf(0.0));
  const std::vector<double> pm{-1.0, 1.0};
  EXPECT_DOUBLE_EQ(kde_at(pm, 1.0, 0.0), 0.24197072451914337);
  EXPECT_THROW(kde_at(pm, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(kde_at(pm, -1.0, 0.0), std::invalid_argument);
}

TEST(Kde, LocationEquivariance) {
  const auto ys = oracle::normal_draws(50, 9);
  std::vector<double> shifted(ys);
  for (auto& y : shifted) y += 5.0;
  for (double x : {-1.0, 0.0, 0.7})
    EXPECT_NEAR(kde_at(shifted, 0.4, x + 5.0), kde_at(ys, 0.4, x), 1e-14);
}

TEST(Kde, CurveMatchesDirectLoopExactly) {
  const auto ys = oracle::normal_draws(500, 1);
  const double h = 0.3;
  const auto grid = make_grid(ys, h);
  const auto curve = kde_curve(ys, h, grid);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double acc = 0.0;
    for (double y : ys) acc += gauss_pdf((grid[k] - y) / h);
    worst = std::max(worst, std::abs(curve[k] - acc / (500 * h)));
  }
  EXPECT_EQ(worst, 0.0);
  EXPECT_NEAR(trapezoid(curve, grid.spacing()), 1.0, 1e-3);

  const EvaluationGrid single(0.2, 0.2, 1);
  EXPECT_EQ(kde_curve(ys, h, single).at(0), kde_at(ys, h, 0.2));
}

TEST(Kde, ConcurrentEvaluationMatchesSequential) {
  const auto ys = oracle::normal_draws(400, 2);
  const auto grid = make_grid(ys, 0.25);
  const auto seq = kde_curve(ys, 0.25, grid);
  std::vector<double> par(grid.size());
  {
    std::jthread a([&] { for (std::size_t k = 0; k < grid.size(); k += 2) par[k] = kde_at(ys, 0.25, grid[k]); });
    std::jthread b([&] { for (std::size_t k = 1; k < grid.size(); k += 2) par[k] = kde_at(ys, 0.25, grid[k]); });
  }
  for (std::size_t k = 0; k < grid.size(); ++k)
    EXPECT_NEAR(par[k], seq[k], 1e-12 * std::max(seq[k], 1e-300));
}

TEST(Kde, BinnedCurveIsCloseToExact) {
  const auto ys = oracle::normal_draws(2000, 3);
  const double h = 0.2;
  const auto grid = make_grid(ys, 5 * h);
  const auto exact = kde_curve(ys, h, grid);
  const auto binned = binned_kde_curve(ys, h, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    EXPECT_NEAR(binned[k], exact[k], 2e-3);
}

TEST(Roughness, TwoPointsAtOriginMatchesClosedFormAndQuadrature) {
  const std::vector<double> zeros{0.0, 0.0};
  const double r = roughness_fhat2(zeros, 1.0);
  EXPECT_NEAR(r, kernel_functionals().roughness_K2, 1e-15);
  EXPECT_NEAR(r / roughness_by_quadrature(zeros, 1.0), 1.0, 1e-6);
}

TEST(Roughness, PairwiseIdentityMatchesQuadrature) {
  const auto ys = oracle::normal_draws(200, 5);
  EXPECT_NEAR(roughness_fhat2(ys, 0.4) / roughness_by_quadrature(ys, 0.4), 1.0, 1e-5);
}

TEST(Roughness, RandomInstancesMatchQuadrature) {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> size(2, 120);
  std::uniform_real_distribution<double> bw(0.15, 1.5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto ys = oracle::normal_draws(size(rng), 100 + rep, 1.0, 2.0);
    const double h = bw(rng);
    EXPECT_NEAR(roughness_fhat2(ys, h) / roughness_by_quadrature(ys, h), 1.0, 1e-5)
        << "rep " << rep;
  }
}

TEST(Roughness, ScaleEquivariance) {
  const auto ys = oracle::normal_draws(100, 6);
  std::vector<double> scaled(ys);
  for (auto& y : scaled) y *= 2.0;
  EXPECT_NEAR(roughness_fhat2(scaled, 0.8) / roughness_fhat2(ys, 0.4),
              std::pow(2.0, -5), 1e-12);
  EXPECT_THROW(roughness_fhat2(ys, 0.0), std::invalid_argument);
}

TEST(Roughness, BinnedMatchesDirect) {
  const auto ys = oracle::normal_draws(2000, 8);
  PairSumOptions binned;
  binned.binning_threshold = 0;
  for (double h : {0.2, 0.4}) {
    const double direct = roughness_fhat2(ys, h);
    EXPECT_NEAR(roughness_fhat2(ys, h, binned) / direct, 1.0, 1e-3);
  }
}

TEST(Ise, IdentityIsZero) {
  const auto truth = TargetDistribution::normal(0.0, 1.0);
  const EvaluationGrid grid(-10, 10, 1001);
  std::vector<double> curve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) curve[k] = truth.pdf(grid[k]);
  EXPECT_EQ(ise_of_curve(curve, truth, grid), 0.0);
}

TEST(Ise, TrapezoidAgreesWithSimpson) {
  const auto ys = oracle::normal_draws(100, 10);
  const auto truth = TargetDistribution::normal(0.0, 1.0);
  auto grid = make_grid(ys, 0.5);
  grid = grid.resampled(2049);  // odd count for Simpson
  const double trap = ise(ys, 0.5, truth, grid);
  const auto curve = kde_curve(ys, 0.5, grid);
  std::vector<double> sq(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) sq[k] = std::pow(curve[k] - truth.pdf(grid[k]), 2);
  EXPECT_NEAR(trap, oracle::simpson_uniform(sq, grid.spacing()), 1e-6);
  EXPECT_GE(trap, 0.0);
}

TEST(Ise, CoverageErrorWhenGridMissesTruth) {
  const auto ys = oracle::normal_draws(100, 11);
  const auto truth = TargetDistribution::normal(20.0, 1.0);
  EXPECT_THROW(ise(ys, 0.5, truth, make_grid(ys, 0.5)), coverage_error);
}

TEST(Ise, VanishesForLargeSamples) {
  const auto ys = oracle::normal_draws(100000, 12);
  const auto truth = TargetDistribution::normal(0.0, 1.0);
  const double h = 1.06 * robust_scale(ys) * std::pow(1e5, -0.2);
  const auto grid = make_grid(ys, h).resampled(1024);
  EXPECT_LT(ise(ys, h, truth, grid), 0.01);
}
