#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "depkde/selectors.hpp"
#include "oracles.hpp"

using namespace depkde;

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

double phi4(double u) { return (u * u * u * u - 6 * u * u + 3) * oracle::phi(u); }
double phi6(double u) {
  const double u2 = u * u;
  return (u2 * u2 * u2 - 15 * u2 * u2 + 45 * u2 - 15) * oracle::phi(u);
}

// Fourth derivative of the N(0, 2) density.
double conv4(double u) {
  const double g = std::exp(-u * u / 4.0) / (2.0 * std::sqrt(std::numbers::pi));
  return g * (u * u * u * u / 16.0 - 0.75 * u * u + 0.75);
}

const double RK = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
const double RK2 = 3.0 / (8.0 * std::sqrt(std::numbers::pi));

}  // namespace

TEST(Pilots, FrozenFormulaValues) {
  // 10^4 equally spaced points; IQR = 0.9999 under type-7 quantiles.
  const auto ys = linspace(-1.0, 1.0, 10001);
  std::vector<double> trimmed(ys.begin(), ys.end() - 1);
  const auto p = pilot_bandwidths(trimmed);
  EXPECT_NEAR(p.iqr, 0.9999, 1e-12);
  EXPECT_NEAR(p.a / p.iqr, 0.24680801316573477, 1e-12);
  EXPECT_NEAR(p.b / p.iqr, 0.32775580613898201, 1e-12);
}

TEST(Pilots, ScaleEquivariantAndDegenerate) {
  auto ys = oracle::normal_draws(300, 3);
  const auto p = pilot_bandwidths(ys);
  for (auto& y : ys) y *= 2.5;
  const auto q = pilot_bandwidths(ys);
  EXPECT_NEAR(q.a, 2.5 * p.a, 1e-12);
  EXPECT_NEAR(q.b, 2.5 * p.b, 1e-12);
  const std::vector<double> flat{1, 2, 2, 2, 2, 2, 3};
  EXPECT_THROW(pilot_bandwidths(flat), degenerate_sample);
}

TEST(Functionals, TwoPointsAtOrigin) {
  const std::vector<double> ys{0.0, 0.0};
  EXPECT_NEAR(S_functional(ys, 1.0), 2.3936536824085961, 1e-14);
  EXPECT_NEAR(T_functional(ys, 1.0), 11.968268412042980, 1e-13);
  EXPECT_THROW(S_functional(ys, 0.0), std::invalid_argument);
  EXPECT_THROW(T_functional(ys, -1.0), std::invalid_argument);
}

TEST(Functionals, MatchDirectDoubleSum) {
  const auto ys = oracle::normal_draws(150, 5);
  const double n = 150.0;
  for (bool diag : {true, false}) {
    const double s = oracle::double_sum(ys, phi4, 0.4, diag) /
                     (n * (n - 1) * std::pow(0.4, 5));
    const double t = -oracle::double_sum(ys, phi6, 0.5, diag) /
                     (n * (n - 1) * std::pow(0.5, 7));
    EXPECT_NEAR(S_functional(ys, 0.4, diag), s, 1e-10 * std::abs(s));
    EXPECT_NEAR(T_functional(ys, 0.5, diag), t, 1e-10 * std::abs(t));
  }
}

TEST(Functionals, BinnedMatchesDirect) {
  PairSumOptions force_bins;
  force_bins.binning_threshold = 0;
  std::mt19937 rng(17);
  for (int c = 0; c < 20; ++c) {
    const std::size_t n = 200 + 90 * static_cast<std::size_t>(c);
    const auto ys = oracle::normal_draws(n, 100 + c, 0.0, 1.0 + 0.1 * c);
    const double g = 0.3 * (1.0 + 0.1 * c), b = 0.4 * (1.0 + 0.1 * c);
    const double s = S_functional(ys, g), sb = S_functional(ys, g, true, force_bins);
    const double t = T_functional(ys, b), tb = T_functional(ys, b, true, force_bins);
    EXPECT_LT(std::abs(sb / s - 1.0), 1e-3) << "case " << c;
    EXPECT_LT(std::abs(tb / t - 1.0), 1e-3) << "case " << c;
  }
  const auto ys = oracle::normal_draws(2000, 9);
  EXPECT_LT(std::abs(S_functional(ys, 0.3, true, force_bins) / S_functional(ys, 0.3) - 1), 1e-3);
  EXPECT_LT(std::abs(T_functional(ys, 0.4, true, force_bins) / T_functional(ys, 0.4) - 1), 1e-3);
}

TEST(Functionals, ScaleEquivariance) {
  auto ys = oracle::normal_draws(400, 21);
  const double s = S_functional(ys, 0.35), t = T_functional(ys, 0.45);
  const double c = 3.0;
  for (auto& y : ys) y *= c;
  EXPECT_NEAR(S_functional(ys, c * 0.35), s * std::pow(c, -5), 1e-12 * std::abs(s));
  EXPECT_NEAR(T_functional(ys, c * 0.45), t * std::pow(c, -7), 1e-12 * std::abs(t));
}

TEST(Functionals, DiagonalContribution) {
  const auto ys = oracle::normal_draws(100, 8);
  const double g = 0.5, n = 100.0;
  const double gap = S_functional(ys, g, true) - S_functional(ys, g, false);
  EXPECT_NEAR(gap, n * phi4(0.0) / (n * (n - 1) * std::pow(g, 5)), 1e-10);
}

TEST(GHat, PowerLaw) {
  EXPECT_DOUBLE_EQ(g_hat(2.0, 2.0, 1.0), 1.357);
  const double r = g_hat(3.0, 0.7, 0.8) / g_hat(3.0, 0.7, 0.4);
  EXPECT_NEAR(r, std::pow(2.0, 5.0 / 7.0), 1e-14);
}

TEST(GHat, NonpositivePilotsThrowWithValues) {
  try {
    g_hat(-0.5, 2.0, 1.0);
    FAIL();
  } catch (const pilot_failure& e) {
    EXPECT_EQ(e.s_a, -0.5);
    EXPECT_EQ(e.t_b, 2.0);
  }
  EXPECT_THROW(g_hat(1.0, 0.0, 1.0), pilot_failure);
}

TEST(GHat, ReproducibleAtSelectedBandwidth) {
  const auto ys = oracle::normal_draws(10000, 4, 3.0, 2.0);
  const auto cfg = default_config(ys, Method::SJse);
  const auto r1 = BandwidthSelector(ys).select(cfg);
  const auto r2 = BandwidthSelector(ys).select(cfg);
  EXPECT_EQ(r1.h, r2.h);
  const auto p = pilot_bandwidths(ys);
  EXPECT_EQ(g_hat(ys, r1.h, p), g_hat(ys, r2.h, p));
}

TEST(Objectives, BcvTermByTerm) {
  const auto ys = oracle::normal_draws(50, 12);
  const double n = 50.0, h = 0.5;
  const double variance = RK / (n * h);
  const double rough = oracle::double_sum(ys, conv4, h) / (n * n * std::pow(h, 5));
  const double bias = std::pow(h, 4) / 4.0 * (rough - RK2 / (n * std::pow(h, 5)));
  EXPECT_NEAR(bcv_objective(ys, h), variance + bias, 1e-10);
  EXPECT_THROW(bcv_objective(ys, 0.0), std::invalid_argument);
}

TEST(Objectives, SjTermByTerm) {
  const auto ys = oracle::normal_draws(50, 13);
  const double n = 50.0, h = 0.5;
  const auto p = pilot_bandwidths(ys);
  const double sa = oracle::double_sum(ys, phi4, p.a) / (n * (n - 1) * std::pow(p.a, 5));
  const double tb = -oracle::double_sum(ys, phi6, p.b) / (n * (n - 1) * std::pow(p.b, 7));
  const double g = 1.357 * std::pow(sa / tb, 1.0 / 7.0) * std::pow(h, 5.0 / 7.0);
  const double s = oracle::double_sum(ys, phi4, g) / (n * (n - 1) * std::pow(g, 5));
  const double expect = RK / (n * h) + std::pow(h, 4) / 4.0 * s;

  BandwidthSelector sel(ys);
  EXPECT_NEAR(sj_objective(sel.plugin(true), h), expect, 1e-10);
}

TEST(Objectives, ZetaReductionAndLinearity) {
  const auto ys = oracle::normal_draws(300, 14);
  const PairwiseSums pairs(ys);
  BandwidthSelector sel(ys);
  const auto st = sel.plugin(true);
  for (double h : {0.1, 0.3, 0.9}) {
    EXPECT_EQ(mbcv_objective(pairs, h, 1.0), bcv_objective(pairs, h));
    EXPECT_EQ(msj_objective(st, h, 1.0), sj_objective(st, h));
    EXPECT_NEAR(mbcv_objective(pairs, h, 2.0) - bcv_objective(pairs, h),
                RK / (300.0 * h), 1e-14);
    EXPECT_NEAR(msj_objective(st, h, 3.0) - sj_objective(st, h),
                2.0 * RK / (300.0 * h), 1e-14);
  }
  EXPECT_THROW(mbcv_objective(pairs, 0.3, -1.0), std::invalid_argument);
}

TEST(Objectives, BcvRisesTowardsUpperBracket) {
  const auto ys = oracle::normal_draws(400, 15);
  const auto cfg = default_config(ys, Method::BCV);
  const double h = BandwidthSelector(ys).select(cfg).h;
  double prev = bcv_objective(ys, h);
  for (double f = 1.5; f * h < cfg.bracket.hi; f *= 1.5) {
    const double v = bcv_objective(ys, f * h);
    EXPECT_GT(v, prev) << "h=" << f * h;
    prev = v;
  }
}

TEST(Minimize, Quadratic) {
  const SearchBracket br{0.01, 2.0, 1e-5};
  const auto r = minimize_objective([](double h) { return (h - 0.3) * (h - 0.3); }, br);
  EXPECT_NEAR(r.h, 0.3, 1e-5);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.boundary, BoundaryHit::None);
}

TEST(Minimize, AmiseClosedForm) {
  const double rf2 = 3.0 / (8.0 * std::sqrt(std::numbers::pi));
  for (auto [n, expect] : {std::pair{1e3, 0.26606499942619717},
                           std::pair{1e4, 0.16787566549707751}}) {
    const double hns = 1.06 * std::pow(n, -0.2);
    const SearchBracket br{0.05 * hns, 5 * hns, 1e-4 * hns};
    auto amise = [&](double h) { return RK / (n * h) + std::pow(h, 4) / 4.0 * rf2; };
    EXPECT_NEAR(minimize_objective(amise, br).h, expect, br.tol);
  }
}

TEST(Minimize, CoarseScanFindsGlobalWell) {
  auto two_wells = [](double h) {
    const double l = std::log(h);
    return -std::exp(-std::pow((l - std::log(0.2)) / 0.15, 2)) -
           2.0 * std::exp(-std::pow((l - std::log(1.5)) / 0.15, 2));
  };
  const auto r = minimize_objective(two_wells, SearchBracket{0.05, 5.0, 1e-5});
  EXPECT_NEAR(r.h, 1.5, 1e-4);
}

TEST(Minimize, BoundaryAndErrors) {
  const auto r = minimize_objective([](double h) { return h; }, SearchBracket{0.1, 1.0, 1e-4});
  EXPECT_EQ(r.boundary, BoundaryHit::Lo);
  EXPECT_FALSE(r.converged);
  const auto s = minimize_objective([](double h) { return -h; }, SearchBracket{0.1, 1.0, 1e-4});
  EXPECT_EQ(s.boundary, BoundaryHit::Hi);
  try {
    minimize_objective([](double h) { return h > 0.5 ? NAN : h; }, SearchBracket{0.1, 1.0, 1e-4});
    FAIL();
  } catch (const objective_error& e) {
    EXPECT_GT(e.h, 0.5);
  }
  EXPECT_THROW(minimize_objective([](double) { return 0.0; }, SearchBracket{1.0, 0.5, 1e-4}),
               std::invalid_argument);
  EXPECT_THROW(minimize_objective([](double) { return 0.0; }, SearchBracket{0.5, 1.0, 1e-9}),
               std::invalid_argument);
}

TEST(Root, StubbedFunctionalScalesWithZeta) {
  const double n = 1000.0, s = 0.2;
  const SearchBracket br{0.01, 5.0, 1e-8};
  auto root = [&](double zeta) {
    return find_root([&](double h) { return equation_residual(h, n, s, zeta); }, br, 0.3).h;
  };
  const double h1 = root(1.0), h32 = root(32.0);
  EXPECT_NEAR(h1, std::pow(RK / (n * s), 0.2), 1e-8);
  EXPECT_NEAR(h32 / h1, 2.0, 1e-7);
}

TEST(Root, NoSignChangeAndMultipleRoots) {
  const SearchBracket br{0.1, 5.0, 1e-6};
  try {
    find_root([](double h) { return h + 1.0; }, br, 1.0);
    FAIL();
  } catch (const root_not_found& e) {
    EXPECT_NEAR(e.residual_lo, 1.1, 1e-12);
    EXPECT_NEAR(e.residual_hi, 6.0, 1e-12);
  }
  const auto r = find_root([](double h) { return (h - 0.5) * (h - 1.0) * (h - 2.0); }, br, 1.1);
  EXPECT_NEAR(r.h, 1.0, 1e-5);
  EXPECT_TRUE(r.multiple_roots);
  EXPECT_TRUE(r.converged);
}

TEST(SolveTheEquation, ResidualWithinToleranceAndReproducible) {
  const auto ys = oracle::normal_draws(1500, 31);
  auto cfg = default_config(ys, Method::SJse);
  BandwidthSelector sel(ys);
  const auto r = sel.solve_the_equation(false, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(std::abs(r.objective_at_h), cfg.bracket.tol);
  EXPECT_GE(r.h, cfg.bracket.lo);
  EXPECT_LE(r.h, cfg.bracket.hi);
  const auto st = sel.plugin(true);
  EXPECT_NEAR(equation_residual(r.h, 1500.0, st.S_at(r.h), 1.0), r.objective_at_h, 1e-15);
  EXPECT_EQ(BandwidthSelector(ys).solve_the_equation(false, cfg).h, r.h);
}

TEST(SolveTheEquation, InjectedZetaScalesRootUp) {
  const auto ys = oracle::normal_draws(1500, 32);
  auto cfg = default_config(ys, Method::mSJse);
  BandwidthSelector sel(ys);
  const double h1 = sel.solve_the_equation(false, cfg).h;
  cfg.zeta_override = 1.0;
  EXPECT_EQ(sel.solve_the_equation(true, cfg).h, h1);
  cfg.zeta_override = 4.0;
  EXPECT_GT(sel.solve_the_equation(true, cfg).h, h1);
}

TEST(Select, ReductionToStandardMethods) {
  const auto ys = oracle::normal_draws(800, 41);
  BandwidthSelector sel(ys);
  for (Method m : {Method::mBCV, Method::mSJse, Method::mSJmin}) {
    auto cfg = default_config(ys, m);
    cfg.zeta_override = 1.0;
    auto std_cfg = default_config(ys, standard_of(m));
    const auto a = sel.select(cfg);
    const auto b = sel.select(std_cfg);
    EXPECT_EQ(a.h, b.h) << method_name(m);
    EXPECT_EQ(a.objective_at_h, b.objective_at_h) << method_name(m);
    EXPECT_EQ(b.zeta_at_h, 1.0);
  }
}

TEST(Select, MonotoneResponseToInjectedZeta) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto ys = oracle::normal_draws(600, 50 + seed);
    BandwidthSelector sel(ys);
    for (Method m : {Method::mBCV, Method::mSJmin}) {
      double prev = 0.0;
      for (double kappa : {1.0, 2.0, 8.0}) {
        auto cfg = default_config(ys, m);
        cfg.zeta_override = kappa;
        const double h = sel.select(cfg).h;
        EXPECT_GT(h, prev) << method_name(m) << " kappa " << kappa;
        prev = h;
      }
    }
  }
}

TEST(Select, PilotFailureFallsBackToNormalScale) {
  const auto ys = oracle::normal_draws(500, 61);
  BandwidthSelector sel(ys);
  sel.set_plugin(true, 1.0, -0.3);
  for (Method m : {Method::SJse, Method::SJmin}) {
    const auto r = sel.select(default_config(ys, m));
    EXPECT_TRUE(r.pilot_fallback);
    EXPECT_EQ(r.h, normal_scale_bandwidth(ys));
  }
  const auto bcv = sel.select(default_config(ys, Method::BCV));
  EXPECT_FALSE(bcv.pilot_fallback);
  EXPECT_THROW(sel.solve_the_equation(false, default_config(ys, Method::SJse)),
               pilot_failure);
}

TEST(Select, ModifiedSelectorsOversmoothDependentSeries) {
  const auto ys = oracle::ar1(4000, 0.9, 71);
  BandwidthSelector sel(ys);
  const auto bcv = sel.select(default_config(ys, Method::BCV));
  const auto mbcv = sel.select(default_config(ys, Method::mBCV));
  EXPECT_GT(mbcv.zeta_at_h, 2.0);
  EXPECT_GT(mbcv.h, bcv.h);
  const auto sj = sel.select(default_config(ys, Method::SJse));
  const auto msj = sel.select(default_config(ys, Method::mSJse));
  EXPECT_GT(msj.h, sj.h);
  EXPECT_GT(sel.zeta_cache().size(), 0u);
}

TEST(Select, NamesRoundTrip) {
  for (Method m : all_methods) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_FALSE(parse_method("LSCV").has_value());
}
