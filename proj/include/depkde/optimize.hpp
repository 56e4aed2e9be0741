#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "depkde/errors.hpp"

namespace depkde {

enum class BoundaryHit { None, Lo, Hi };

//! Bandwidth search interval and target accuracy on h.
struct SearchBracket {
  double lo;
  double hi;
  double tol;
  std::size_t coarse_points = 40;

  void validate() const {
    if (!(lo > 0.0 && lo < hi))
      throw std::invalid_argument("search bracket needs 0 < lo < hi");
    if (!(tol >= 1e-6 * lo))
      throw std::invalid_argument("tolerance must be >= 1e-6 * lo");
    if (coarse_points < 3)
      throw std::invalid_argument("coarse scan needs >= 3 points");
  }

  //! Log-spaced scan points lo = h_0 < ... < h_{k-1} = hi.
  std::vector<double> coarse_grid() const {
    std::vector<double> hs(coarse_points);
    const double llo = std::log(lo);
    const double step = (std::log(hi) - llo) / static_cast<double>(coarse_points - 1);
    for (std::size_t k = 0; k < coarse_points; ++k)
      hs[k] = std::exp(llo + static_cast<double>(k) * step);
    hs.front() = lo;
    hs.back() = hi;
    return hs;
  }
};

struct MinimizeResult {
  double h;
  double value;
  std::size_t evaluations;
  bool converged;
  BoundaryHit boundary;
};

namespace detail {

inline double checked(const std::function<double(double)>& f, double h,
                      std::size_t& evals) {
  ++evals;
  const double v = f(h);
  if (!std::isfinite(v)) throw objective_error(h);
  return v;
}

}  // namespace detail

//! Coarse log-grid scan followed by golden-section search in log h around
//! the best scan point. The scan guards against local minima; the golden
//! stage stops once the bracket is narrower than tol in h.
inline MinimizeResult minimize_objective(
    const std::function<double(double)>& objective,
    const SearchBracket& bracket) {
  bracket.validate();
  std::size_t evals = 0;
  const auto hs = bracket.coarse_grid();
  std::vector<double> vals(hs.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    vals[k] = detail::checked(objective, hs[k], evals);
    if (vals[k] < vals[best]) best = k;
  }
  BoundaryHit boundary = BoundaryHit::None;
  if (best == 0) boundary = BoundaryHit::Lo;
  if (best + 1 == hs.size()) boundary = BoundaryHit::Hi;

  const std::size_t left = best == 0 ? 0 : best - 1;
  const std::size_t right = std::min(best + 1, hs.size() - 1);
  double a = std::log(hs[left]);
  double b = std::log(hs[right]);
  double best_h = hs[best];
  double best_v = vals[best];

  constexpr double inv_phi = 0.6180339887498948482;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = detail::checked(objective, std::exp(c), evals);
  double fd = detail::checked(objective, std::exp(d), evals);
  for (int iter = 0; iter < 200 && std::exp(b) - std::exp(a) > bracket.tol;
       ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = detail::checked(objective, std::exp(c), evals);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = detail::checked(objective, std::exp(d), evals);
    }
  }
  if (fc < best_v) {
    best_v = fc;
    best_h = std::exp(c);
  }
  if (fd < best_v) {
    best_v = fd;
    best_h = std::exp(d);
  }
  const bool converged = boundary == BoundaryHit::None &&
                         std::exp(b) - std::exp(a) <= bracket.tol;
  return {best_h, best_v, evals, converged, boundary};
}

struct RootResult {
  double h;
  double residual;
  std::size_t evaluations;
  bool converged;
  bool multiple_roots;
};

//! Root of `residual` on the bracket. Sign changes are located on the coarse
//! log grid; with several, the one nearest `anchor` (in log h) is taken.
//! Refinement is Illinois regula falsi with a bisection safeguard, stopping
//! when |residual| <= tol.
inline RootResult find_root(const std::function<double(double)>& residual,
                            const SearchBracket& bracket, double anchor) {
  bracket.validate();
  std::size_t evals = 0;
  const auto hs = bracket.coarse_grid();
  std::vector<double> rs(hs.size());
  for (std::size_t k = 0; k < hs.size(); ++k) {
    rs[k] = detail::checked(residual, hs[k], evals);
    if (rs[k] == 0.0) return {hs[k], 0.0, evals, true, false};
  }

  std::vector<std::size_t> changes;
  for (std::size_t k = 0; k + 1 < hs.size(); ++k)
    if ((rs[k] < 0.0) != (rs[k + 1] < 0.0)) changes.push_back(k);
  if (changes.empty()) throw root_not_found(rs.front(), rs.back());

  std::size_t pick = changes.front();
  const double log_anchor = std::log(anchor);
  auto dist = [&](std::size_t k) {
    const double mid = 0.5 * (std::log(hs[k]) + std::log(hs[k + 1]));
    return std::abs(mid - log_anchor);
  };
  for (std::size_t k : changes)
    if (dist(k) < dist(pick)) pick = k;

  double a = hs[pick], b = hs[pick + 1];
  double fa = rs[pick], fb = rs[pick + 1];
  double x = a, fx = fa;
  int side = 0;
  for (int iter = 0; iter < 200; ++iter) {
    x = (a * fb - b * fa) / (fb - fa);
    // bisection when the secant step leaves the interior
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    fx = detail::checked(residual, x, evals);
    if (std::abs(fx) <= bracket.tol || b - a <= 1e-3 * bracket.tol) break;
    if ((fx < 0.0) == (fa < 0.0)) {
      a = x;
      fa = fx;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = x;
      fb = fx;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  return {x, fx, evals, std::abs(fx) <= bracket.tol, changes.size() > 1};
}

}  // namespace depkde
