#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "depkde/errors.hpp"
#include "depkde/kernel.hpp"
#include "depkde/pairwise.hpp"
#include "depkde/sample.hpp"
#include "depkde/target.hpp"

namespace depkde {

//! Uniform grid x_0 < ... < x_{m-1} used for all quadrature.
class EvaluationGrid {
 public:
  EvaluationGrid(double lo, double hi, std::size_t m) : lo_(lo), hi_(hi) {
    if (m == 0) throw std::invalid_argument("grid needs at least one point");
    if (m > 1 && !(hi > lo))
      throw std::invalid_argument("grid bounds must satisfy lo < hi");
    spacing_ = m > 1 ? (hi - lo) / static_cast<double>(m - 1) : 0.0;
    points_.resize(m);
    for (std::size_t k = 0; k < m; ++k)
      points_[k] = lo + static_cast<double>(k) * spacing_;
    if (m > 1) points_.back() = hi;
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<double>& points() const noexcept { return points_; }
  double operator[](std::size_t k) const noexcept { return points_[k]; }

  //! Same span, fewer points.
  EvaluationGrid resampled(std::size_t m) const {
    return EvaluationGrid(lo_, hi_, m);
  }

 private:
  double lo_;
  double hi_;
  double spacing_;
  std::vector<double> points_;
};

inline constexpr std::size_t default_grid_points = 2048;

//! Grid over [min Y - pad, max Y + pad] with
//! pad = max(8h, 5 * scale * n^(-1/5)), scale = min(sd, IQR/1.349).
inline EvaluationGrid make_grid(std::span<const double> ys, double h,
                                std::size_t m = default_grid_points) {
  if (!(h > 0.0)) throw std::invalid_argument("make_grid: h must be > 0");
  const auto [mn, mx] = std::minmax_element(ys.begin(), ys.end());
  const double n = static_cast<double>(ys.size());
  const double pad =
      std::max(8.0 * h, 5.0 * robust_scale(ys) * std::pow(n, -0.2));
  return EvaluationGrid(*mn - pad, *mx + pad, m);
}

//! Trapezoidal rule on uniform spacing.
inline double trapezoid(std::span<const double> values, double spacing) {
  if (values.size() < 2) return 0.0;
  double acc = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k + 1 < values.size(); ++k) acc += values[k];
  return acc * spacing;
}

//! (nh)^-1 sum_i K((x - Y_i)/h).
inline double kde_at(std::span<const double> ys, double h, double x) {
  if (!(h > 0.0)) throw std::invalid_argument("kde_at: h must be > 0");
  double acc = 0.0;
  for (double y : ys) {
    const double u = (x - y) / h;
    // exp(-u^2/2) is exactly zero past the cutoff
    if (std::abs(u) <= PairwiseSums::cutoff) acc += gauss_pdf(u);
  }
  return acc / (static_cast<double>(ys.size()) * h);
}

inline std::vector<double> kde_curve(std::span<const double> ys, double h,
                                     const EvaluationGrid& grid) {
  if (!(h > 0.0)) throw std::invalid_argument("kde_curve: h must be > 0");
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = kde_at(ys, h, grid[k]);
  return out;
}

//! KDE on a grid from linear-binned counts. Approximates kde_curve with an
//! extra smoothing of order spacing^2; used only inside optimizer loops.
//! Data must lie inside the grid.
inline std::vector<double> binned_kde_curve(std::span<const double> ys,
                                            double h,
                                            const EvaluationGrid& grid) {
  if (!(h > 0.0))
    throw std::invalid_argument("binned_kde_curve: h must be > 0");
  const std::size_t m = grid.size();
  const double delta = grid.spacing();
  std::vector<double> counts(m, 0.0);
  for (double y : ys) {
    const double pos = (y - grid.lo()) / delta;
    if (pos < 0.0 || pos > static_cast<double>(m - 1))
      throw std::invalid_argument("binned_kde_curve: data outside grid");
    const auto k = std::min(static_cast<std::size_t>(pos), m - 2);
    const double frac = pos - static_cast<double>(k);
    counts[k] += 1.0 - frac;
    counts[k + 1] += frac;
  }
  const auto width = std::min<std::size_t>(
      m - 1,
      static_cast<std::size_t>(std::ceil(PairwiseSums::cutoff * h / delta)));
  std::vector<double> weights(width + 1);
  const double scale = 1.0 / (static_cast<double>(ys.size()) * h);
  for (std::size_t d = 0; d <= width; ++d)
    weights[d] = scale * gauss_pdf(static_cast<double>(d) * delta / h);

  std::vector<double> out(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double c = counts[j];
    if (c == 0.0) continue;
    const std::size_t lo = j >= width ? j - width : 0;
    const std::size_t hi = std::min(m - 1, j + width);
    for (std::size_t k = lo; k <= hi; ++k)
      out[k] += c * weights[k > j ? k - j : j - k];
  }
  return out;
}

//! R(f''_h) via int K''_h(x-a) K''_h(x-b) dx = h^-5 G''''((a-b)/h),
//! G the N(0, 2) density. The diagonal is always part of this quantity.
inline double roughness_fhat2(const PairwiseSums& pairs, double h) {
  if (!(h > 0.0))
    throw std::invalid_argument("roughness_fhat2: h must be > 0");
  const double n = static_cast<double>(pairs.size());
  const double total = pairs.sum(detail::conv_phi4, h);
  return total / (n * n * std::pow(h, 5));
}

inline double roughness_fhat2(std::span<const double> ys, double h,
                              const PairSumOptions& opts = {}) {
  return roughness_fhat2(PairwiseSums(ys, opts), h);
}

//! Truth probability mass outside the grid.
inline double tail_mass_outside(const TargetDistribution& truth,
                                const EvaluationGrid& grid) {
  return truth.cdf(grid.lo()) + truth.survival(grid.hi());
}

inline void check_coverage(const TargetDistribution& truth,
                           const EvaluationGrid& grid,
                           double max_tail = 1e-6) {
  const double tail = tail_mass_outside(truth, grid);
  if (tail > max_tail)
    throw coverage_error("grid misses truth mass " + std::to_string(tail),
                         tail);
}

//! Integrated squared error of a curve already evaluated on the grid.
inline double ise_of_curve(std::span<const double> curve,
                           const TargetDistribution& truth,
                           const EvaluationGrid& grid) {
  std::vector<double> sq(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double d = curve[k] - truth.pdf(grid[k]);
    sq[k] = d * d;
  }
  return trapezoid(sq, grid.spacing());
}

//! int (f_h - f)^2 dx by the trapezoidal rule on the grid.
inline double ise(std::span<const double> ys, double h,
                  const TargetDistribution& truth,
                  const EvaluationGrid& grid) {
  check_coverage(truth, grid);
  return ise_of_curve(kde_curve(ys, h, grid), truth, grid);
}

}  // namespace depkde
