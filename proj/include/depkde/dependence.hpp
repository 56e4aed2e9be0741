#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "depkde/density.hpp"
#include "depkde/errors.hpp"
#include "depkde/kernel.hpp"

namespace depkde {

enum class LagMode {
  Adaptive,  //!< initial positive sequence truncation
  Full,      //!< all lags up to n - 1
  Fixed,     //!< lags up to AutocorrSpec::max_lag
};

struct AutocorrSpec {
  LagMode mode = LagMode::Adaptive;
  std::size_t max_lag = 0;  //!< used in Fixed mode, capped at n - 1
  double degenerate_value = 1.0;
};

namespace detail {

inline std::size_t fft_size(std::size_t min_size) {
  // smallest 2^a 3^b 5^c >= min_size
  std::size_t best = 1;
  while (best < min_size) best *= 2;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5)
    for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
      std::size_t v = p35;
      while (v < min_size) v *= 2;
      best = std::min(best, v);
    }
  return best;
}

//! Process-wide cache of FFTW plans keyed by transform length. Planning is
//! not thread safe in FFTW, executing with the new-array interface is.
class PlanCache {
 public:
  struct Plans {
    fftw_plan forward;
    fftw_plan backward;
  };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  Plans get(std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> re(n);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    auto* c = reinterpret_cast<fftw_complex*>(spec.data());
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p{fftw_plan_dft_r2c_1d(len, re.data(), c, flags),
            fftw_plan_dft_c2r_1d(len, c, re.data(), flags)};
    plans_.emplace(n, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  std::mutex mutex_;
  std::map<std::size_t, Plans> plans_;
};

}  // namespace detail

//! Reusable buffers for repeated autocovariance computations of one length.
class AutocorrWorkspace {
 public:
  explicit AutocorrWorkspace(std::size_t n)
      : n_(n), len_(detail::fft_size(2 * n)), real_(len_), spec_(len_ / 2 + 1) {
    plans_ = detail::PlanCache::instance().get(len_);
  }

  std::size_t size() const noexcept { return n_; }

  //! Biased autocovariance c(t) = n^-1 sum_i (x_i - m)(x_{i+t} - m),
  //! t = 0..max_lag, with the overall mean m.
  std::vector<double> autocovariance(std::span<const double> series,
                                     std::size_t max_lag) {
    if (series.size() != n_)
      throw std::invalid_argument("autocovariance: length mismatch");
    const double mean =
        std::accumulate(series.begin(), series.end(), 0.0) /
        static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) real_[i] = series[i] - mean;
    std::fill(real_.begin() + static_cast<std::ptrdiff_t>(n_), real_.end(),
              0.0);
    auto* c = reinterpret_cast<fftw_complex*>(spec_.data());
    fftw_execute_dft_r2c(plans_.forward, real_.data(), c);
    for (auto& v : spec_) v = std::norm(v);
    fftw_execute_dft_c2r(plans_.backward, c, real_.data());
    const double scale = 1.0 / (static_cast<double>(len_) * static_cast<double>(n_));
    std::vector<double> out(max_lag + 1);
    for (std::size_t t = 0; t <= max_lag; ++t) out[t] = real_[t] * scale;
    return out;
  }

 private:
  std::size_t n_;
  std::size_t len_;
  std::vector<double> real_;
  std::vector<std::complex<double>> spec_;
  detail::PlanCache::Plans plans_;
};

namespace detail {

inline bool nearly_constant(std::span<const double> series, double c0) {
  double sq = 0.0;
  for (double v : series) sq += v * v;
  sq /= static_cast<double>(series.size());
  return !(c0 > 0.0) || c0 < 1e-12 * sq;
}

}  // namespace detail

inline std::vector<double> sample_autocorr(std::span<const double> series,
                                           std::size_t max_lag,
                                           AutocorrWorkspace& ws) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("sample_autocorr: need n >= 2");
  if (max_lag > n - 1)
    throw std::invalid_argument("sample_autocorr: max_lag exceeds n - 1");
  auto acov = ws.autocovariance(series, max_lag);
  if (detail::nearly_constant(series, acov[0]))
    throw degenerate_series("series has (numerically) zero variance");
  const double c0 = acov[0];
  for (auto& v : acov) v /= c0;
  acov[0] = 1.0;
  return acov;
}

//! rho(0) = 1, rho(1..max_lag) from the biased autocovariance (FFT).
inline std::vector<double> sample_autocorr(std::span<const double> series,
                                           std::size_t max_lag) {
  AutocorrWorkspace ws(series.size());
  return sample_autocorr(series, max_lag, ws);
}

//! Largest lag retained. Adaptive: sums of adjacent pairs
//! rho(2m) + rho(2m+1), m >= 1, are accumulated until the first
//! nonpositive pair; the retained lags end at 2m - 1.
inline std::size_t truncation_lag(std::span<const double> rho,
                                  const AutocorrSpec& spec, std::size_t n) {
  const std::size_t cap = n - 1;
  switch (spec.mode) {
    case LagMode::Full:
      return cap;
    case LagMode::Fixed:
      return std::min(spec.max_lag, cap);
    case LagMode::Adaptive:
      break;
  }
  for (std::size_t m = 1; 2 * m + 1 <= cap; ++m) {
    if (rho[2 * m] + rho[2 * m + 1] <= 0.0) return 2 * m - 1;
  }
  return cap;
}

//! sum_{t=-L}^{L} (1 - |t|/n) rho(|t|) over the given correlations.
inline double bartlett_sum(std::span<const double> rho, std::size_t lag,
                           std::size_t n) {
  const double nd = static_cast<double>(n);
  const auto top = static_cast<std::ptrdiff_t>(lag);
  double tau = 0.0;
  for (std::ptrdiff_t t = -top; t <= top; ++t) {
    const auto at = static_cast<std::size_t>(t < 0 ? -t : t);
    tau += (1.0 - static_cast<double>(at) / nd) * rho[at];
  }
  return tau;
}

//! Integrated autocorrelation time with Bartlett weights. Returns
//! spec.degenerate_value for a (numerically) constant series.
namespace detail {

//! Adaptive truncation evaluated lag by lag without the FFT. Returns false
//! when the rule has not terminated within `max_direct` lags.
inline bool iat_direct(std::span<const double> series, double& tau,
                       std::size_t max_direct, bool& degenerate) {
  const std::size_t n = series.size();
  const double mean =
      std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = series[i] - mean;
  auto acov = [&](std::size_t t) {
    double acc = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) acc += x[i] * x[i + t];
    return acc / static_cast<double>(n);
  };
  const double c0 = acov(0);
  degenerate = nearly_constant(series, c0);
  if (degenerate) return true;
  std::vector<double> rho{1.0, acov(1) / c0};
  const std::size_t cap = n - 1;
  for (std::size_t m = 1; 2 * m + 1 <= cap; ++m) {
    if (2 * m + 1 > max_direct) return false;
    rho.push_back(acov(2 * m) / c0);
    rho.push_back(acov(2 * m + 1) / c0);
    if (rho[2 * m] + rho[2 * m + 1] <= 0.0) {
      tau = bartlett_sum(rho, 2 * m - 1, n);
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline double iat(std::span<const double> series, const AutocorrSpec& spec,
                  AutocorrWorkspace& ws) {
  const std::size_t n = series.size();
  if (spec.mode == LagMode::Adaptive) {
    double tau = 0.0;
    bool degenerate = false;
    if (detail::iat_direct(series, tau, 8, degenerate))
      return degenerate ? spec.degenerate_value : tau;
  }
  std::vector<double> rho;
  try {
    rho = sample_autocorr(series, n - 1, ws);
  } catch (const degenerate_series&) {
    return spec.degenerate_value;
  }
  return bartlett_sum(rho, truncation_lag(rho, spec, n), n);
}

inline double iat(std::span<const double> series,
                  const AutocorrSpec& spec = {}) {
  AutocorrWorkspace ws(series.size());
  return iat(series, spec, ws);
}

namespace detail {

//! Fills z_i = K_h(x - Y_i) and returns kde_at(ys, h, x) from the same sum.
inline double kernel_series(std::span<const double> ys, double h, double x,
                            std::vector<double>& z) {
  z.resize(ys.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double u = (x - ys[i]) / h;
    if (std::abs(u) <= PairwiseSums::cutoff) {
      const double k = gauss_pdf(u);
      acc += k;
      z[i] = k / h;
    } else {
      z[i] = 0.0;
    }
  }
  return acc / (static_cast<double>(ys.size()) * h);
}

inline bool degenerate_kernel_series(std::span<const double> z) {
  double mean = 0.0, sq = 0.0, mx = 0.0;
  for (double v : z) {
    mean += v;
    sq += v * v;
    mx = std::max(mx, v);
  }
  if (mx < 1e-300) return true;
  const double n = static_cast<double>(z.size());
  mean /= n;
  sq /= n;
  const double var = sq - mean * mean;
  return var / sq < 1e-12;
}

inline double kernel_iat(std::span<const double> ys, double h, double x,
                         const AutocorrSpec& spec, AutocorrWorkspace& ws,
                         std::vector<double>& z, double& density) {
  density = kernel_series(ys, h, x, z);
  if (degenerate_kernel_series(z)) return spec.degenerate_value;
  return iat(z, spec, ws);
}

}  // namespace detail

//! IAT of the series K_h(x - Y_i) in draw order.
inline double kernel_iat(std::span<const double> ys, double h, double x,
                         const AutocorrSpec& spec = {}) {
  if (!(h > 0.0)) throw std::invalid_argument("kernel_iat: h must be > 0");
  AutocorrWorkspace ws(ys.size());
  std::vector<double> z;
  double density = 0.0;
  return detail::kernel_iat(ys, h, x, spec, ws, z, density);
}

struct ZetaEstimate {
  double value;
  EvaluationGrid grid;
  std::vector<double> per_point_iat;
  std::vector<double> density;  //!< kde_at at each grid point
};

inline constexpr std::size_t default_zeta_points = 256;

//! zeta = int tau_n(K_{h,x}) f_h(x) dx by the trapezoidal rule on `grid`.
inline ZetaEstimate zeta_hat(std::span<const double> ys, double h,
                             const EvaluationGrid& grid,
                             const AutocorrSpec& spec = {}) {
  if (!(h > 0.0)) throw std::invalid_argument("zeta_hat: h must be > 0");
  AutocorrWorkspace ws(ys.size());
  std::vector<double> z;
  std::vector<double> taus(grid.size());
  std::vector<double> dens(grid.size());
  std::vector<double> weighted(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    taus[k] = detail::kernel_iat(ys, h, grid[k], spec, ws, z, dens[k]);
    weighted[k] = taus[k] * dens[k];
  }
  const double value = trapezoid(weighted, grid.spacing());
  return {value, grid, std::move(taus), std::move(dens)};
}

//! zeta_hat on the default subsampled grid for bandwidth h.
inline ZetaEstimate zeta_hat(std::span<const double> ys, double h,
                             const AutocorrSpec& spec = {},
                             std::size_t points = default_zeta_points) {
  return zeta_hat(ys, h, make_grid(ys, h).resampled(points), spec);
}

}  // namespace depkde
