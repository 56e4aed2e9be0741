#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "depkde/errors.hpp"

namespace depkde {

//! Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> ys) {
  const double n = static_cast<double>(ys.size());
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : ys) ss += (y - mean) * (y - mean);
  return std::sqrt(ss / (n - 1.0));
}

//! Linear-interpolation quantile (type 7), p in [0, 1].
inline double quantile(std::span<const double> ys, double p) {
  std::vector<double> sorted(ys.begin(), ys.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double interquartile_range(std::span<const double> ys) {
  return quantile(ys, 0.75) - quantile(ys, 0.25);
}

//! Robust scale min(sd, IQR / 1.349), falling back to sd when IQR is zero.
inline double robust_scale(std::span<const double> ys) {
  const double sd = sample_sd(ys);
  const double iqr = interquartile_range(ys);
  return iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;
}

//! Ordered sequence of draws. Draw order carries the dependence structure
//! and is never altered.
class Sample {
 public:
  explicit Sample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2)
      throw degenerate_sample("sample needs at least 2 values");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]))
        throw degenerate_sample("non-finite value at index " +
                                std::to_string(i));
    }
    if (!(sample_sd(values_) > 0.0))
      throw degenerate_sample("sample has zero standard deviation");
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  operator std::span<const double>() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

 private:
  std::vector<double> values_;
};

}  // namespace depkde
