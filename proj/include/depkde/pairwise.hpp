#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace depkde {

//! Controls how double sums over all pairs (i, j) are evaluated.
struct PairSumOptions {
  //! Direct O(n^2) evaluation up to this n, linear binning above.
  std::size_t binning_threshold = 2000;
  std::size_t bin_count = 1024;
};

//! Evaluates sum_i sum_j kappa((Y_i - Y_j) / g) for even kernels kappa.
//!
//! Holds either the raw values (direct mode) or the lag autocorrelation of
//! linear-binned counts, which does not depend on g; each evaluation is then
//! O(bins).
class PairwiseSums {
 public:
  //! Beyond this |u| every kernel used here underflows to exactly zero.
  static constexpr double cutoff = 40.0;

  PairwiseSums(std::span<const double> ys, const PairSumOptions& opts = {})
      : opts_(opts), n_(ys.size()) {
    if (n_ <= opts_.binning_threshold) {
      values_.assign(ys.begin(), ys.end());
      return;
    }
    binned_ = true;
    const auto [mn, mx] = std::minmax_element(ys.begin(), ys.end());
    const std::size_t m = std::max<std::size_t>(opts_.bin_count, 2);
    std::vector<double> counts(m, 0.0);
    delta_ = (*mx - *mn) / static_cast<double>(m - 1);
    if (delta_ > 0.0) {
      for (double y : ys) {
        const double pos = (y - *mn) / delta_;
        const auto k = std::min(static_cast<std::size_t>(pos), m - 2);
        const double frac = pos - static_cast<double>(k);
        counts[k] += 1.0 - frac;
        counts[k + 1] += frac;
      }
    } else {
      counts[0] = static_cast<double>(n_);
    }
    lag_counts_.assign(m, 0.0);
    for (std::size_t d = 0; d < m; ++d) {
      double acc = 0.0;
      for (std::size_t k = 0; k + d < m; ++k) acc += counts[k] * counts[k + d];
      lag_counts_[d] = acc;
    }
  }

  bool binned() const noexcept { return binned_; }
  std::size_t size() const noexcept { return n_; }

  //! With include_diagonal = false the i == j terms n * kappa(0) are
  //! removed; in binned mode this subtraction is approximate.
  template <class Kernel>
  double sum(Kernel&& kappa, double g, bool include_diagonal = true) const {
    const double diag = static_cast<double>(n_) * kappa(0.0);
    double total = 0.0;
    if (!binned_) {
      double off = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double yi = values_[i];
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double u = (yi - values_[j]) / g;
          if (std::abs(u) <= cutoff) off += kappa(u);
        }
      }
      total = 2.0 * off + (include_diagonal ? diag : 0.0);
      return total;
    }
    double off = 0.0;
    for (std::size_t d = 1; d < lag_counts_.size(); ++d) {
      const double u = static_cast<double>(d) * delta_ / g;
      if (u > cutoff) break;
      off += lag_counts_[d] * kappa(u);
    }
    total = 2.0 * off + lag_counts_[0] * kappa(0.0);
    return include_diagonal ? total : total - diag;
  }

 private:
  PairSumOptions opts_;
  std::size_t n_;
  bool binned_ = false;
  std::vector<double> values_;
  std::vector<double> lag_counts_;
  double delta_ = 0.0;
};

}  // namespace depkde
