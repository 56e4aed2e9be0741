#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "depkde/kernel.hpp"

namespace depkde {

namespace detail {

inline double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z * (1.0 / std::numbers::sqrt2));
}

}  // namespace detail

//! Analytic target density with an exact sampler.
//!
//! Three families cover the simulation study: a normal, a finite mixture of
//! normals and a log-normal (parameterized by the underlying normal).
class TargetDistribution {
 public:
  enum class Kind { Normal, Mixture, LogNormal };

  static TargetDistribution normal(double mean, double sd) {
    if (!(sd > 0.0)) throw std::invalid_argument("normal: sd must be > 0");
    return TargetDistribution(Kind::Normal, {1.0}, {mean}, {sd});
  }

  static TargetDistribution mixture(std::vector<double> weights,
                                    std::vector<double> means,
                                    std::vector<double> sds) {
    if (weights.empty() || weights.size() != means.size() ||
        weights.size() != sds.size())
      throw std::invalid_argument("mixture: component arrays disagree");
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (!(weights[k] > 0.0) || !(sds[k] > 0.0))
        throw std::invalid_argument(
            "mixture: weights and sds must be positive");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("mixture: weights must sum to 1");
    return TargetDistribution(Kind::Mixture, std::move(weights),
                              std::move(means), std::move(sds));
  }

  //! exp(N(mu, sigma^2)).
  static TargetDistribution lognormal(double mu, double sigma) {
    if (!(sigma > 0.0))
      throw std::invalid_argument("lognormal: sigma must be > 0");
    return TargetDistribution(Kind::LogNormal, {1.0}, {mu}, {sigma});
  }

  // Targets of the simulation study.
  static TargetDistribution study_normal() { return normal(3.0, 2.0); }
  static TargetDistribution study_mixture() {
    return mixture({0.7, 0.3}, {0.0, 4.0}, {1.0, 1.0});
  }
  static TargetDistribution study_lognormal() { return lognormal(1.0, 0.3); }

  Kind kind() const noexcept { return kind_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& sds() const noexcept { return sds_; }

  double pdf(double x) const noexcept {
    if (kind_ == Kind::LogNormal) {
      if (x <= 0.0) return 0.0;
      const double z = (std::log(x) - means_[0]) / sds_[0];
      return gauss_pdf(z) / (sds_[0] * x);
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k)
      acc += weights_[k] * gauss_pdf((x - means_[k]) / sds_[k]) / sds_[k];
    return acc;
  }

  double log_pdf(double x) const noexcept {
    if (kind_ == Kind::Normal) {
      const double z = (x - means_[0]) / sds_[0];
      return -0.5 * z * z - std::log(sds_[0]) + std::log(inv_sqrt_2pi);
    }
    const double p = pdf(x);
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }

  double cdf(double x) const noexcept {
    if (kind_ == Kind::LogNormal) {
      if (x <= 0.0) return 0.0;
      return detail::normal_cdf((std::log(x) - means_[0]) / sds_[0]);
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k)
      acc += weights_[k] * detail::normal_cdf((x - means_[k]) / sds_[k]);
    return acc;
  }

  //! Upper tail 1 - F(x), computed without cancellation.
  double survival(double x) const noexcept {
    if (kind_ == Kind::LogNormal) {
      if (x <= 0.0) return 1.0;
      return detail::normal_cdf(-(std::log(x) - means_[0]) / sds_[0]);
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k)
      acc += weights_[k] * detail::normal_cdf(-(x - means_[k]) / sds_[k]);
    return acc;
  }

  double mean() const noexcept {
    if (kind_ == Kind::LogNormal)
      return std::exp(means_[0] + 0.5 * sds_[0] * sds_[0]);
    double m = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k)
      m += weights_[k] * means_[k];
    return m;
  }

  double sd() const noexcept {
    if (kind_ == Kind::LogNormal) {
      const double s2 = sds_[0] * sds_[0];
      return std::sqrt((std::exp(s2) - 1.0) *
                       std::exp(2.0 * means_[0] + s2));
    }
    const double m = mean();
    double second = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k)
      second += weights_[k] * (sds_[k] * sds_[k] + means_[k] * means_[k]);
    return std::sqrt(second - m * m);
  }

  //! Interval outside of which the truth carries at most `tail` mass.
  std::pair<double, double> effective_support(double tail = 1e-12) const {
    // Widen from the mean until both tails are small enough.
    const double s = sd();
    double lo = mean() - s;
    double hi = mean() + s;
    while (cdf(lo) > 0.5 * tail) lo -= s;
    while (survival(hi) > 0.5 * tail) hi += s;
    if (kind_ == Kind::LogNormal) lo = std::max(lo, 0.0);
    return {lo, hi};
  }

  template <class Rng>
  double draw(Rng& rng) const {
    std::normal_distribution<double> z(0.0, 1.0);
    switch (kind_) {
      case Kind::Normal:
        return means_[0] + sds_[0] * z(rng);
      case Kind::LogNormal:
        return std::exp(means_[0] + sds_[0] * z(rng));
      case Kind::Mixture: {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double pick = u(rng);
        std::size_t k = 0;
        while (k + 1 < weights_.size() && pick >= weights_[k]) {
          pick -= weights_[k];
          ++k;
        }
        return means_[k] + sds_[k] * z(rng);
      }
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::Normal:
        return "normal";
      case Kind::Mixture:
        return "mixture";
      case Kind::LogNormal:
        return "lognormal";
    }
    return "unknown";
  }

 private:
  TargetDistribution(Kind kind, std::vector<double> w, std::vector<double> m,
                     std::vector<double> s)
      : kind_(kind), weights_(std::move(w)), means_(std::move(m)),
        sds_(std::move(s)) {}

  Kind kind_;
  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> sds_;
};

}  // namespace depkde
