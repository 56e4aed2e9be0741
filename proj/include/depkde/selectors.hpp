#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>

#include "depkde/dependence.hpp"
#include "depkde/density.hpp"
#include "depkde/errors.hpp"
#include "depkde/kernel.hpp"
#include "depkde/optimize.hpp"
#include "depkde/pairwise.hpp"
#include "depkde/sample.hpp"

namespace depkde {

enum class Method { BCV, mBCV, SJse, mSJse, SJmin, mSJmin };

inline constexpr Method all_methods[] = {Method::BCV,   Method::SJse,
                                         Method::SJmin, Method::mBCV,
                                         Method::mSJse, Method::mSJmin};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::BCV: return "BCV";
    case Method::mBCV: return "mBCV";
    case Method::SJse: return "SJse";
    case Method::mSJse: return "mSJse";
    case Method::SJmin: return "SJmin";
    case Method::mSJmin: return "mSJmin";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (Method m : all_methods)
    if (method_name(m) == s) return m;
  return std::nullopt;
}

inline bool is_modified(Method m) {
  return m == Method::mBCV || m == Method::mSJse || m == Method::mSJmin;
}

//! Standard counterpart of a modified method (identity otherwise).
inline Method standard_of(Method m) {
  switch (m) {
    case Method::mBCV: return Method::BCV;
    case Method::mSJse: return Method::SJse;
    case Method::mSJmin: return Method::SJmin;
    default: return m;
  }
}

//! Normal-scale rule 1.06 * min(sd, IQR/1.349) * n^(-1/5).
inline double normal_scale_bandwidth(std::span<const double> ys) {
  return 1.06 * robust_scale(ys) *
         std::pow(static_cast<double>(ys.size()), -0.2);
}

struct SelectorConfig {
  Method method = Method::SJse;
  SearchBracket bracket{0.0, 0.0, 0.0};
  AutocorrSpec zeta_spec{};
  std::size_t zeta_cache_points = default_zeta_points;
  //! Diagonal handling of the S and T double sums.
  bool include_diagonal = true;
  PairSumOptions pairs{};
  //! Replace zeta_hat by a constant (reduction and sensitivity checks).
  std::optional<double> zeta_override;

  void validate() const { bracket.validate(); }
};

//! Bracket [0.05, 5] * h_NS with tol 1e-4 * h_NS.
inline SelectorConfig default_config(std::span<const double> ys,
                                     Method method) {
  const double hns = normal_scale_bandwidth(ys);
  SelectorConfig cfg;
  cfg.method = method;
  cfg.bracket = {0.05 * hns, 5.0 * hns, 1e-4 * hns};
  return cfg;
}

struct SelectorResult {
  double h = 0.0;
  //! Objective value, or the equation residual for solve-the-equation.
  double objective_at_h = 0.0;
  double zeta_at_h = 1.0;
  std::size_t evaluations = 0;
  bool converged = false;
  BoundaryHit boundary_hit = BoundaryHit::None;
  bool multiple_roots = false;
  //! Pilot estimates failed; h is the normal-scale fallback.
  bool pilot_fallback = false;
};

struct PilotBandwidths {
  double a;
  double b;
  double iqr;
};

//! a = 0.920 IQR n^(-1/7), b = 0.912 IQR n^(-1/9).
inline PilotBandwidths pilot_bandwidths(std::span<const double> ys) {
  const double iqr = interquartile_range(ys);
  if (!(iqr > 0.0))
    throw degenerate_sample("pilot bandwidths need a positive IQR");
  const double n = static_cast<double>(ys.size());
  return {0.920 * iqr * std::pow(n, -1.0 / 7.0),
          0.912 * iqr * std::pow(n, -1.0 / 9.0), iqr};
}

//! (n(n-1) g^5)^-1 sum_i sum_j phi''''((Y_i - Y_j)/g).
inline double S_functional(const PairwiseSums& pairs, double g,
                           bool include_diagonal = true) {
  if (!(g > 0.0)) throw std::invalid_argument("S_functional: g must be > 0");
  const double n = static_cast<double>(pairs.size());
  return pairs.sum(detail::phi4, g, include_diagonal) /
         (n * (n - 1.0) * std::pow(g, 5));
}

inline double S_functional(std::span<const double> ys, double g,
                           bool include_diagonal = true,
                           const PairSumOptions& opts = {}) {
  return S_functional(PairwiseSums(ys, opts), g, include_diagonal);
}

//! -(n(n-1) b^7)^-1 sum_i sum_j phi^(6)((Y_i - Y_j)/b).
inline double T_functional(const PairwiseSums& pairs, double b,
                           bool include_diagonal = true) {
  if (!(b > 0.0)) throw std::invalid_argument("T_functional: b must be > 0");
  const double n = static_cast<double>(pairs.size());
  return -pairs.sum(detail::phi6, b, include_diagonal) /
         (n * (n - 1.0) * std::pow(b, 7));
}

inline double T_functional(std::span<const double> ys, double b,
                           bool include_diagonal = true,
                           const PairSumOptions& opts = {}) {
  return T_functional(PairwiseSums(ys, opts), b, include_diagonal);
}

//! 1.357 (S(a)/T(b))^(1/7) h^(5/7).
inline double g_hat(double s_a, double t_b, double h) {
  if (!(s_a > 0.0) || !(t_b > 0.0)) throw pilot_failure(s_a, t_b);
  return 1.357 * std::pow(s_a / t_b, 1.0 / 7.0) * std::pow(h, 5.0 / 7.0);
}

inline double g_hat(std::span<const double> ys, double h,
                    const PilotBandwidths& pilots,
                    bool include_diagonal = true,
                    const PairSumOptions& opts = {}) {
  const PairwiseSums pairs(ys, opts);
  return g_hat(S_functional(pairs, pilots.a, include_diagonal),
               T_functional(pairs, pilots.b, include_diagonal), h);
}

namespace detail {

inline double variance_term(double n, double h) {
  return kernel_functionals().roughness_K / (n * h);
}

inline double bias_scale(double h) {
  const double mu2 = kernel_functionals().mu2;
  return std::pow(h, 4) / 4.0 * mu2 * mu2;
}

inline double bcv_bias(const PairwiseSums& pairs, double h) {
  const double n = static_cast<double>(pairs.size());
  const double bracket = roughness_fhat2(pairs, h) -
                         kernel_functionals().roughness_K2 / (n * std::pow(h, 5));
  return bias_scale(h) * bracket;
}

}  // namespace detail

inline double bcv_objective(const PairwiseSums& pairs, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("bcv_objective: h must be > 0");
  const double n = static_cast<double>(pairs.size());
  return detail::variance_term(n, h) + detail::bcv_bias(pairs, h);
}

inline double mbcv_objective(const PairwiseSums& pairs, double h,
                             double zeta) {
  if (!(h > 0.0)) throw std::invalid_argument("mbcv_objective: h must be > 0");
  if (!(zeta >= 0.0)) throw std::invalid_argument("mbcv_objective: zeta < 0");
  const double n = static_cast<double>(pairs.size());
  return detail::variance_term(n, h) * zeta + detail::bcv_bias(pairs, h);
}

inline double bcv_objective(std::span<const double> ys, double h) {
  return bcv_objective(PairwiseSums(ys), h);
}

inline double mbcv_objective(std::span<const double> ys, double h,
                             double zeta) {
  return mbcv_objective(PairwiseSums(ys), h, zeta);
}

//! Pair sums plus the pilot estimates S(a), T(b) of one sample.
struct PluginState {
  const PairwiseSums& pairs;
  double s_a;
  double t_b;
  bool include_diagonal = true;

  double g(double h) const { return g_hat(s_a, t_b, h); }
  double S_at(double h) const {
    return S_functional(pairs, g(h), include_diagonal);
  }
};

inline double sj_objective(const PluginState& st, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("sj_objective: h must be > 0");
  const double n = static_cast<double>(st.pairs.size());
  return detail::variance_term(n, h) + detail::bias_scale(h) * st.S_at(h);
}

inline double msj_objective(const PluginState& st, double h, double zeta) {
  if (!(h > 0.0)) throw std::invalid_argument("msj_objective: h must be > 0");
  if (!(zeta >= 0.0)) throw std::invalid_argument("msj_objective: zeta < 0");
  const double n = static_cast<double>(st.pairs.size());
  return detail::variance_term(n, h) * zeta +
         detail::bias_scale(h) * st.S_at(h);
}

//! h - {R(K) zeta / (n mu2^2 S)}^(1/5) for a given S(g(h)).
inline double equation_residual(double h, double n, double s_of_g,
                                double zeta) {
  const auto kf = kernel_functionals();
  return h - std::pow(kf.roughness_K * zeta / (n * kf.mu2 * kf.mu2 * s_of_g),
                      0.2);
}

//! Memo of zeta_hat(h) keyed on h rounded to 1e-6 relative.
class ZetaCache {
 public:
  template <class Compute>
  double get(double h, const AutocorrSpec& spec, std::size_t points,
             Compute&& compute) {
    const Key key{std::llround(std::log(h) * 1e6), static_cast<int>(spec.mode),
                  spec.max_lag, points};
    auto it = memo_.find(key);
    if (it != memo_.end()) {
      ++hits_;
      return it->second;
    }
    const double value = compute();
    memo_.emplace(key, value);
    return value;
  }

  std::size_t size() const noexcept { return memo_.size(); }
  std::size_t hits() const noexcept { return hits_; }

 private:
  using Key = std::tuple<long long, int, std::size_t, std::size_t>;
  std::map<Key, double> memo_;
  std::size_t hits_ = 0;
};

//! Selection context for one sample: pair sums, pilot estimates and the
//! zeta memo are built once and reused by every method run on the sample.
class BandwidthSelector {
 public:
  explicit BandwidthSelector(std::span<const double> ys,
                             const PairSumOptions& opts = {})
      : ys_(ys), pairs_(ys, opts), hns_(normal_scale_bandwidth(ys)) {}

  std::span<const double> values() const noexcept { return ys_; }
  const PairwiseSums& pairs() const noexcept { return pairs_; }
  double normal_scale() const noexcept { return hns_; }
  ZetaCache& zeta_cache() noexcept { return cache_; }

  const PilotBandwidths& pilots() {
    if (!pilots_) pilots_ = pilot_bandwidths(ys_);
    return *pilots_;
  }

  //! Pilot estimates S(a), T(b) for the requested diagonal convention.
  PluginState plugin(bool include_diagonal) {
    auto& slot = include_diagonal ? with_diag_ : without_diag_;
    if (!slot) {
      const auto& p = pilots();
      slot = std::pair{S_functional(pairs_, p.a, include_diagonal),
                       T_functional(pairs_, p.b, include_diagonal)};
    }
    return {pairs_, slot->first, slot->second, include_diagonal};
  }

  //! Replace the pilot estimates, e.g. with values computed elsewhere.
  void set_plugin(bool include_diagonal, double s_a, double t_b) {
    (include_diagonal ? with_diag_ : without_diag_) = std::pair{s_a, t_b};
  }

  double zeta(double h, const SelectorConfig& cfg) {
    if (cfg.zeta_override) return *cfg.zeta_override;
    return cache_.get(h, cfg.zeta_spec, cfg.zeta_cache_points, [&] {
      const auto grid = make_grid(ys_, h).resampled(cfg.zeta_cache_points);
      return zeta_hat(ys_, h, grid, cfg.zeta_spec).value;
    });
  }

  SelectorResult solve_the_equation(bool modified, const SelectorConfig& cfg) {
    cfg.validate();
    const auto st = plugin(cfg.include_diagonal);
    st.g(1.0);  // surfaces pilot_failure before the scan
    const double n = static_cast<double>(ys_.size());
    auto residual = [&](double h) {
      const double z = modified ? zeta(h, cfg) : 1.0;
      return equation_residual(h, n, st.S_at(h), z);
    };
    const auto root = find_root(residual, cfg.bracket, hns_);
    SelectorResult out;
    out.h = root.h;
    out.objective_at_h = root.residual;
    out.zeta_at_h = modified ? zeta(root.h, cfg) : 1.0;
    out.evaluations = root.evaluations;
    out.converged = root.converged;
    out.multiple_roots = root.multiple_roots;
    return out;
  }

  SelectorResult select(const SelectorConfig& cfg) {
    cfg.validate();
    try {
      switch (cfg.method) {
        case Method::SJse:
          return solve_the_equation(false, cfg);
        case Method::mSJse:
          return solve_the_equation(true, cfg);
        case Method::BCV:
          return minimized(cfg, [&](double h) {
            return bcv_objective(pairs_, h);
          }, false);
        case Method::mBCV:
          return minimized(cfg, [&](double h) {
            return mbcv_objective(pairs_, h, zeta(h, cfg));
          }, true);
        case Method::SJmin: {
          const auto st = plugin(cfg.include_diagonal);
          st.g(1.0);
          return minimized(cfg, [&](double h) { return sj_objective(st, h); },
                           false);
        }
        case Method::mSJmin: {
          const auto st = plugin(cfg.include_diagonal);
          st.g(1.0);
          return minimized(cfg, [&](double h) {
            return msj_objective(st, h, zeta(h, cfg));
          }, true);
        }
      }
    } catch (const pilot_failure&) {
      SelectorResult out;
      out.h = hns_;
      out.objective_at_h = std::numeric_limits<double>::quiet_NaN();
      out.zeta_at_h = is_modified(cfg.method) ? zeta(hns_, cfg) : 1.0;
      out.pilot_fallback = true;
      return out;
    }
    throw std::invalid_argument("select: unknown method");
  }

 private:
  SelectorResult minimized(const SelectorConfig& cfg,
                           const std::function<double(double)>& objective,
                           bool modified) {
    const auto r = minimize_objective(objective, cfg.bracket);
    SelectorResult out;
    out.h = r.h;
    out.objective_at_h = r.value;
    out.zeta_at_h = modified ? zeta(r.h, cfg) : 1.0;
    out.evaluations = r.evaluations;
    out.converged = r.converged;
    out.boundary_hit = r.boundary;
    return out;
  }

  std::span<const double> ys_;
  PairwiseSums pairs_;
  double hns_;
  std::optional<PilotBandwidths> pilots_;
  std::optional<std::pair<double, double>> with_diag_;
  std::optional<std::pair<double, double>> without_diag_;
  ZetaCache cache_;
};

inline SelectorResult select(const Sample& sample, const SelectorConfig& cfg) {
  BandwidthSelector selector(sample.values(), cfg.pairs);
  return selector.select(cfg);
}

inline SelectorResult solve_the_equation(const Sample& sample, bool modified,
                                         const SelectorConfig& cfg) {
  BandwidthSelector selector(sample.values(), cfg.pairs);
  return selector.solve_the_equation(modified, cfg);
}

inline MinimizeResult minimize_objective(
    const std::function<double(double)>& objective, const SelectorConfig& cfg) {
  return minimize_objective(objective, cfg.bracket);
}

}  // namespace depkde
