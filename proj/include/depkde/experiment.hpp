#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "depkde/density.hpp"
#include "depkde/dependence.hpp"
#include "depkde/samplers.hpp"
#include "depkde/selectors.hpp"

namespace depkde {

//! Everything a study row can be computed by: the six selectors, the
//! ISE-optimal bandwidth and SJse on a thinned chain.
enum class Estimator { BCV, SJse, SJmin, mBCV, mSJse, mSJmin, Target, Thin };

inline constexpr Estimator all_estimators[] = {
    Estimator::Target, Estimator::BCV,   Estimator::SJse,
    Estimator::SJmin,  Estimator::mBCV,  Estimator::mSJse,
    Estimator::mSJmin, Estimator::Thin};

inline std::string_view estimator_name(Estimator e) {
  switch (e) {
    case Estimator::BCV: return "BCV";
    case Estimator::SJse: return "SJse";
    case Estimator::SJmin: return "SJmin";
    case Estimator::mBCV: return "mBCV";
    case Estimator::mSJse: return "mSJse";
    case Estimator::mSJmin: return "mSJmin";
    case Estimator::Target: return "Target";
    case Estimator::Thin: return "Thin";
  }
  return "?";
}

inline std::optional<Estimator> parse_estimator(std::string_view s) {
  for (Estimator e : all_estimators)
    if (estimator_name(e) == s) return e;
  return std::nullopt;
}

inline std::optional<Method> selector_method(Estimator e) {
  if (e == Estimator::Target || e == Estimator::Thin) return std::nullopt;
  return parse_method(estimator_name(e));
}

enum class SamplerKind { Iid, MH };

struct StudyConfig {
  TargetDistribution target = TargetDistribution::study_normal();
  SamplerKind sampler = SamplerKind::Iid;
  std::size_t n = 10000;
  std::size_t replicates = 50;
  std::vector<Estimator> methods{std::begin(all_estimators),
                                 std::end(all_estimators)};
  std::size_t thin_k = 5;
  std::uint64_t base_seed = 1;
  std::size_t grid_points = default_grid_points;
  std::size_t zeta_points = default_zeta_points;
  AutocorrSpec zeta_spec{};
  bool include_diagonal = true;
  //! MH proposal sd; tuned from base_seed when absent.
  std::optional<double> proposal_sd;
  //! Concurrent replicates; 0 means hardware concurrency.
  std::size_t workers = 1;

  void validate() const {
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (n < 100) throw std::invalid_argument("n must be >= 100");
    if (thin_k < 1) throw std::invalid_argument("thin_k must be >= 1");
    if (methods.empty()) throw std::invalid_argument("no methods requested");
  }
};

//! One (replicate, method) outcome. A failed method keeps ok = false and the
//! message; its numeric fields are NaN.
struct MethodRecord {
  Estimator method = Estimator::SJse;
  std::size_t replicate = 0;
  double h = std::numeric_limits<double>::quiet_NaN();
  double ise = std::numeric_limits<double>::quiet_NaN();
  double zeta = std::numeric_limits<double>::quiet_NaN();
  double acceptance = std::numeric_limits<double>::quiet_NaN();  //!< MH only
  double iat = std::numeric_limits<double>::quiet_NaN();  //!< of the sample
  bool ok = true;
  std::string error;
};

struct MethodSummary {
  Estimator method = Estimator::SJse;
  std::size_t count = 0;
  std::size_t failures = 0;
  double mean_h = 0.0;
  std::optional<double> se_h;
  double mean_ise = 0.0;
  std::optional<double> se_ise;
  double mean_zeta = 0.0;
};

struct ReplicateSummary {
  std::vector<MethodSummary> methods;  //!< in StudyConfig::methods order
  std::vector<MethodRecord> records;   //!< sorted by replicate, then method
  double proposal_sd = std::numeric_limits<double>::quiet_NaN();

  const MethodSummary* find(Estimator e) const {
    for (const auto& m : methods)
      if (m.method == e) return &m;
    return nullptr;
  }
};

//! splitmix64 finalizer; decorrelates replicate seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t replicate_seed(std::uint64_t base, std::size_t r) {
  return mix_seed(base ^ mix_seed(static_cast<std::uint64_t>(r) + 1));
}

//! Bandwidth minimizing the integrated squared error against the truth.
//! The search runs on a linear-binned estimate over `grid`; the binning
//! only adds smoothing of order spacing^2 to the curve.
inline SelectorResult target_bandwidth(std::span<const double> ys,
                                       const TargetDistribution& truth,
                                       const EvaluationGrid& grid,
                                       const SelectorConfig& cfg) {
  check_coverage(truth, grid);
  std::vector<double> truth_pdf(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) truth_pdf[k] = truth.pdf(grid[k]);
  auto objective = [&](double h) {
    const auto curve = binned_kde_curve(ys, h, grid);
    std::vector<double> sq(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double d = curve[k] - truth_pdf[k];
      sq[k] = d * d;
    }
    return trapezoid(sq, grid.spacing());
  };
  const auto r = minimize_objective(objective, cfg.bracket);
  SelectorResult out;
  out.h = r.h;
  out.objective_at_h = r.value;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  out.boundary_hit = r.boundary;
  return out;
}

//! Proposal sd used by MH studies: the configured one or a tuned one.
inline double study_proposal_sd(const StudyConfig& cfg) {
  if (cfg.proposal_sd) return *cfg.proposal_sd;
  MHConfig mh;
  mh.seed = cfg.base_seed;
  return tune_proposal(cfg.target, mh);
}

namespace detail {

inline SelectorConfig study_selector_config(std::span<const double> ys,
                                            Method m, const StudyConfig& cfg) {
  auto sc = default_config(ys, m);
  sc.zeta_spec = cfg.zeta_spec;
  sc.zeta_cache_points = cfg.zeta_points;
  sc.include_diagonal = cfg.include_diagonal;
  return sc;
}

}  // namespace detail

//! Draws sample r and applies every requested method to it. All methods see
//! the same sample and share one ISE grid.
inline std::vector<MethodRecord> run_replicate(const StudyConfig& cfg,
                                               std::size_t r,
                                               double proposal_sd) {
  if (r >= cfg.replicates)
    throw std::invalid_argument("run_replicate: replicate index out of range");
  const std::uint64_t seed = replicate_seed(cfg.base_seed, r);
  double acceptance = std::numeric_limits<double>::quiet_NaN();
  std::optional<Sample> drawn;
  if (cfg.sampler == SamplerKind::MH) {
    MHConfig mh;
    mh.proposal_sd = proposal_sd;
    mh.n_draws = cfg.n;
    mh.seed = seed;
    auto chain = mh_sample(cfg.target, mh);
    acceptance = chain.acceptance;
    drawn.emplace(std::move(chain.sample));
  } else {
    drawn.emplace(iid_sample(cfg.target, cfg.n, seed));
  }
  const Sample& sample = *drawn;
  const auto ys = sample.values();
  const double series_iat = iat(ys);

  PairSumOptions pair_opts;
  BandwidthSelector selector(ys, pair_opts);
  const auto base_cfg = detail::study_selector_config(ys, Method::SJse, cfg);
  const auto grid = make_grid(ys, base_cfg.bracket.hi, cfg.grid_points);

  std::vector<MethodRecord> out;
  for (Estimator e : cfg.methods) {
    MethodRecord rec;
    rec.method = e;
    rec.replicate = r;
    rec.acceptance = acceptance;
    rec.iat = series_iat;
    try {
      if (auto m = selector_method(e)) {
        const auto res =
            selector.select(detail::study_selector_config(ys, *m, cfg));
        rec.h = res.h;
        rec.zeta = res.zeta_at_h;
        rec.ise = ise(ys, res.h, cfg.target, grid);
      } else if (e == Estimator::Target) {
        const auto res = target_bandwidth(ys, cfg.target, grid, base_cfg);
        rec.h = res.h;
        rec.zeta = 1.0;
        rec.ise = ise(ys, res.h, cfg.target, grid);
      } else {
        const Sample thinned = thin(sample, cfg.thin_k);
        BandwidthSelector thin_selector(thinned.values(), pair_opts);
        const auto res = thin_selector.select(
            detail::study_selector_config(thinned.values(), Method::SJse, cfg));
        rec.h = res.h;
        rec.zeta = 1.0;
        rec.ise = ise(thinned.values(), res.h, cfg.target, grid);
      }
    } catch (const std::exception& ex) {
      rec.ok = false;
      rec.error = ex.what();
      rec.h = rec.ise = rec.zeta = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

//! Mean and standard error sd / sqrt(count) per method over successful
//! records. The standard error is absent for fewer than two records.
inline std::vector<MethodSummary> summarize(
    const std::vector<MethodRecord>& records,
    const std::vector<Estimator>& methods) {
  std::vector<MethodSummary> out;
  for (Estimator e : methods) {
    MethodSummary s;
    s.method = e;
    std::vector<double> hs, ises;
    double zsum = 0.0;
    for (const auto& rec : records) {
      if (rec.method != e) continue;
      if (!rec.ok) {
        ++s.failures;
        continue;
      }
      hs.push_back(rec.h);
      ises.push_back(rec.ise);
      zsum += rec.zeta;
    }
    s.count = hs.size();
    auto mean_se = [](const std::vector<double>& v, double& mean,
                      std::optional<double>& se) {
      if (v.empty()) {
        mean = std::numeric_limits<double>::quiet_NaN();
        return;
      }
      double acc = 0.0;
      for (double x : v) acc += x;
      const double k = static_cast<double>(v.size());
      mean = acc / k;
      if (v.size() < 2) return;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
    };
    mean_se(hs, s.mean_h, s.se_h);
    mean_se(ises, s.mean_ise, s.se_ise);
    s.mean_zeta = s.count ? zsum / static_cast<double>(s.count)
                          : std::numeric_limits<double>::quiet_NaN();
    out.push_back(s);
  }
  return out;
}

inline ReplicateSummary run_study(const StudyConfig& cfg) {
  cfg.validate();
  ReplicateSummary summary;
  double proposal = std::numeric_limits<double>::quiet_NaN();
  if (cfg.sampler == SamplerKind::MH) proposal = study_proposal_sd(cfg);
  summary.proposal_sd = proposal;

  std::vector<std::vector<MethodRecord>> per_rep(cfg.replicates);
  std::size_t workers = cfg.workers ? cfg.workers
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.replicates);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failed(cfg.replicates);
  auto work = [&] {
    for (std::size_t r = next++; r < cfg.replicates; r = next++) {
      try {
        per_rep[r] = run_replicate(cfg, r, proposal);
      } catch (...) {
        failed[r] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& ex : failed)
    if (ex) std::rethrow_exception(ex);
  for (auto& recs : per_rep)
    for (auto& rec : recs) summary.records.push_back(std::move(rec));
  summary.methods = summarize(summary.records, cfg.methods);
  return summary;
}

}  // namespace depkde
