#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "depkde/errors.hpp"
#include "depkde/sample.hpp"
#include "depkde/target.hpp"

namespace depkde {

using Rng = std::mt19937_64;

//! Independent, reproducible stream `stream` derived from `seed`.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x6b64u};
  return Rng(seq);
}

inline Sample iid_sample(const TargetDistribution& target, std::size_t n,
                         std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("iid_sample: n must be >= 2");
  auto rng = make_stream(seed, 0);
  std::vector<double> ys(n);
  for (auto& y : ys) y = target.draw(rng);
  return Sample(std::move(ys));
}

struct MHConfig {
  double proposal_sd = 1.0;
  std::size_t n_draws = 10000;
  std::size_t burn_in = 0;
  std::uint64_t seed = 1;
  double accept_lo = 0.20;
  double accept_hi = 0.25;
  std::size_t pilot_draws = 10000;
};

struct MHChain {
  Sample sample;
  double acceptance;
};

namespace detail {

//! Random-walk Metropolis chain started from an exact target draw.
inline std::vector<double> run_chain(const TargetDistribution& target,
                                     double proposal_sd, std::size_t draws,
                                     std::size_t burn_in, Rng& rng,
                                     double& acceptance) {
  if (!(proposal_sd > 0.0))
    throw std::invalid_argument("mh: proposal_sd must be > 0");
  std::normal_distribution<double> step(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double x = target.draw(rng);
  double lp = target.log_pdf(x);
  std::size_t accepted = 0;
  std::vector<double> out;
  out.reserve(draws);
  const std::size_t total = burn_in + draws;
  for (std::size_t i = 0; i < total; ++i) {
    const double prop = x + proposal_sd * step(rng);
    const double lq = target.log_pdf(prop);
    const double u = unif(rng);
    if (std::log(u) < lq - lp) {
      x = prop;
      lp = lq;
      ++accepted;
    }
    if (i >= burn_in) out.push_back(x);
  }
  acceptance = static_cast<double>(accepted) / static_cast<double>(total);
  return out;
}

}  // namespace detail

inline MHChain mh_sample(const TargetDistribution& target,
                         const MHConfig& cfg) {
  auto rng = make_stream(cfg.seed, 0);
  double acc = 0.0;
  auto ys = detail::run_chain(target, cfg.proposal_sd, cfg.n_draws,
                              cfg.burn_in, rng, acc);
  return {Sample(std::move(ys)), acc};
}

//! Proposal sd whose pilot-chain acceptance falls in
//! [accept_lo, accept_hi]. Bisection on log sd with common random numbers
//! over a search chain of 10 * pilot_draws steps, aiming for the middle
//! fifth of the interval: chains drawn afterwards scatter around the true
//! rate, so landing near an edge would push many of them outside.
inline double tune_proposal(const TargetDistribution& target,
                            const MHConfig& cfg) {
  if (!(cfg.accept_lo < cfg.accept_hi))
    throw std::invalid_argument("tune_proposal: empty acceptance interval");
  const double mid_rate = 0.5 * (cfg.accept_lo + cfg.accept_hi);
  const double half = 0.1 * (cfg.accept_hi - cfg.accept_lo);
  const std::size_t search_draws = 10 * cfg.pilot_draws;
  double lo = std::log(1e-2 * target.sd());
  double hi = std::log(1e2 * target.sd());
  std::ostringstream trace;
  double last_sd = 0.0, last_acc = -1.0;
  for (int step = 0; step < 40; ++step) {
    const double mid = 0.5 * (lo + hi);
    last_sd = std::exp(mid);
    auto rng = make_stream(cfg.seed, 1);
    detail::run_chain(target, last_sd, search_draws, 0, rng, last_acc);
    trace << " sd=" << last_sd << " acc=" << last_acc << ';';
    if (std::abs(last_acc - mid_rate) <= half) return last_sd;
    if (last_acc > mid_rate)
      lo = mid;  // too many acceptances: widen the proposal
    else
      hi = mid;
  }
  if (last_acc >= cfg.accept_lo && last_acc <= cfg.accept_hi) return last_sd;
  throw tuning_error("proposal tuning failed:" + trace.str());
}

//! Every k-th draw (indices k, 2k, ... counted from 1), order preserved.
inline Sample thin(const Sample& sample, std::size_t k) {
  if (k == 0) throw std::invalid_argument("thin: k must be >= 1");
  if (sample.size() / k < 2)
    throw degenerate_sample("thin: fewer than 2 draws would remain");
  std::vector<double> out;
  out.reserve(sample.size() / k);
  for (std::size_t i = k - 1; i < sample.size(); i += k)
    out.push_back(sample[i]);
  return Sample(std::move(out));
}

}  // namespace depkde
