#pragma once

#include <stdexcept>
#include <string>

namespace depkde {

//! Base class for every library failure that is not a plain bad argument.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Sample violates n >= 2, finiteness, or has zero spread.
class degenerate_sample : public error {
 public:
  using error::error;
};

//! Zero-variance series handed to the autocorrelation estimator.
class degenerate_series : public error {
 public:
  using error::error;
};

//! Evaluation grid does not cover the truth's effective support.
class coverage_error : public error {
 public:
  coverage_error(const std::string& what, double tail_mass)
      : error(what), tail_mass(tail_mass) {}
  double tail_mass;
};

//! S(a) or T(b) came out nonpositive.
class pilot_failure : public error {
 public:
  pilot_failure(double s_a, double t_b)
      : error("pilot estimate nonpositive: S(a)=" + std::to_string(s_a) +
              ", T(b)=" + std::to_string(t_b)),
        s_a(s_a),
        t_b(t_b) {}
  double s_a;
  double t_b;
};

//! Solve-the-equation residual has no sign change on the bracket.
class root_not_found : public error {
 public:
  root_not_found(double residual_lo, double residual_hi)
      : error("no sign change of residual on bracket: r(lo)=" +
              std::to_string(residual_lo) +
              ", r(hi)=" + std::to_string(residual_hi)),
        residual_lo(residual_lo),
        residual_hi(residual_hi) {}
  double residual_lo;
  double residual_hi;
};

//! Objective returned a non-finite value.
class objective_error : public error {
 public:
  explicit objective_error(double h)
      : error("non-finite objective at h=" + std::to_string(h)), h(h) {}
  double h;
};

class tuning_error : public error {
 public:
  using error::error;
};

}  // namespace depkde
