#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace depkde {

//! (2 pi)^(-1/2)
inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343819;

//! Standard normal density.
inline double gauss_pdf(double u) noexcept {
  return inv_sqrt_2pi * std::exp(-0.5 * u * u);
}

namespace detail {

// Hermite identities: phi^(4)(u) = (u^4 - 6u^2 + 3) phi(u),
// phi^(6)(u) = (u^6 - 15u^4 + 45u^2 - 15) phi(u).
inline double phi4(double u) noexcept {
  const double u2 = u * u;
  return (u2 * u2 - 6.0 * u2 + 3.0) * gauss_pdf(u);
}

inline double phi6(double u) noexcept {
  const double u2 = u * u;
  return (((u2 - 15.0) * u2 + 45.0) * u2 - 15.0) * gauss_pdf(u);
}

//! Fourth derivative of the N(0, 2) density, i.e. of phi * phi.
inline double conv_phi4(double u) noexcept {
  return phi4(u * (1.0 / std::numbers::sqrt2)) /
         (4.0 * std::numbers::sqrt2);
}

}  // namespace detail

//! r-th derivative of the standard normal density, r in {4, 6}.
inline double gauss_deriv(int r, double u) {
  switch (r) {
    case 4:
      return detail::phi4(u);
    case 6:
      return detail::phi6(u);
    default:
      throw std::invalid_argument("gauss_deriv: unsupported order " +
                                  std::to_string(r));
  }
}

//! Scalar functionals of the Gaussian kernel that enter the AMISE.
struct KernelFunctionals {
  double roughness_K;   //!< R(K) = int K^2
  double mu2;           //!< second moment of K
  double roughness_K2;  //!< R(K'') = int (K'')^2
};

inline constexpr KernelFunctionals kernel_functionals() noexcept {
  // 1/(2 sqrt(pi)), 1, 3/(8 sqrt(pi))
  return {0.5 * std::numbers::inv_sqrtpi, 1.0,
          0.375 * std::numbers::inv_sqrtpi};
}

}  // namespace depkde
