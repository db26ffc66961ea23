#pragma once

#include <cmath>
#include <limits>

namespace rankforge {

inline constexpr double inv_sqrt2 = 0.7071067811865475244008443621048490;
inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343819;
inline constexpr double half_log_2pi = 0.9189385332046727417803297364056176;

/// Standard normal CDF.
inline double gaussian_cdf(double z) {
  if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-z * inv_sqrt2);
}

/// Upper tail 1 - Phi(z), computed without cancellation for large z.
inline double gaussian_upper(double z) {
  if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
  return 0.5 * std::erfc(z * inv_sqrt2);
}

/// Standard normal density.
inline double gaussian_pdf(double z) {
  if (std::isinf(z)) return 0.0;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/// log Phi(-x) for x >= 0: the log of the far tail. Uses erfc while it is
/// representable, then the asymptotic expansion of the Mills ratio.
inline double log_gaussian_tail(double x) {
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  if (x < 36.0) return std::log(0.5 * std::erfc(x * inv_sqrt2));
  double inv2 = 1.0 / (x * x);
  double series = 1.0 + inv2 * (-1.0 + inv2 * (3.0 + inv2 * (-15.0 + inv2 * 105.0)));
  return -0.5 * x * x - std::log(x) - half_log_2pi + std::log(series);
}

/// Antiderivative of the normal CDF: psi(z) = z*Phi(z) + N(z), with
/// psi(-inf) = 0 and psi(z) ~ z for large z.
inline double psi(double z) {
  if (std::isinf(z)) return z > 0 ? z : 0.0;
  return gaussian_cdf(z) * z + gaussian_pdf(z);
}

} // namespace rankforge
