#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rankforge/normal.hpp"
#include "rankforge/params.hpp"
#include "rankforge/thresholds.hpp"

namespace rankforge {

namespace detail {

/// Phi(b) - Phi(a) for a < b, evaluated through whichever tail keeps the
/// subtraction cancellation-free. When a and b sit in the same tail the
/// mirrored pair (-b, -a) takes the exact same code path, so symmetric
/// thresholds give bit-identical mirrored cell probabilities.
inline double cdf_cell(double a, double b) {
  if (std::isinf(a) && a < 0) return std::isinf(b) ? 1.0 : gaussian_cdf(b);
  if (std::isinf(b) && b > 0) return gaussian_upper(a);
  if (a >= 0.0) return gaussian_upper(a) - gaussian_upper(b);
  if (b <= 0.0) return gaussian_cdf(b) - gaussian_cdf(a);
  return gaussian_cdf(b) - gaussian_cdf(a);
}

/// log(Phi(b) - Phi(a)), falling back to a log-space difference when the
/// cell mass underflows to zero in double precision.
inline double log_cdf_cell(double a, double b) {
  double p = cdf_cell(a, b);
  if (p > 0.0) return std::log(p);
  // Both end points are far out in the same tail; express the cell through
  // log tail masses and log1p(-exp(delta)).
  double lo, hi;  // log of the larger and smaller tail mass
  if (a >= 0.0) {
    lo = log_gaussian_tail(a);
    hi = std::isinf(b) ? -std::numeric_limits<double>::infinity() : log_gaussian_tail(b);
  } else {
    lo = log_gaussian_tail(-b);
    hi = std::isinf(a) ? -std::numeric_limits<double>::infinity() : log_gaussian_tail(-a);
  }
  if (std::isinf(hi)) return lo;
  double d = hi - lo;  // <= 0
  return lo + std::log1p(-std::exp(d));
}

inline double pdf_or_zero(double x) { return std::isinf(x) ? 0.0 : gaussian_pdf(x); }

/// d/dx N(x) = -x N(x), zero at infinities.
inline double pdf_d1(double x) { return std::isinf(x) ? 0.0 : -x * gaussian_pdf(x); }

/// d^2/dx^2 N(x) = (x^2 - 1) N(x), zero at infinities.
inline double pdf_d2(double x) { return std::isinf(x) ? 0.0 : (x * x - 1.0) * gaussian_pdf(x); }

inline void check_outcome(int y, int L) {
  if (y < 0 || y >= L) throw std::out_of_range("loss: outcome index out of range");
}

} // namespace detail

/// P_y(z) = Phi(z + c_y) - Phi(z + c_{y-1}).
inline double outcome_prob(int y, double z, const Thresholds& c) {
  detail::check_outcome(y, c.outcomes());
  return detail::cdf_cell(z + c.c(y - 1), z + c.c(y));
}

inline std::vector<double> outcome_probs(double z, const Thresholds& c) {
  std::vector<double> p(static_cast<std::size_t>(c.outcomes()));
  for (int y = 0; y < c.outcomes(); ++y) p[static_cast<std::size_t>(y)] = outcome_prob(y, z, c);
  return p;
}

// ---------------------------------------------------------------------------
// Negated log-score and its first three derivatives in z.
// ---------------------------------------------------------------------------

inline double log_loss(int y, double z, const Thresholds& c) {
  detail::check_outcome(y, c.outcomes());
  return 0.0 - detail::log_cdf_cell(z + c.c(y - 1), z + c.c(y));
}

inline double log_loss_d1(int y, double z, const Thresholds& c) {
  detail::check_outcome(y, c.outcomes());
  double a = z + c.c(y - 1), b = z + c.c(y);
  double p = detail::cdf_cell(a, b);
  double dp = detail::pdf_or_zero(b) - detail::pdf_or_zero(a);
  return -dp / p;
}

inline double log_loss_d2(int y, double z, const Thresholds& c) {
  detail::check_outcome(y, c.outcomes());
  double a = z + c.c(y - 1), b = z + c.c(y);
  double p = detail::cdf_cell(a, b);
  double dp = detail::pdf_or_zero(b) - detail::pdf_or_zero(a);
  double d2p = detail::pdf_d1(b) - detail::pdf_d1(a);
  double ratio = dp / p;
  return -d2p / p + ratio * ratio;
}

inline double log_loss_d3(int y, double z, const Thresholds& c) {
  detail::check_outcome(y, c.outcomes());
  double a = z + c.c(y - 1), b = z + c.c(y);
  double p = detail::cdf_cell(a, b);
  double dp = detail::pdf_or_zero(b) - detail::pdf_or_zero(a);
  double d2p = detail::pdf_d1(b) - detail::pdf_d1(a);
  double d3p = detail::pdf_d2(b) - detail::pdf_d2(a);
  double r1 = dp / p, r2 = d2p / p;
  return -d3p / p + 3.0 * r2 * r1 - 2.0 * r1 * r1 * r1;
}

// ---------------------------------------------------------------------------
// Expected numerical score and the implicit FIVB loss.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_scores(const Thresholds& c, const NumericalScores& r) {
  if (r.outcomes() != c.outcomes())
    throw std::invalid_argument("scores: length must equal the outcome count");
}

} // namespace detail

/// Expected score sum_y r_y P_y(z), accumulated with Neumaier compensation
/// so that antisymmetric scores over symmetric cells cancel exactly.
inline double expected_score(double z, const Thresholds& c, const NumericalScores& r) {
  detail::check_scores(c, r);
  double sum = 0.0, comp = 0.0;
  for (int y = 0; y < c.outcomes(); ++y) {
    double term = r.r[static_cast<std::size_t>(y)] * outcome_prob(y, z, c);
    double t = sum + term;
    if (std::abs(sum) >= std::abs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

/// The telescoped form sum_l (r_l - r_{l+1}) Phi(z + c_l) + r_{L-1}.
inline double expected_score_telescoped(double z, const Thresholds& c, const NumericalScores& r) {
  detail::check_scores(c, r);
  int L = c.outcomes();
  double acc = r.r[static_cast<std::size_t>(L - 1)];
  for (int l = 0; l < L - 1; ++l)
    acc += (r.r[static_cast<std::size_t>(l)] - r.r[static_cast<std::size_t>(l + 1)]) *
           gaussian_cdf(z + c.c(l));
  return acc;
}

/// Implicit loss of the FIVB update: the antiderivative of
/// (expected score - r_y), with the integration constant fixed to zero.
inline double implicit_loss(int y, double z, const Thresholds& c, const NumericalScores& r) {
  detail::check_scores(c, r);
  detail::check_outcome(y, c.outcomes());
  int L = c.outcomes();
  double acc = (r.r[static_cast<std::size_t>(L - 1)] - r.r[static_cast<std::size_t>(y)]) * z;
  for (int l = 0; l < L - 1; ++l)
    acc += (r.r[static_cast<std::size_t>(l)] - r.r[static_cast<std::size_t>(l + 1)]) *
           psi(z + c.c(l));
  return acc;
}

inline double implicit_loss_d1(int y, double z, const Thresholds& c, const NumericalScores& r) {
  detail::check_outcome(y, c.outcomes());
  return expected_score(z, c, r) - r.r[static_cast<std::size_t>(y)];
}

/// Second derivative; independent of the outcome index.
inline double implicit_loss_d2(int, double z, const Thresholds& c, const NumericalScores& r) {
  detail::check_scores(c, r);
  int L = c.outcomes();
  double acc = 0.0;
  for (int l = 0; l < L - 1; ++l)
    acc += (r.r[static_cast<std::size_t>(l)] - r.r[static_cast<std::size_t>(l + 1)]) *
           gaussian_pdf(z + c.c(l));
  return acc;
}

inline double implicit_loss_d3(int, double z, const Thresholds& c, const NumericalScores& r) {
  detail::check_scores(c, r);
  int L = c.outcomes();
  double acc = 0.0;
  for (int l = 0; l < L - 1; ++l)
    acc += (r.r[static_cast<std::size_t>(l)] - r.r[static_cast<std::size_t>(l + 1)]) *
           detail::pdf_d1(z + c.c(l));
  return acc;
}

// ---------------------------------------------------------------------------
// Loss dispatch on LossKind.
// ---------------------------------------------------------------------------

inline double loss_value(LossKind k, int y, double z, const ModelParams& p) {
  return k == LossKind::LogScore ? log_loss(y, z, p.thresholds)
                                 : implicit_loss(y, z, p.thresholds, p.scores);
}

inline double loss_d1(LossKind k, int y, double z, const ModelParams& p) {
  return k == LossKind::LogScore ? log_loss_d1(y, z, p.thresholds)
                                 : implicit_loss_d1(y, z, p.thresholds, p.scores);
}

inline double loss_d2(LossKind k, int y, double z, const ModelParams& p) {
  return k == LossKind::LogScore ? log_loss_d2(y, z, p.thresholds)
                                 : implicit_loss_d2(y, z, p.thresholds, p.scores);
}

inline double loss_d3(LossKind k, int y, double z, const ModelParams& p) {
  return k == LossKind::LogScore ? log_loss_d3(y, z, p.thresholds)
                                 : implicit_loss_d3(y, z, p.thresholds, p.scores);
}

// ---------------------------------------------------------------------------
// Score matching and the convexity certificate.
// ---------------------------------------------------------------------------

/// Scores that make the implicit loss match the log-score's first
/// derivatives at z = 0: r_y = r_0 * l'_y(0) / l'_0(0). Requires symmetric
/// thresholds (the anchor z = 0 relies on the expected score vanishing).
inline NumericalScores matched_scores(const Thresholds& c, double r0 = 2.0) {
  if (!c.symmetric())
    throw std::invalid_argument("matched_scores: thresholds must be symmetric");
  if (!(r0 > 0.0)) throw std::invalid_argument("matched_scores: r0 must be positive");
  double d0 = log_loss_d1(0, 0.0, c);
  std::vector<double> r(static_cast<std::size_t>(c.outcomes()));
  for (int y = 0; y < c.outcomes(); ++y)
    r[static_cast<std::size_t>(y)] = r0 * log_loss_d1(y, 0.0, c) / d0;
  return NumericalScores(std::move(r));
}

/// Result of the grid-based convexity certificate for the implicit loss:
/// convex iff the expected score is non-decreasing over the sampled range.
struct ConvexityReport {
  bool convex = true;
  double violation_lo = 0.0;  // first grid interval where the score decreases
  double violation_hi = 0.0;
  double violation_drop = 0.0;
};

inline ConvexityReport check_convexity(const Thresholds& c, const NumericalScores& r,
                                       double z_min = -8.0, double z_max = 8.0,
                                       int points = 4001) {
  detail::check_scores(c, r);
  if (points < 2 || !(z_min < z_max))
    throw std::invalid_argument("check_convexity: bad grid spec");
  ConvexityReport rep;
  double prev = expected_score_telescoped(z_min, c, r);
  for (int i = 1; i < points; ++i) {
    double z = z_min + (z_max - z_min) * static_cast<double>(i) / (points - 1);
    double cur = expected_score_telescoped(z, c, r);
    if (cur < prev - 1e-12) {
      rep.convex = false;
      rep.violation_lo = z_min + (z_max - z_min) * static_cast<double>(i - 1) / (points - 1);
      rep.violation_hi = z;
      rep.violation_drop = prev - cur;
      return rep;
    }
    prev = cur;
  }
  return rep;
}

} // namespace rankforge
