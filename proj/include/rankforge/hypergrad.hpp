#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rankforge/alo.hpp"
#include "rankforge/fit.hpp"
#include "rankforge/loss.hpp"
#include "rankforge/params.hpp"

namespace rankforge {

/// Which hyper-parameter groups are free. Thresholds and scores are reduced
/// to their free coordinates (symmetry, antisymmetry with r_0 fixed);
/// weights exclude xi_0, which is pinned to one.
struct HyperSpec {
  bool thresholds = false;
  bool eta = false;
  bool scores = false;
  bool weights = false;
  bool gamma = false;
};

/// dU/dq for the requested groups, in the reduced coordinates.
struct HyperGradient {
  std::vector<double> thresholds;  // free cut points (c_0, c_1 for L = 6)
  double eta = 0.0;
  std::vector<double> scores;      // free scores (r_1, r_2 for L = 6)
  std::vector<double> weights;     // xi_1 .. xi_{K-1}
  double gamma = 0.0;
};

namespace detail {

// Explicit partial derivatives of the loss derivatives with respect to one
// interior cut point (index k in [0, L-2]) or one score component, holding
// z fixed. These feed the implicit-function-theorem chain.

struct LogCellRefs {
  double a, b, P, P1, P2;  // cell end points, mass, and its first two z-derivatives
};

inline LogCellRefs log_cell(int y, double z, const Thresholds& c) {
  double a = z + c.c(y - 1), b = z + c.c(y);
  return {a, b, cdf_cell(a, b), pdf_or_zero(b) - pdf_or_zero(a), pdf_d1(b) - pdf_d1(a)};
}

/// d(log_loss)/dc_k; nonzero only for k = y or k = y-1.
inline double log_loss_dc(int y, double z, const Thresholds& c, int k) {
  if (k != y && k != y - 1) return 0.0;
  if (k < 0 || k > c.outcomes() - 2) return 0.0;
  LogCellRefs r = log_cell(y, z, c);
  double dP = (k == y) ? gaussian_pdf(r.b) : -gaussian_pdf(r.a);
  return -dP / r.P;
}

/// d(log_loss_d1)/dc_k.
inline double log_loss_d1_dc(int y, double z, const Thresholds& c, int k) {
  if (k != y && k != y - 1) return 0.0;
  if (k < 0 || k > c.outcomes() - 2) return 0.0;
  LogCellRefs r = log_cell(y, z, c);
  double dP, dP1;
  if (k == y) {
    dP = gaussian_pdf(r.b);
    dP1 = -r.b * gaussian_pdf(r.b);
  } else {
    dP = -gaussian_pdf(r.a);
    dP1 = r.a * gaussian_pdf(r.a);
  }
  return -(dP1 * r.P - r.P1 * dP) / (r.P * r.P);
}

/// d(log_loss_d2)/dc_k.
inline double log_loss_d2_dc(int y, double z, const Thresholds& c, int k) {
  if (k != y && k != y - 1) return 0.0;
  if (k < 0 || k > c.outcomes() - 2) return 0.0;
  LogCellRefs r = log_cell(y, z, c);
  double dP, dP1, dP2;
  if (k == y) {
    double Nb = gaussian_pdf(r.b);
    dP = Nb;
    dP1 = -r.b * Nb;
    dP2 = (r.b * r.b - 1.0) * Nb;
  } else {
    double Na = gaussian_pdf(r.a);
    dP = -Na;
    dP1 = r.a * Na;
    dP2 = (1.0 - r.a * r.a) * Na;
  }
  double P = r.P;
  double d_ratio1 = (dP1 * P - r.P1 * dP) / (P * P);
  double d_ratio2 = (dP2 * P - r.P2 * dP) / (P * P);
  return -d_ratio2 + 2.0 * (r.P1 / P) * d_ratio1;
}

inline double implicit_d1_dc(double z, const Thresholds& c, const NumericalScores& r, int k) {
  double dr = r.r[static_cast<std::size_t>(k)] - r.r[static_cast<std::size_t>(k + 1)];
  return dr * gaussian_pdf(z + c.c(k));
}

inline double implicit_d2_dc(double z, const Thresholds& c, const NumericalScores& r, int k) {
  double dr = r.r[static_cast<std::size_t>(k)] - r.r[static_cast<std::size_t>(k + 1)];
  return dr * pdf_d1(z + c.c(k));
}

inline double implicit_d1_dr(int y, double z, const Thresholds& c, int k) {
  return outcome_prob(k, z, c) - (k == y ? 1.0 : 0.0);
}

inline double implicit_d2_dr(double z, const Thresholds& c, int k) {
  int L = c.outcomes();
  double acc = 0.0;
  if (k <= L - 2) acc += gaussian_pdf(z + c.c(k));
  if (k >= 1) acc -= gaussian_pdf(z + c.c(k - 1));
  return acc;
}

/// Raw scalar hyper-parameters before symmetry reduction.
struct RawParam {
  enum Kind { Cut, Eta, Score, Weight, Gamma } kind;
  int index = 0;
};

inline double loss_d1_partial(LossKind kind, const RawParam& q, int y, double z,
                              const ModelParams& p) {
  switch (q.kind) {
    case RawParam::Cut:
      return kind == LossKind::LogScore ? log_loss_d1_dc(y, z, p.thresholds, q.index)
                                        : implicit_d1_dc(z, p.thresholds, p.scores, q.index);
    case RawParam::Score:
      return kind == LossKind::LogScore ? 0.0 : implicit_d1_dr(y, z, p.thresholds, q.index);
    default:
      return 0.0;
  }
}

inline double loss_d2_partial(LossKind kind, const RawParam& q, int y, double z,
                              const ModelParams& p) {
  switch (q.kind) {
    case RawParam::Cut:
      return kind == LossKind::LogScore ? log_loss_d2_dc(y, z, p.thresholds, q.index)
                                        : implicit_d2_dc(z, p.thresholds, p.scores, q.index);
    case RawParam::Score:
      return kind == LossKind::LogScore ? 0.0 : implicit_d2_dr(z, p.thresholds, q.index);
    default:
      return 0.0;
  }
}

} // namespace detail

/// Gradient of the approximate leave-one-out metric U with respect to the
/// free hyper-parameters, from one converged fit. The skill estimate enters
/// through the implicit-function identity d theta / dq = -H^-1 d(grad J)/dq,
/// and the leverage terms through the total derivative of the Hessian.
inline HyperGradient hyper_grad_from_fit(const FitResult& full, const Dataset& d,
                                         const ModelParams& p, LossKind kind,
                                         const HyperSpec& spec) {
  const std::size_t T = d.matches.size();
  if (T == 0) throw std::invalid_argument("hyper_grad: empty dataset");
  const int L = p.outcomes();
  const int K = p.categories();
  const auto M = full.theta.size();

  Eigen::LLT<Eigen::MatrixXd> llt = detail::factor_hessian(full.hessian, p.gamma);
  Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(M, M));

  // Per-match state at the full-data optimum.
  std::vector<double> zhat(T), zeta(T), w(T), g1(T), g2(T), g3(T), lev(T), den(T), corr(T),
      zeta_star(T), val_d1(T);
  for (std::size_t t = 0; t < T; ++t) {
    const MatchRecord& m = d.matches[t];
    zhat[t] = full.theta[m.home] - full.theta[m.away];
    zeta[t] = zhat[t] + (m.venue ? p.eta : 0.0);
    w[t] = p.weight(m.category);
    g1[t] = loss_d1(kind, m.outcome, zeta[t], p);
    g2[t] = loss_d2(kind, m.outcome, zeta[t], p);
    g3[t] = loss_d3(kind, m.outcome, zeta[t], p);
    lev[t] = Kinv(m.home, m.home) + Kinv(m.away, m.away) - 2.0 * Kinv(m.home, m.away);
    den[t] = 1.0 - w[t] * g2[t] * lev[t];
    if (!(den[t] > 0.0))
      throw std::runtime_error("hyper_grad: non-positive curvature denominator at t = " +
                               std::to_string(t + 1));
    corr[t] = w[t] * g1[t] * lev[t] / den[t];
    zeta_star[t] = zhat[t] + corr[t] + (m.venue ? p.eta : 0.0);
    val_d1[t] = log_loss_d1(m.outcome, zeta_star[t], p.thresholds);
  }

  // Raw parameter list in the requested groups.
  std::vector<detail::RawParam> raw;
  if (spec.thresholds)
    for (int k = 0; k <= L - 2; ++k) raw.push_back({detail::RawParam::Cut, k});
  if (spec.eta) raw.push_back({detail::RawParam::Eta, 0});
  if (spec.scores)
    for (int k = 0; k < L; ++k) raw.push_back({detail::RawParam::Score, k});
  if (spec.weights)
    for (int k = 1; k < K; ++k) raw.push_back({detail::RawParam::Weight, k});
  if (spec.gamma) raw.push_back({detail::RawParam::Gamma, 0});

  std::vector<double> raw_grad(raw.size(), 0.0);
  Eigen::VectorXd b(M), dtheta(M);
  Eigen::MatrixXd S(M, M), B(M, M);
  std::vector<double> dzeta(T);

  for (std::size_t qi = 0; qi < raw.size(); ++qi) {
    const detail::RawParam& q = raw[qi];
    const bool q_is_eta = q.kind == detail::RawParam::Eta;
    const bool q_is_gamma = q.kind == detail::RawParam::Gamma;

    // Partial of the objective gradient at fixed theta.
    b.setZero();
    for (std::size_t t = 0; t < T; ++t) {
      const MatchRecord& m = d.matches[t];
      double dw = (q.kind == detail::RawParam::Weight && m.category == q.index) ? 1.0 : 0.0;
      double pg = dw * g1[t] + w[t] * (detail::loss_d1_partial(kind, q, m.outcome, zeta[t], p) +
                                       (q_is_eta && m.venue ? g2[t] : 0.0));
      if (pg != 0.0) {
        b[m.home] += pg;
        b[m.away] -= pg;
      }
    }
    if (q_is_gamma) b += full.theta;
    dtheta = -(Kinv * b);

    for (std::size_t t = 0; t < T; ++t) {
      const MatchRecord& m = d.matches[t];
      dzeta[t] = dtheta[m.home] - dtheta[m.away] + (q_is_eta && m.venue ? 1.0 : 0.0);
    }

    // Total derivative of the Hessian and of the leverages.
    S.setZero();
    for (std::size_t t = 0; t < T; ++t) {
      const MatchRecord& m = d.matches[t];
      double dw = (q.kind == detail::RawParam::Weight && m.category == q.index) ? 1.0 : 0.0;
      double kap = dw * g2[t] + w[t] * (g3[t] * dzeta[t] +
                                        detail::loss_d2_partial(kind, q, m.outcome, zeta[t], p));
      if (kap != 0.0) {
        S(m.home, m.home) += kap;
        S(m.away, m.away) += kap;
        S(m.home, m.away) -= kap;
        S(m.away, m.home) -= kap;
      }
    }
    if (q_is_gamma) S.diagonal().array() += 1.0;
    B = Kinv * S * Kinv;

    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const MatchRecord& m = d.matches[t];
      double da = -(B(m.home, m.home) + B(m.away, m.away) - 2.0 * B(m.home, m.away));
      double dw = (q.kind == detail::RawParam::Weight && m.category == q.index) ? 1.0 : 0.0;
      double dg1 = g2[t] * dzeta[t] + detail::loss_d1_partial(kind, q, m.outcome, zeta[t], p);
      double dg2 = g3[t] * dzeta[t] + detail::loss_d2_partial(kind, q, m.outcome, zeta[t], p);
      double n = w[t] * g1[t] * lev[t];
      double dn = dw * g1[t] * lev[t] + w[t] * dg1 * lev[t] + w[t] * g1[t] * da;
      double dden = -(dw * g2[t] * lev[t] + w[t] * dg2 * lev[t] + w[t] * g2[t] * da);
      double dcorr = dn / den[t] - n * dden / (den[t] * den[t]);
      double dz_star = (dtheta[m.home] - dtheta[m.away]) + dcorr;
      double dzeta_star = dz_star + (q_is_eta && m.venue ? 1.0 : 0.0);
      double contrib = val_d1[t] * dzeta_star;
      if (q.kind == detail::RawParam::Cut)
        contrib += detail::log_loss_dc(m.outcome, zeta_star[t], p.thresholds, q.index);
      acc += contrib;
    }
    raw_grad[qi] = acc / static_cast<double>(T);
  }

  // Reduce to free coordinates.
  HyperGradient out;
  std::size_t pos = 0;
  if (spec.thresholds) {
    if (p.thresholds.symmetric()) {
      int nfree = Thresholds::free_count(L);
      out.thresholds.resize(static_cast<std::size_t>(nfree));
      for (int f = 0; f < nfree; ++f)
        out.thresholds[static_cast<std::size_t>(f)] =
            raw_grad[pos + static_cast<std::size_t>(f)] -
            raw_grad[pos + static_cast<std::size_t>(L - 2 - f)];
    } else {
      out.thresholds.assign(raw_grad.begin() + static_cast<std::ptrdiff_t>(pos),
                            raw_grad.begin() + static_cast<std::ptrdiff_t>(pos) + (L - 1));
    }
    pos += static_cast<std::size_t>(L - 1);
  }
  if (spec.eta) out.eta = raw_grad[pos++];
  if (spec.scores) {
    if (p.scores.antisymmetric() && L % 2 == 0) {
      out.scores.resize(static_cast<std::size_t>(L / 2 - 1));
      for (int f = 1; f < L / 2; ++f)
        out.scores[static_cast<std::size_t>(f - 1)] =
            raw_grad[pos + static_cast<std::size_t>(f)] -
            raw_grad[pos + static_cast<std::size_t>(L - 1 - f)];
    } else {
      out.scores.assign(raw_grad.begin() + static_cast<std::ptrdiff_t>(pos),
                        raw_grad.begin() + static_cast<std::ptrdiff_t>(pos) + L);
    }
    pos += static_cast<std::size_t>(L);
  }
  if (spec.weights) {
    out.weights.assign(raw_grad.begin() + static_cast<std::ptrdiff_t>(pos),
                       raw_grad.begin() + static_cast<std::ptrdiff_t>(pos) + (K - 1));
    pos += static_cast<std::size_t>(K - 1);
  }
  if (spec.gamma) out.gamma = raw_grad[pos++];
  return out;
}

inline HyperGradient hyper_grad(const Dataset& d, const ModelParams& p, LossKind kind,
                                const HyperSpec& spec) {
  FitResult full = fit(d, p, kind);
  return hyper_grad_from_fit(full, d, p, kind, spec);
}

} // namespace rankforge
