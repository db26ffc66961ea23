#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankforge/dataset.hpp"
#include "rankforge/fit.hpp"
#include "rankforge/loss.hpp"
#include "rankforge/parallel.hpp"
#include "rankforge/params.hpp"

namespace rankforge {

/// Leave-one-out validation report. z_loo holds the held-out latent
/// differences x_t' theta_hat_{\t}; the metrics always score them with the
/// log-score at the venue-shifted argument, whatever loss trained the fit.
struct AloReport {
  std::vector<double> z_loo;
  std::vector<double> leverage;  // a_t = x_t' H^-1 x_t from the full fit
  double U = 0.0;
  double V = 1.0;
  double U_ntr = 0.0;
  double U_hfa = 0.0;
  std::size_t T = 0;
  std::size_t T_ntr = 0;
  std::size_t T_hfa = 0;
  ModelParams params;
  LossKind kind = LossKind::LogScore;
};

namespace detail {

inline void fill_metrics(AloReport& rep, const Dataset& d, const ModelParams& p) {
  double sum_ntr = 0.0, sum_hfa = 0.0;
  std::size_t n_ntr = 0, n_hfa = 0;
  for (std::size_t t = 0; t < d.matches.size(); ++t) {
    const MatchRecord& m = d.matches[t];
    double arg = rep.z_loo[t] + (m.venue ? p.eta : 0.0);
    double val = log_loss(m.outcome, arg, p.thresholds);
    if (m.venue) {
      sum_hfa += val;
      ++n_hfa;
    } else {
      sum_ntr += val;
      ++n_ntr;
    }
  }
  rep.T = d.matches.size();
  rep.T_ntr = n_ntr;
  rep.T_hfa = n_hfa;
  rep.U_ntr = n_ntr ? sum_ntr / static_cast<double>(n_ntr) : 0.0;
  rep.U_hfa = n_hfa ? sum_hfa / static_cast<double>(n_hfa) : 0.0;
  rep.U = rep.T ? (sum_ntr + sum_hfa) / static_cast<double>(rep.T) : 0.0;
  rep.V = std::exp(-rep.U);
  rep.params = p;
}

} // namespace detail

/// Brute-force leave-one-out: refits the skills T times, each time with one
/// match removed, warm-started at the full-data optimum. The refits are
/// independent and run in parallel.
inline AloReport exact_loo(const Dataset& d, const ModelParams& p, LossKind kind) {
  if (d.matches.size() < 2) throw std::invalid_argument("exact_loo: need at least two matches");
  FitResult full = fit(d, p, kind);

  AloReport rep;
  rep.kind = kind;
  rep.z_loo.resize(d.matches.size());
  rep.leverage.resize(d.matches.size());

  Eigen::LLT<Eigen::MatrixXd> llt = detail::factor_hessian(full.hessian, p.gamma);
  Eigen::MatrixXd Hinv = llt.solve(Eigen::MatrixXd::Identity(full.hessian.rows(), full.hessian.cols()));
  for (std::size_t t = 0; t < d.matches.size(); ++t) {
    const MatchRecord& m = d.matches[t];
    rep.leverage[t] = Hinv(m.home, m.home) + Hinv(m.away, m.away) - 2.0 * Hinv(m.home, m.away);
  }

  std::vector<std::string> failures(d.matches.size());
  parallel_for(d.matches.size(), [&](std::size_t t) {
    SolverOptions opts;
    opts.exclude = static_cast<int>(t);
    opts.warm_start = &full.theta;
    try {
      FitResult held = fit(d, p, kind, opts);
      const MatchRecord& m = d.matches[t];
      rep.z_loo[t] = held.theta[m.home] - held.theta[m.away];
    } catch (const std::exception& e) {
      failures[t] = e.what();
    }
  });
  for (std::size_t t = 0; t < d.matches.size(); ++t)
    if (!failures[t].empty())
      throw std::runtime_error("exact_loo: held-out fit failed at t = " + std::to_string(t + 1) +
                               ": " + failures[t]);

  detail::fill_metrics(rep, d, p);
  return rep;
}

/// Closed-form approximation of the held-out prediction from one full fit:
///   z_{t,\t} ~= z_t + xi ld(z_t) a_t / (1 - xi ldd(z_t) a_t),
/// with the training-loss derivatives taken at the venue-shifted argument.
inline AloReport alo_from_fit(const FitResult& full, const Dataset& d, const ModelParams& p,
                              LossKind kind) {
  AloReport rep;
  rep.kind = kind;
  rep.z_loo.resize(d.matches.size());
  rep.leverage.resize(d.matches.size());

  Eigen::LLT<Eigen::MatrixXd> llt = detail::factor_hessian(full.hessian, p.gamma);
  Eigen::MatrixXd Hinv = llt.solve(Eigen::MatrixXd::Identity(full.hessian.rows(), full.hessian.cols()));

  for (std::size_t t = 0; t < d.matches.size(); ++t) {
    const MatchRecord& m = d.matches[t];
    double a = Hinv(m.home, m.home) + Hinv(m.away, m.away) - 2.0 * Hinv(m.home, m.away);
    rep.leverage[t] = a;
    double z = full.theta[m.home] - full.theta[m.away];
    double arg = z + (m.venue ? p.eta : 0.0);
    double w = p.weight(m.category);
    double den = 1.0 - w * loss_d2(kind, m.outcome, arg, p) * a;
    if (!(den > 0.0))
      throw std::runtime_error("alo: non-positive curvature denominator at t = " +
                               std::to_string(t + 1) + " (leverage too high; increase gamma)");
    rep.z_loo[t] = z + w * loss_d1(kind, m.outcome, arg, p) * a / den;
  }
  detail::fill_metrics(rep, d, p);
  return rep;
}

inline AloReport alo(const Dataset& d, const ModelParams& p, LossKind kind) {
  FitResult full = fit(d, p, kind);
  return alo_from_fit(full, d, p, kind);
}

} // namespace rankforge
