#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rankforge/dataset.hpp"
#include "rankforge/loss.hpp"
#include "rankforge/params.hpp"

namespace rankforge {

struct FitError : std::runtime_error {
  FitError(const std::string& msg, Eigen::VectorXd iterate, double grad)
      : std::runtime_error(msg), last_iterate(std::move(iterate)), grad_norm(grad) {}
  Eigen::VectorXd last_iterate;
  double grad_norm = 0.0;
};

struct SolverOptions {
  double tol = 0.0;       // 0 -> 1e-9 * max(1, M)
  int max_iter = 100;
  int exclude = -1;       // leave this match index out of the objective
  const Eigen::VectorXd* warm_start = nullptr;
};

struct FitResult {
  Eigen::VectorXd theta;     // latent-scale skills
  double objective = 0.0;
  Eigen::MatrixXd hessian;   // exact Hessian at theta
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
};

namespace detail {

inline double shifted_arg(const Eigen::VectorXd& theta, const MatchRecord& m, double eta) {
  return theta[m.home] - theta[m.away] + (m.venue ? eta : 0.0);
}

/// Without regularization the likelihood has no finite optimum when some
/// team's matches are all extreme results in the same direction: its loss
/// terms are monotone in the skill and it drifts to infinity.
inline void separation_check(const Dataset& d, int outcomes) {
  const int M = d.team_count();
  std::vector<char> has_non_win(static_cast<std::size_t>(M), 0),
      has_non_loss(static_cast<std::size_t>(M), 0), plays(static_cast<std::size_t>(M), 0);
  for (const auto& m : d.matches) {
    plays[static_cast<std::size_t>(m.home)] = plays[static_cast<std::size_t>(m.away)] = 1;
    if (m.outcome != 0) {
      has_non_win[static_cast<std::size_t>(m.home)] = 1;
      has_non_loss[static_cast<std::size_t>(m.away)] = 1;
    }
    if (m.outcome != outcomes - 1) {
      has_non_loss[static_cast<std::size_t>(m.home)] = 1;
      has_non_win[static_cast<std::size_t>(m.away)] = 1;
    }
  }
  for (int i = 0; i < M; ++i) {
    if (plays[static_cast<std::size_t>(i)] &&
        (!has_non_win[static_cast<std::size_t>(i)] || !has_non_loss[static_cast<std::size_t>(i)]))
      throw std::invalid_argument("fit: team '" + d.team_name(i) +
                                  "' has only extreme results in one direction; its skill "
                                  "diverges at gamma = 0 (use gamma > 0)");
  }
}

/// At gamma = 0 the Hessian has the all-ones nullspace (only skill
/// differences matter). Adding a rank-1 term along that direction fixes the
/// gauge without perturbing solves for right-hand sides orthogonal to it.
inline Eigen::LLT<Eigen::MatrixXd> factor_hessian(const Eigen::MatrixXd& H, double gamma) {
  if (gamma > 0.0) return Eigen::LLT<Eigen::MatrixXd>(H);
  const auto M = H.rows();
  double sigma = (H.trace() / static_cast<double>(M) + 1.0) / static_cast<double>(M);
  Eigen::MatrixXd fixed = H;
  fixed.array() += sigma;
  return Eigen::LLT<Eigen::MatrixXd>(fixed);
}

} // namespace detail

/// J(theta) = sum_t xi_{v_t} * loss(y_t, x_t' theta + h_t eta) + (gamma/2) |theta|^2.
inline double objective(const Eigen::VectorXd& theta, const Dataset& d, const ModelParams& p,
                        LossKind kind, int exclude = -1) {
  double acc = 0.5 * p.gamma * theta.squaredNorm();
  for (std::size_t t = 0; t < d.matches.size(); ++t) {
    if (static_cast<int>(t) == exclude) continue;
    const MatchRecord& m = d.matches[t];
    acc += p.weight(m.category) * loss_value(kind, m.outcome, detail::shifted_arg(theta, m, p.eta), p);
  }
  return acc;
}

inline Eigen::VectorXd gradient(const Eigen::VectorXd& theta, const Dataset& d,
                                const ModelParams& p, LossKind kind, int exclude = -1) {
  Eigen::VectorXd g = p.gamma * theta;
  for (std::size_t t = 0; t < d.matches.size(); ++t) {
    if (static_cast<int>(t) == exclude) continue;
    const MatchRecord& m = d.matches[t];
    double gl = p.weight(m.category) * loss_d1(kind, m.outcome, detail::shifted_arg(theta, m, p.eta), p);
    g[m.home] += gl;
    g[m.away] -= gl;
  }
  return g;
}

/// H = sum_t xi * ldd * x x' + gamma I; each match touches exactly four cells.
inline Eigen::MatrixXd hessian(const Eigen::VectorXd& theta, const Dataset& d,
                               const ModelParams& p, LossKind kind, int exclude = -1) {
  const auto M = theta.size();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M, M);
  for (std::size_t t = 0; t < d.matches.size(); ++t) {
    if (static_cast<int>(t) == exclude) continue;
    const MatchRecord& m = d.matches[t];
    double c = p.weight(m.category) * loss_d2(kind, m.outcome, detail::shifted_arg(theta, m, p.eta), p);
    H(m.home, m.home) += c;
    H(m.away, m.away) += c;
    H(m.home, m.away) -= c;
    H(m.away, m.home) -= c;
  }
  H.diagonal().array() += p.gamma;
  return H;
}

/// Newton's method with Armijo backtracking on the regularized objective.
/// Falls back to a plain gradient step when the Hessian factorization
/// fails with gamma > 0. Throws FitError on non-convergence, and when the
/// Hessian is singular at gamma = 0.
inline FitResult fit(const Dataset& d, const ModelParams& p, LossKind kind,
                     SolverOptions opts = {}) {
  p.validate();
  if (kind == LossKind::ImplicitFivb) {
    auto rep = check_convexity(p.thresholds, p.scores);
    if (!rep.convex)
      throw std::invalid_argument(
          "fit: numerical scores give a non-convex implicit loss (expected score decreases on [" +
          std::to_string(rep.violation_lo) + ", " + std::to_string(rep.violation_hi) + "])");
  }
  const int M = d.team_count();
  for (const auto& m : d.matches)
    if (m.outcome < 0 || m.outcome >= p.outcomes())
      throw std::invalid_argument("fit: outcome index out of range for the model");
  if (p.gamma == 0.0 && opts.exclude < 0) detail::separation_check(d, p.outcomes());

  double tol = opts.tol > 0.0 ? opts.tol : 1e-9 * std::max(1, M);
  Eigen::VectorXd theta = opts.warm_start ? *opts.warm_start : Eigen::VectorXd::Zero(M);
  double J = objective(theta, d, p, kind, opts.exclude);

  FitResult res;
  constexpr double armijo = 1e-4;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Eigen::VectorXd g = gradient(theta, d, p, kind, opts.exclude);
    double gn = g.norm();
    if (!std::isfinite(gn)) throw FitError("fit: gradient is not finite", theta, gn);
    if (gn <= tol) {
      res.theta = theta;
      res.objective = J;
      res.hessian = hessian(theta, d, p, kind, opts.exclude);
      res.iterations = iter;
      res.converged = true;
      res.grad_norm = gn;
      return res;
    }

    Eigen::MatrixXd H = hessian(theta, d, p, kind, opts.exclude);
    Eigen::LLT<Eigen::MatrixXd> llt = detail::factor_hessian(H, p.gamma);
    Eigen::VectorXd dir;
    if (llt.info() == Eigen::Success) {
      dir = -llt.solve(g);
    } else if (p.gamma > 0.0) {
      dir = -g / (1.0 + gn);  // conservative fallback step
    } else {
      throw FitError("fit: singular Hessian at gamma = 0; use gamma > 0", theta, gn);
    }

    double slope = g.dot(dir);
    if (slope >= 0.0) {
      dir = -g;
      slope = -gn * gn;
    }
    // Once the predicted decrease drops below the objective's floating-point
    // resolution the Armijo test is meaningless; gate acceptance on gradient
    // contraction instead (Newton contracts strongly this close in).
    bool below_resolution = std::abs(slope) <= 1e-11 * (std::abs(J) + 1.0);
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd cand = theta + step * dir;
      if (below_resolution) {
        double gc = gradient(cand, d, p, kind, opts.exclude).norm();
        if (std::isfinite(gc) && gc < gn) {
          theta = std::move(cand);
          J = objective(theta, d, p, kind, opts.exclude);
          accepted = true;
          break;
        }
      } else {
        double Jc = objective(cand, d, p, kind, opts.exclude);
        if (std::isfinite(Jc) && Jc <= J + armijo * step * slope) {
          theta = std::move(cand);
          J = Jc;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) throw FitError("fit: line search failed", theta, gn);
  }
  throw FitError("fit: no convergence within " + std::to_string(opts.max_iter) + " iterations",
                 theta, gradient(theta, d, p, kind, opts.exclude).norm());
}

} // namespace rankforge
