#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankforge/dataset.hpp"
#include "rankforge/loss.hpp"
#include "rankforge/parallel.hpp"
#include "rankforge/params.hpp"

namespace rankforge {

/// Mutable state of the real-time ranking. Skills live on the display
/// scale (FIVB points); the loss derivatives are evaluated at z / s.
struct RankState {
  Eigen::VectorXd theta;
  std::size_t t = 0;  // next match index
  ModelParams params;
  LossKind kind = LossKind::ImplicitFivb;
};

struct StepDetail {
  double z_display = 0.0;   // x' theta before the update
  double pred_loss = 0.0;   // log-score of the pre-match prediction
  double delta_home = 0.0;  // points applied to the home team
};

/// One stochastic-gradient update:
///   theta' <- theta' - mu s xi x ld(z'/s + h eta).
/// Only the two participating teams change. The prediction is scored with
/// the pre-match skills, before the update touches them.
inline StepDetail step(RankState& state, const MatchRecord& rec) {
  const ModelParams& p = state.params;
  if (rec.home < 0 || rec.home >= state.theta.size() || rec.away < 0 ||
      rec.away >= state.theta.size())
    throw std::out_of_range("step: team index outside the skill vector");
  StepDetail out;
  out.z_display = state.theta[rec.home] - state.theta[rec.away];
  double arg = out.z_display / p.scale + (rec.venue ? p.eta : 0.0);
  out.pred_loss = log_loss(rec.outcome, arg, p.thresholds);
  double delta = -p.mu * p.scale * p.weight(rec.category) *
                 loss_d1(state.kind, rec.outcome, arg, p);
  out.delta_home = delta;
  state.theta[rec.home] += delta;
  state.theta[rec.away] -= delta;
  state.t += 1;
  return out;
}

struct StepTraceRow {
  std::size_t t = 0;  // 1-based chronological index
  std::string home, away;
  int outcome = 0, venue = 0, category = 0;
  double z_display = 0.0, pred_loss = 0.0, delta_home = 0.0;
};

struct OnlineReport {
  double U_bar = 0.0, U_bar_ntr = 0.0, U_bar_hfa = 0.0;
  std::size_t T = 0, T_ntr = 0, T_hfa = 0;
  std::optional<double> rho_bar;      // vs a reference trajectory, when given
  std::vector<int> ranking;           // dense indices, best first
  Eigen::VectorXd final_theta;
  std::vector<StepTraceRow> trace;    // filled when requested
};

/// Spearman rank correlation with average ranks on ties.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("spearman: need at least two entries");
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  std::vector<double> ra = ranks(a), rb = ranks(b);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::invalid_argument("spearman: constant vector has no rank order");
  return sab / std::sqrt(saa * sbb);
}

struct RunOptions {
  bool collect_trace = false;
  /// Reference trajectory theta_t^ref (one vector per match, pre-match);
  /// enables the averaged Spearman correlation.
  const std::vector<Eigen::VectorXd>* reference = nullptr;
};

/// Replays the matches in order: score the one-step-ahead prediction with
/// the current skills, then update them.
inline OnlineReport run(const Dataset& d, const Eigen::VectorXd& init, const ModelParams& p,
                        LossKind kind, const RunOptions& opts = {}) {
  if (init.size() != d.team_count())
    throw std::invalid_argument("run: initial skills must cover all teams (got " +
                                std::to_string(init.size()) + " of " +
                                std::to_string(d.team_count()) + ")");
  if (opts.reference && opts.reference->size() != d.matches.size())
    throw std::invalid_argument("run: reference trajectory must have one entry per match");

  RankState state{init, 0, p, kind};
  OnlineReport rep;
  double sum_ntr = 0.0, sum_hfa = 0.0, sum_rho = 0.0;
  for (std::size_t t = 0; t < d.matches.size(); ++t) {
    const MatchRecord& m = d.matches[t];
    if (opts.reference)
      sum_rho += spearman(std::span<const double>((*opts.reference)[t].data(),
                                                  static_cast<std::size_t>((*opts.reference)[t].size())),
                          std::span<const double>(state.theta.data(),
                                                  static_cast<std::size_t>(state.theta.size())));
    StepDetail det = step(state, m);
    if (m.venue) {
      sum_hfa += det.pred_loss;
      ++rep.T_hfa;
    } else {
      sum_ntr += det.pred_loss;
      ++rep.T_ntr;
    }
    if (opts.collect_trace)
      rep.trace.push_back({t + 1, d.team_name(m.home), d.team_name(m.away), m.outcome, m.venue,
                           m.category, det.z_display, det.pred_loss, det.delta_home});
  }
  rep.T = d.matches.size();
  rep.U_bar_ntr = rep.T_ntr ? sum_ntr / static_cast<double>(rep.T_ntr) : 0.0;
  rep.U_bar_hfa = rep.T_hfa ? sum_hfa / static_cast<double>(rep.T_hfa) : 0.0;
  rep.U_bar = rep.T ? (sum_ntr + sum_hfa) / static_cast<double>(rep.T) : 0.0;
  if (opts.reference && rep.T > 0) rep.rho_bar = sum_rho / static_cast<double>(rep.T);
  rep.final_theta = state.theta;
  rep.ranking.resize(static_cast<std::size_t>(d.team_count()));
  std::iota(rep.ranking.begin(), rep.ranking.end(), 0);
  std::stable_sort(rep.ranking.begin(), rep.ranking.end(),
                   [&](int i, int j) { return rep.final_theta[i] > rep.final_theta[j]; });
  return rep;
}

struct StepSearchResult {
  double best_mu = 0.0;
  std::vector<std::pair<double, OnlineReport>> table;
  bool boundary_minimum = false;  // argmin sits at an end of the grid
};

/// Runs the online ranking once per candidate step and picks the U-minimizing
/// one. Trajectories are independent and evaluated in parallel.
inline StepSearchResult step_search(const Dataset& d, const Eigen::VectorXd& init,
                                    const ModelParams& p, LossKind kind,
                                    std::span<const double> mus) {
  if (mus.empty()) throw std::invalid_argument("step_search: empty step list");
  StepSearchResult out;
  out.table.resize(mus.size());
  std::vector<std::string> failures(mus.size());
  parallel_for(mus.size(), [&](std::size_t i) {
    ModelParams pm = p;
    pm.mu = mus[i];
    try {
      out.table[i] = {mus[i], run(d, init, pm, kind)};
    } catch (const std::exception& e) {
      failures[i] = e.what();
      out.table[i] = {mus[i], OnlineReport{}};
    }
  });
  std::size_t best = mus.size();
  for (std::size_t i = 0; i < mus.size(); ++i) {
    if (!failures[i].empty()) continue;
    if (best == mus.size() || out.table[i].second.U_bar < out.table[best].second.U_bar) best = i;
  }
  if (best == mus.size())
    throw std::runtime_error("step_search: every candidate step failed; first error: " +
                             failures[0]);
  out.best_mu = mus[best];
  out.boundary_minimum = mus.size() > 1 && (best == 0 || best + 1 == mus.size());
  return out;
}

/// One match expressed in the official FIVB vocabulary. WR_points equals
/// the delta the generic update applies to the home team.
struct FivbCompatRecord {
  double wrs1 = 0.0, wrs2 = 0.0;  // home/away world-ranking scores
  double delta = 0.0;             // 8 (WRS1 - WRS2) / 1000
  std::vector<double> probs;      // P1..P6
  double ssv = 0.0;               // numerical score of the observed outcome
  double emr = 0.0;               // expected match result
  double mwf = 0.0;               // match weighting factor, 10 xi
  double wr_value = 0.0;          // SSV - EMR
  double wr_points = 0.0;         // WR_value * MWF / 8
};

/// Maps a pending match onto the official notation. Requires the exact
/// FIVB configuration (s = 125 so that Delta = 8 (WRS1-WRS2)/1000, and
/// mu = 0.01 so that MWF/8 = mu s xi).
inline FivbCompatRecord fivb_notation(const MatchRecord& rec, const RankState& state) {
  const ModelParams& p = state.params;
  if (p.scale != 125.0 || p.mu != 0.01)
    throw std::invalid_argument("fivb_notation: requires the official scale s = 125 and mu = 0.01");
  if (state.kind != LossKind::ImplicitFivb)
    throw std::invalid_argument("fivb_notation: requires the implicit-FIVB loss");
  FivbCompatRecord out;
  out.wrs1 = state.theta[rec.home];
  out.wrs2 = state.theta[rec.away];
  out.delta = 8.0 * (out.wrs1 - out.wrs2) / 1000.0;
  double arg = out.delta + (rec.venue ? p.eta : 0.0);
  out.probs = outcome_probs(arg, p.thresholds);
  out.ssv = p.scores.r.at(static_cast<std::size_t>(rec.outcome));
  out.emr = expected_score(arg, p.thresholds, p.scores);
  out.mwf = 10.0 * p.weight(rec.category);
  out.wr_value = out.ssv - out.emr;
  out.wr_points = out.wr_value * out.mwf / 8.0;

  double applied = -p.mu * p.scale * p.weight(rec.category) *
                   implicit_loss_d1(rec.outcome, arg, p.thresholds, p.scores);
  if (std::abs(out.wr_points - applied) > 1e-12)
    throw std::logic_error("fivb_notation: WR points disagree with the update delta");
  return out;
}

} // namespace rankforge
