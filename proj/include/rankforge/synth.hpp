#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankforge/dataset.hpp"
#include "rankforge/loss.hpp"
#include "rankforge/params.hpp"

namespace rankforge {

struct SynthResult {
  Dataset data;
  std::vector<double> true_skills;  // latent-scale skills per dense index
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string synth_date(int day_offset) {
  // Sequential ISO dates starting 2021-01-01 keep chronological == file order.
  std::chrono::sys_days base = std::chrono::year{2021} / 1 / 1;
  std::chrono::year_month_day ymd{base + std::chrono::days{day_offset}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string synth_team(int idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "T%03d", idx);
  return buf;
}

} // namespace detail

/// Draws a dataset from the cumulative-link model itself: random pairings,
/// Bernoulli home venues, outcomes sampled from outcome_probs at
/// z + h*eta. Skills default to zero-mean Gaussians with variance
/// 1/(2*gamma). Deterministic for a fixed seed.
inline SynthResult synthesize(int teams, int matches, const ModelParams& p, std::uint64_t seed,
                              std::optional<std::vector<double>> true_skills = std::nullopt,
                              double p_home = 0.34) {
  if (teams < 2) throw std::invalid_argument("synthesize: need at least two teams");
  if (matches < 1) throw std::invalid_argument("synthesize: need at least one match");
  p.validate();

  std::mt19937_64 rng(seed);
  SynthResult out;
  out.seed = seed;

  if (true_skills.has_value()) {
    if (static_cast<int>(true_skills->size()) != teams)
      throw std::invalid_argument("synthesize: true_skills size must equal team count");
    out.true_skills = std::move(*true_skills);
  } else {
    double sigma = p.gamma > 0.0 ? std::sqrt(1.0 / (2.0 * p.gamma)) : 1.0;
    std::normal_distribution<double> prior(0.0, sigma);
    out.true_skills.resize(static_cast<std::size_t>(teams));
    for (auto& s : out.true_skills) s = prior(rng);
  }

  for (int m = 0; m < teams; ++m) out.data.intern_team(detail::synth_team(m));

  std::uniform_int_distribution<int> pick_team(0, teams - 1);
  std::uniform_int_distribution<int> pick_category(0, p.categories() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int L = p.outcomes();

  for (int t = 0; t < matches; ++t) {
    MatchRecord rec;
    rec.date = detail::synth_date(t);
    rec.home = pick_team(rng);
    do {
      rec.away = pick_team(rng);
    } while (rec.away == rec.home);
    rec.venue = unif(rng) < p_home ? 1 : 0;
    rec.category = pick_category(rng);
    double z = out.true_skills[static_cast<std::size_t>(rec.home)] -
               out.true_skills[static_cast<std::size_t>(rec.away)] +
               (rec.venue ? p.eta : 0.0);
    double u = unif(rng);
    double acc = 0.0;
    rec.outcome = L - 1;
    for (int y = 0; y < L; ++y) {
      acc += outcome_prob(y, z, p.thresholds);
      if (u < acc) {
        rec.outcome = y;
        break;
      }
    }
    out.data.matches.push_back(std::move(rec));
  }
  return out;
}

} // namespace rankforge
