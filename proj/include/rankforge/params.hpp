#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rankforge/thresholds.hpp"

namespace rankforge {

/// Per-outcome numerical scores r_0..r_{L-1}. They parameterize the
/// implicit FIVB loss; they need not be monotone in the outcome index.
struct NumericalScores {
  std::vector<double> r;

  NumericalScores() = default;
  explicit NumericalScores(std::vector<double> values) : r(std::move(values)) {}

  static NumericalScores fivb() { return NumericalScores({2.0, 1.5, 1.0, -1.0, -1.5, -2.0}); }

  /// Builds an antisymmetric score vector from r_0 and the free middle
  /// values r_1..r_{L/2-1} (even L).
  static NumericalScores antisymmetric_from_free(double r0, std::span<const double> free_values,
                                                 int outcomes) {
    if (outcomes % 2 != 0)
      throw std::invalid_argument("scores: antisymmetric construction needs even L");
    if (static_cast<int>(free_values.size()) != outcomes / 2 - 1)
      throw std::invalid_argument("scores: wrong number of free values");
    std::vector<double> r(static_cast<std::size_t>(outcomes));
    r[0] = r0;
    r[static_cast<std::size_t>(outcomes - 1)] = -r0;
    for (int i = 1; i < outcomes / 2; ++i) {
      r[static_cast<std::size_t>(i)] = free_values[static_cast<std::size_t>(i - 1)];
      r[static_cast<std::size_t>(outcomes - 1 - i)] = -free_values[static_cast<std::size_t>(i - 1)];
    }
    return NumericalScores(std::move(r));
  }

  int outcomes() const { return static_cast<int>(r.size()); }

  bool antisymmetric(double tol = 1e-12) const {
    for (std::size_t i = 0; i < r.size(); ++i)
      if (std::abs(r[i] + r[r.size() - 1 - i]) > tol) return false;
    return true;
  }

  bool operator==(const NumericalScores& other) const = default;
};

/// Which per-match loss drives estimation: the exact negated log-score or
/// the implicit loss the FIVB update integrates to (parameterized by the
/// numerical scores).
enum class LossKind { LogScore, ImplicitFivb };

inline const char* to_string(LossKind k) {
  return k == LossKind::LogScore ? "log" : "fivb";
}

/// Every hyper-parameter of the model and algorithm in one place.
struct ModelParams {
  Thresholds thresholds = Thresholds::fivb();
  double eta = 0.0;                  // home-venue offset on the latent scale
  NumericalScores scores = NumericalScores::fivb();
  std::vector<double> weights = fivb_weights();  // xi per match category
  double gamma = 0.5;                // L2 regularization strength
  double scale = 125.0;              // display scale s
  double mu = 0.01;                  // adaptation step of the online update

  static std::vector<double> fivb_weights() {
    return {1.00, 1.75, 2.00, 3.50, 4.00, 4.50, 5.00};
  }

  static ModelParams fivb() { return ModelParams{}; }

  int outcomes() const { return thresholds.outcomes(); }
  int categories() const { return static_cast<int>(weights.size()); }

  double weight(int category) const {
    if (category < 0 || category >= categories())
      throw std::out_of_range("params: unknown match category");
    return weights[static_cast<std::size_t>(category)];
  }

  void validate() const {
    if (!(gamma >= 0.0)) throw std::invalid_argument("params: gamma must be >= 0");
    if (!(scale > 0.0)) throw std::invalid_argument("params: scale must be > 0");
    if (!(mu > 0.0)) throw std::invalid_argument("params: mu must be > 0");
    if (weights.empty()) throw std::invalid_argument("params: need at least one weight");
    for (double w : weights)
      if (!(w >= 0.0)) throw std::invalid_argument("params: weights must be >= 0");
    if (scores.outcomes() != 0 && scores.outcomes() != outcomes())
      throw std::invalid_argument("params: scores length must match outcome count");
  }
};

} // namespace rankforge
