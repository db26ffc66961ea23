#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace rankforge {

/// Cut points of the cumulative-link model. For L outcomes there are L-1
/// finite interior cut points c_0..c_{L-2}; the extended points c_{-1} and
/// c_{L-1} are fixed at -inf/+inf. When `symmetric` is set the interior
/// satisfies c_y = -c_{L-2-y}, which pins the middle point to zero for
/// even L and leaves floor((L-1)/2) free values.
class Thresholds {
public:
  Thresholds(std::vector<double> interior, bool symmetric = false)
      : interior_(std::move(interior)), symmetric_(symmetric) {
    if (interior_.empty()) throw std::invalid_argument("thresholds: need at least one cut point");
    for (std::size_t i = 0; i < interior_.size(); ++i) {
      if (!std::isfinite(interior_[i]))
        throw std::invalid_argument("thresholds: interior cut points must be finite");
      if (i > 0 && !(interior_[i - 1] < interior_[i]))
        throw std::invalid_argument("thresholds: cut points must be strictly increasing");
    }
    if (symmetric_) {
      std::size_t n = interior_.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(interior_[i] + interior_[n - 1 - i]) > 1e-12)
          throw std::invalid_argument("thresholds: symmetry flag set but c_y != -c_{L-2-y}");
      }
    }
  }

  /// Builds a symmetric set from its free lower-half values (ascending,
  /// all negative). For L outcomes, `free_values` has free_count(L) entries.
  static Thresholds symmetric_from_free(std::span<const double> free_values, int outcomes) {
    int interior = outcomes - 1;
    if (static_cast<int>(free_values.size()) != free_count(outcomes))
      throw std::invalid_argument("thresholds: wrong number of free values");
    std::vector<double> c(static_cast<std::size_t>(interior));
    for (int i = 0; i < free_count(outcomes); ++i) {
      c[static_cast<std::size_t>(i)] = free_values[static_cast<std::size_t>(i)];
      c[static_cast<std::size_t>(interior - 1 - i)] = -free_values[static_cast<std::size_t>(i)];
    }
    if (interior % 2 == 1) c[static_cast<std::size_t>(interior / 2)] = 0.0;
    return Thresholds(std::move(c), true);
  }

  /// The official FIVB cut points for six outcomes.
  static Thresholds fivb() {
    return Thresholds({-1.06, -0.394, 0.0, 0.394, 1.06}, true);
  }

  int outcomes() const { return static_cast<int>(interior_.size()) + 1; }

  static int free_count(int outcomes) { return (outcomes - 1) / 2; }

  /// c_y for y in [-1, L-1]; the extremes are +-inf.
  double c(int y) const {
    int L = outcomes();
    if (y < -1 || y > L - 1) throw std::out_of_range("thresholds: index out of range");
    if (y == -1) return -std::numeric_limits<double>::infinity();
    if (y == L - 1) return std::numeric_limits<double>::infinity();
    return interior_[static_cast<std::size_t>(y)];
  }

  std::span<const double> interior() const { return interior_; }
  bool symmetric() const { return symmetric_; }

  std::vector<double> free_values() const {
    if (!symmetric_) throw std::logic_error("thresholds: free values require symmetry");
    std::vector<double> out(static_cast<std::size_t>(free_count(outcomes())));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = interior_[i];
    return out;
  }

  bool operator==(const Thresholds& other) const = default;

private:
  std::vector<double> interior_;
  bool symmetric_;
};

} // namespace rankforge
