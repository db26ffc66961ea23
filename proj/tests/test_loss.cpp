#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "oracle.hpp"
#include "rankforge/loss.hpp"

using namespace rankforge;

namespace {
const Thresholds fivb_c = Thresholds::fivb();
const NumericalScores fivb_r = NumericalScores::fivb();
} // namespace

TEST_CASE("outcome_probs at z = 0 with the official cut points", "[loss]") {
  auto p = outcome_probs(0.0, fivb_c);
  // Frozen from the long-double erfc oracle.
  CHECK(p[0] == Catch::Approx(0.1445722996639096).epsilon(1e-12));
  CHECK(p[1] == Catch::Approx(0.2022182199535656).epsilon(1e-12));
  CHECK(p[2] == Catch::Approx(0.1532094803825248).epsilon(1e-12));
  CHECK(p[3] == Catch::Approx(0.1532094803825248).epsilon(1e-12));
  CHECK(p[4] == Catch::Approx(0.2022182199535656).epsilon(1e-12));
  CHECK(p[5] == Catch::Approx(0.1445722996639096).epsilon(1e-12));
  for (int y = 0; y < 6; ++y) CHECK(p[static_cast<std::size_t>(y)] == p[static_cast<std::size_t>(5 - y)]);
}

TEST_CASE("outcome_probs saturates in the win direction", "[loss]") {
  auto p = outcome_probs(30.0, fivb_c);
  CHECK(p[0] >= 1.0 - 1e-12);
}

TEST_CASE("probabilities: normalization, symmetry, cumulative identity", "[loss][property]") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uz(-6.0, 6.0);
  for (int rep = 0; rep < 10000; ++rep) {
    Thresholds c = oracle::random_thresholds(rng);
    double z = uz(rng);
    auto p = outcome_probs(z, c);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    // cumulative identity: sum_{l<=y} P_l(z) = Phi(z + c_y)
    double acc = 0.0;
    for (int y = 0; y < 5; ++y) {
      acc += p[static_cast<std::size_t>(y)];
      CHECK(std::abs(acc - gaussian_cdf(z + c.c(y))) <= 1e-12);
    }
  }
  for (int rep = 0; rep < 2000; ++rep) {
    Thresholds c = oracle::random_symmetric_thresholds(rng);
    double z = uz(rng);
    auto p = outcome_probs(z, c);
    auto q = outcome_probs(-z, c);
    for (int y = 0; y < 6; ++y)
      CHECK(std::abs(p[static_cast<std::size_t>(y)] - q[static_cast<std::size_t>(5 - y)]) <= 1e-12);
  }
}

TEST_CASE("log_loss values and symmetry", "[loss]") {
  CHECK(log_loss(0, 0.0, fivb_c) == Catch::Approx(1.9339755528649436).epsilon(1e-12));
  CHECK(log_loss(2, 0.0, fivb_c) == log_loss(3, 0.0, fivb_c));
}

TEST_CASE("log_loss is finite far from the data", "[loss]") {
  for (double z : {-30.0, -25.0, 25.0, 30.0}) {
    for (int y = 0; y < 6; ++y) {
      double v = log_loss(y, z, fivb_c);
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
      CHECK_FALSE(std::signbit(v));
    }
  }
  // the losing tail keeps a large positive loss
  CHECK(log_loss(0, -25.0, fivb_c) > 100.0);
  // beyond double-precision tail mass: the log-space fallback must hold
  for (double z : {-45.0, 45.0}) {
    for (int y = 0; y < 6; ++y) CHECK(std::isfinite(log_loss(y, z, fivb_c)));
  }
}

TEST_CASE("log_loss_d1 frozen value", "[loss]") {
  // -N(-1.06)/Phi(-1.06), long-double oracle
  CHECK(log_loss_d1(0, 0.0, fivb_c) == Catch::Approx(-1.5733970683608791).epsilon(1e-12));
  // mirrored outcome flips the sign and the sign of z
  CHECK(log_loss_d1(5, 0.0, fivb_c) == Catch::Approx(-log_loss_d1(0, 0.0, fivb_c)).epsilon(1e-12));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uz(-4.0, 4.0);
  for (int rep = 0; rep < 500; ++rep) {
    double z = uz(rng);
    CHECK(log_loss_d1(5, z, fivb_c) == Catch::Approx(-log_loss_d1(0, -z, fivb_c)).margin(1e-12));
  }
}

TEST_CASE("derivative ladder for the log-score", "[loss][property]") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> uz(-5.0, 5.0);
  std::uniform_int_distribution<int> uy(0, 5);
  for (int rep = 0; rep < 1000; ++rep) {
    Thresholds c = oracle::random_thresholds(rng);
    double z = uz(rng);
    int y = uy(rng);
    double fd1 = oracle::central_diff([&](double x) { return log_loss(y, x, c); }, z);
    double fd2 = oracle::central_diff([&](double x) { return log_loss_d1(y, x, c); }, z);
    double fd3 = oracle::central_diff([&](double x) { return log_loss_d2(y, x, c); }, z);
    CHECK(oracle::rel_err(log_loss_d1(y, z, c), fd1) <= 1e-6);
    CHECK(oracle::rel_err(log_loss_d2(y, z, c), fd2) <= 1e-6);
    CHECK(oracle::rel_err(log_loss_d3(y, z, c), fd3) <= 1e-6);
  }
}

TEST_CASE("expected_score: zero at the symmetric origin, saturation, two routes",
          "[loss]") {
  CHECK(expected_score(0.0, fivb_c, fivb_r) == 0.0);
  CHECK(std::abs(expected_score(30.0, fivb_c, fivb_r) - 2.0) <= 1e-9);
  CHECK(std::abs(expected_score(0.5, fivb_c, fivb_r) -
                 expected_score_telescoped(0.5, fivb_c, fivb_r)) <= 1e-12);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uz(-6.0, 6.0);
  for (int rep = 0; rep < 2000; ++rep) {
    Thresholds c = oracle::random_thresholds(rng);
    NumericalScores r = oracle::random_scores(rng);
    double z = uz(rng);
    CHECK(std::abs(expected_score(z, c, r) - expected_score_telescoped(z, c, r)) <= 1e-12);
  }
  // odd symmetry under symmetric c and antisymmetric r
  for (int rep = 0; rep < 500; ++rep) {
    Thresholds c = oracle::random_symmetric_thresholds(rng);
    double z = uz(rng);
    CHECK(std::abs(expected_score(z, c, fivb_r) + expected_score(-z, c, fivb_r)) <= 1e-12);
  }
}

TEST_CASE("implicit loss: derivative identities", "[loss]") {
  // d1 shares the code path with expected_score - r_y
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uz(-5.0, 5.0);
  std::uniform_int_distribution<int> uy(0, 5);
  for (int rep = 0; rep < 2000; ++rep) {
    Thresholds c = oracle::random_thresholds(rng);
    NumericalScores r = oracle::random_scores(rng);
    double z = uz(rng);
    int y = uy(rng);
    CHECK(implicit_loss_d1(y, z, c, r) ==
          expected_score(z, c, r) - r.r[static_cast<std::size_t>(y)]);
  }
  // fundamental-theorem check at the spot values
  double fd = oracle::central_diff([&](double x) { return implicit_loss(1, x, fivb_c, fivb_r); }, 0.7);
  CHECK(oracle::rel_err(implicit_loss_d1(1, 0.7, fivb_c, fivb_r), fd) <= 1e-6);
  // value at z = 0 is outcome-independent (the linear term vanishes)
  double v0 = implicit_loss(0, 0.0, fivb_c, fivb_r);
  for (int y = 1; y < 6; ++y) CHECK(implicit_loss(y, 0.0, fivb_c, fivb_r) == Catch::Approx(v0).epsilon(1e-14));
  double direct = 0.0;
  for (int l = 0; l < 5; ++l)
    direct += (fivb_r.r[static_cast<std::size_t>(l)] - fivb_r.r[static_cast<std::size_t>(l + 1)]) *
              psi(fivb_c.c(l));
  CHECK(v0 == Catch::Approx(direct).epsilon(1e-14));
}

TEST_CASE("implicit loss: frozen second derivative and positivity", "[loss]") {
  CHECK(implicit_loss_d1(0, 0.0, fivb_c, fivb_r) == Catch::Approx(-2.0).epsilon(1e-14));
  // sum_l (r_l - r_{l+1}) N(c_l), long-double oracle
  CHECK(implicit_loss_d2(0, 0.0, fivb_c, fivb_r) ==
        Catch::Approx(1.3945025986362112).epsilon(1e-12));
  // strictly decreasing scores give positive curvature everywhere
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 200; ++rep) {
    NumericalScores r = oracle::random_decreasing_scores(rng);
    Thresholds c = oracle::random_thresholds(rng);
    for (double z = -6.0; z <= 6.0; z += 0.05)
      CHECK(implicit_loss_d2(0, z, c, r) > 0.0);
  }
}

TEST_CASE("derivative ladder for the implicit loss", "[loss][property]") {
  std::mt19937_64 rng(4321);
  std::uniform_real_distribution<double> uz(-5.0, 5.0);
  std::uniform_int_distribution<int> uy(0, 5);
  for (int rep = 0; rep < 1000; ++rep) {
    Thresholds c = oracle::random_thresholds(rng);
    NumericalScores r = oracle::random_scores(rng);
    double z = uz(rng);
    int y = uy(rng);
    double fd1 = oracle::central_diff([&](double x) { return implicit_loss(y, x, c, r); }, z);
    double fd2 = oracle::central_diff([&](double x) { return implicit_loss_d1(y, x, c, r); }, z);
    double fd3 = oracle::central_diff([&](double x) { return implicit_loss_d2(y, x, c, r); }, z);
    CHECK(oracle::rel_err(implicit_loss_d1(y, z, c, r), fd1) <= 1e-6);
    CHECK(oracle::rel_err(implicit_loss_d2(y, z, c, r), fd2) <= 1e-6);
    CHECK(oracle::rel_err(implicit_loss_d3(y, z, c, r), fd3) <= 1e-6);
  }
}

TEST_CASE("matched_scores: golden values and the derivative-ratio route", "[loss]") {
  NumericalScores m = matched_scores(fivb_c, 2.0);
  // Frozen from the long-double oracle; the published rounded values are
  // 2.0, 0.89, 0.25 within 5e-3.
  CHECK(m.r[0] == Catch::Approx(2.0).margin(1e-15));
  CHECK(m.r[1] == Catch::Approx(0.8905866129530502).epsilon(1e-12));
  CHECK(m.r[2] == Catch::Approx(0.2471912030110555).epsilon(1e-12));
  CHECK(m.antisymmetric(1e-12));

  // Independent route: finite differences of the log-score at zero.
  double h = 1e-6;
  auto fd_d1 = [&](int y) {
    return (log_loss(y, h, fivb_c) - log_loss(y, -h, fivb_c)) / (2.0 * h);
  };
  double d0 = fd_d1(0);
  for (int y = 0; y < 6; ++y)
    CHECK(oracle::rel_err(m.r[static_cast<std::size_t>(y)], 2.0 * fd_d1(y) / d0) <= 1e-4);

  // derivative-match anchor: a = -l'_0(0)/r_0 reproduces l'_y(0) = -a r_y
  double a = -log_loss_d1(0, 0.0, fivb_c) / 2.0;
  for (int y = 0; y < 6; ++y)
    CHECK(log_loss_d1(y, 0.0, fivb_c) ==
          Catch::Approx(-a * m.r[static_cast<std::size_t>(y)]).margin(1e-12));
}

TEST_CASE("matched_scores rejects asymmetric thresholds and bad r0", "[loss]") {
  Thresholds skew({-1.0, -0.3, 0.1, 0.5, 1.2});
  CHECK_THROWS_AS(matched_scores(skew, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(matched_scores(fivb_c, 0.0), std::invalid_argument);
}

TEST_CASE("matched_scores antisymmetry for random symmetric thresholds", "[loss][property]") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    Thresholds c = oracle::random_symmetric_thresholds(rng);
    NumericalScores m = matched_scores(c, 2.0);
    for (int y = 0; y < 6; ++y)
      CHECK(std::abs(m.r[static_cast<std::size_t>(y)] + m.r[static_cast<std::size_t>(5 - y)]) <= 1e-12);
  }
}

TEST_CASE("check_convexity accepts the official and the non-monotone optimized scores",
          "[loss]") {
  CHECK(check_convexity(fivb_c, fivb_r).convex);
  NumericalScores non_monotone({2.0, 0.9, -0.1, 0.1, -0.9, -2.0});
  CHECK(check_convexity(fivb_c, non_monotone).convex);
}

TEST_CASE("check_convexity flags a decreasing expected score", "[loss]") {
  NumericalScores bad({1.0, 2.0, 3.0, -3.0, -2.0, -1.0});
  auto rep = check_convexity(fivb_c, bad);
  CHECK_FALSE(rep.convex);
  CHECK(rep.violation_lo < rep.violation_hi);
  CHECK(rep.violation_drop > 0.0);
  // the flagged interval really does decrease
  CHECK(expected_score(rep.violation_hi, fivb_c, bad) <
        expected_score(rep.violation_lo, fivb_c, bad));
}

TEST_CASE("loss dispatch agrees with the direct functions", "[loss]") {
  ModelParams p = ModelParams::fivb();
  CHECK(loss_value(LossKind::LogScore, 1, 0.3, p) == log_loss(1, 0.3, p.thresholds));
  CHECK(loss_value(LossKind::ImplicitFivb, 1, 0.3, p) ==
        implicit_loss(1, 0.3, p.thresholds, p.scores));
  CHECK(loss_d1(LossKind::ImplicitFivb, 4, -0.2, p) ==
        implicit_loss_d1(4, -0.2, p.thresholds, p.scores));
}

TEST_CASE("the outcome count is a runtime parameter", "[loss]") {
  // four-outcome model: three interior cut points
  Thresholds c4 = Thresholds::symmetric_from_free(std::vector<double>{-0.8}, 4);
  CHECK(c4.outcomes() == 4);
  CHECK(c4.c(1) == 0.0);
  auto p = outcome_probs(0.3, c4);
  REQUIRE(p.size() == 4);
  double sum = 0.0;
  for (double v : p) sum += v;
  CHECK(std::abs(sum - 1.0) <= 1e-12);

  for (int y = 0; y < 4; ++y) {
    double fd = oracle::central_diff([&](double x) { return log_loss(y, x, c4); }, 0.3);
    CHECK(oracle::rel_err(log_loss_d1(y, 0.3, c4), fd) <= 1e-6);
  }

  NumericalScores m4 = matched_scores(c4, 2.0);
  REQUIRE(m4.outcomes() == 4);
  CHECK(m4.antisymmetric(1e-12));
  CHECK(m4.r[0] == 2.0);

  NumericalScores r4 = NumericalScores::antisymmetric_from_free(2.0, std::vector<double>{0.7}, 4);
  CHECK(check_convexity(c4, r4).convex);
  double fd = oracle::central_diff([&](double x) { return implicit_loss(2, x, c4, r4); }, -0.4);
  CHECK(oracle::rel_err(implicit_loss_d1(2, -0.4, c4, r4), fd) <= 1e-6);

  // score vectors must match the outcome count
  CHECK_THROWS_AS(implicit_loss(0, 0.0, c4, NumericalScores::fivb()), std::invalid_argument);
}

TEST_CASE("thresholds type invariants", "[loss]") {
  CHECK_THROWS_AS(Thresholds({0.5, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(Thresholds({-1.0, -0.3, 0.1}, true), std::invalid_argument);
  Thresholds c = Thresholds::fivb();
  CHECK(c.c(-1) == -std::numeric_limits<double>::infinity());
  CHECK(c.c(5) == std::numeric_limits<double>::infinity());
  CHECK(c.c(2) == 0.0);
  CHECK(c.free_values() == std::vector<double>{-1.06, -0.394});
  CHECK(Thresholds::free_count(6) == 2);
}
