#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracle.hpp"
#include "rankforge/hyperopt.hpp"
#include "rankforge/synth.hpp"

using namespace rankforge;

TEST_CASE("baseline preset only evaluates", "[hyperopt]") {
  ModelParams p = ModelParams::fivb();
  SynthResult s = synthesize(6, 150, p, 1001);
  HyperOptResult res = run_preset(s.data, Preset::FivbBaseline, p);
  CHECK(res.converged);
  CHECK(res.params.thresholds == Thresholds::fivb());
  CHECK(res.params.eta == 0.0);
  CHECK(res.U == Catch::Approx(alo(s.data, res.params, LossKind::LogScore).U).margin(1e-12));
}

TEST_CASE("optimizer trace is non-increasing and ends converged", "[hyperopt][slow]") {
  ModelParams p = ModelParams::fivb();
  p.gamma = 0.5;
  SynthResult s = synthesize(8, 400, p, 1009);
  HyperOptResult res = run_preset(s.data, Preset::Hfa, p);
  CHECK(res.converged);
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].U <= res.trace[i - 1].U + 1e-12);
  CHECK(res.method == "implicit-gradient");
}

TEST_CASE("case ordering: nested feasible sets", "[hyperopt][slow]") {
  ModelParams p = ModelParams::fivb();
  p.gamma = 0.5;
  SynthResult s = synthesize(8, 250, p, 2718);
  double U_i = run_preset(s.data, Preset::FivbBaseline, p).U;
  double U_ii = run_preset(s.data, Preset::Thresholds, p).U;
  double U_iii = run_preset(s.data, Preset::Hfa, p).U;
  double U_iv = run_preset(s.data, Preset::Both, p).U;
  double tol = 1e-6;
  CHECK(U_ii <= U_i + tol);
  CHECK(U_iii <= U_i + tol);
  CHECK(U_iv <= U_ii + tol);
  CHECK(U_iv <= U_iii + tol);
}

TEST_CASE("joint optimization recovers the generating thresholds and offset",
          "[hyperopt][slow]") {
  ModelParams truth = ModelParams::fivb();
  truth.eta = 0.25;
  std::vector<double> free_c{-1.2, -0.5};
  truth.thresholds = Thresholds::symmetric_from_free(free_c, 6);
  truth.gamma = 0.5;
  SynthResult s = synthesize(20, 5000, truth, 33, std::nullopt, 0.5);

  ModelParams init = ModelParams::fivb();  // start away from the truth
  init.gamma = 0.5;
  init.eta = 0.0;
  HyperSpec spec;
  spec.thresholds = true;
  spec.eta = true;
  HyperOptResult res = optimize_hyper(s.data, LossKind::LogScore, spec, init);
  auto f = res.params.thresholds.free_values();
  CHECK(std::abs(f[0] - (-1.2)) <= 0.05);
  CHECK(std::abs(f[1] - (-0.5)) <= 0.05);
  CHECK(std::abs(res.params.eta - 0.25) <= 0.05);
}

TEST_CASE("score optimization lands near the matched scores", "[hyperopt][slow]") {
  ModelParams p = ModelParams::fivb();
  p.gamma = 0.5;
  p.eta = 0.0;
  SynthResult s = synthesize(10, 1500, p, 55);
  HyperOptResult res = run_preset(s.data, Preset::Scores, p);
  NumericalScores matched = matched_scores(p.thresholds, 2.0);
  // qualitative agreement only: the metric surface is nearly flat in the
  // scores, so the substantive claim is metric equivalence
  CHECK(std::abs(res.params.scores.r[1] - matched.r[1]) <= 0.5);
  ModelParams with_matched = res.params;
  with_matched.scores = matched;
  double U_matched = alo(s.data, with_matched, LossKind::ImplicitFivb).U;
  CHECK(std::abs(U_matched - res.U) <= 0.01);
  CHECK(res.U <= run_preset(s.data, Preset::FivbBaseline, p).U + 1e-9);
}

TEST_CASE("weight-scale degeneracy of the validation metric", "[hyperopt]") {
  ModelParams p = ModelParams::fivb();
  p.gamma = 0.5;
  p.eta = 0.1;
  SynthResult s = synthesize(6, 200, p, 61);
  double base = alo(s.data, p, LossKind::LogScore).U;
  double alpha = 3.1;
  ModelParams scaled = p;
  for (auto& w : scaled.weights) w *= alpha;
  scaled.gamma *= alpha;
  CHECK(alo(s.data, scaled, LossKind::LogScore).U == Catch::Approx(base).margin(1e-10));
}

TEST_CASE("gamma_sweep: single point equals the direct call, grid locates a minimum",
          "[hyperopt][slow]") {
  ModelParams p = ModelParams::fivb();
  SynthResult s = synthesize(6, 150, p, 71);
  std::vector<double> one{0.5};
  auto rows = gamma_sweep(s.data, Preset::FivbBaseline, p, one);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].failed);
  CHECK(rows[0].U == Catch::Approx(run_preset(s.data, Preset::FivbBaseline, p).U).margin(1e-12));

  std::vector<double> grid{0.1, 0.2, 0.5, 1.0, 2.0};
  auto sweep = gamma_sweep(s.data, Preset::FivbBaseline, p, grid);
  REQUIRE(sweep.size() == grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    CHECK_FALSE(sweep[i].failed);
    if (sweep[i].U < sweep[best].U) best = i;
  }
  CHECK(sweep[best].U <= sweep.front().U);
  CHECK(sweep[best].U <= sweep.back().U);
}

TEST_CASE("gamma_sweep records failures and continues", "[hyperopt]") {
  ModelParams p = ModelParams::fivb();
  SynthResult s = synthesize(5, 80, p, 81);
  std::vector<double> grid{-1.0, 0.5};  // negative gamma cannot be fit
  auto rows = gamma_sweep(s.data, Preset::FivbBaseline, p, grid);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].failed);
  CHECK_FALSE(rows[1].failed);
}

TEST_CASE("optimize_hyper rejects an empty-but-misconfigured start", "[hyperopt]") {
  ModelParams p = ModelParams::fivb();
  p.gamma = -2.0;
  SynthResult s = synthesize(5, 50, ModelParams::fivb(), 91);
  HyperSpec spec;
  spec.eta = true;
  CHECK_THROWS_AS(optimize_hyper(s.data, LossKind::LogScore, spec, p), std::invalid_argument);
}

TEST_CASE("finite-difference gradient mode agrees with the analytic path", "[hyperopt][slow]") {
  ModelParams p = ModelParams::fivb();
  p.gamma = 0.5;
  SynthResult s = synthesize(6, 120, p, 101);
  HyperSpec spec;
  spec.eta = true;
  HyperOptOptions opts;
  HyperOptResult analytic = optimize_hyper(s.data, LossKind::LogScore, spec, p, opts);
  opts.finite_difference = true;
  HyperOptResult fd = optimize_hyper(s.data, LossKind::LogScore, spec, p, opts);
  CHECK(fd.method == "finite-difference");
  CHECK(std::abs(analytic.params.eta - fd.params.eta) <= 1e-4);
  CHECK(std::abs(analytic.U - fd.U) <= 1e-8);
}
