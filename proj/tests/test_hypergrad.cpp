#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <functional>

#include "oracle.hpp"
#include "rankforge/alo.hpp"
#include "rankforge/hypergrad.hpp"
#include "rankforge/synth.hpp"

using namespace rankforge;

namespace {

/// Finite-difference oracle over the constrained free coordinates: each
/// perturbation rebuilds the params through the same public constructors
/// the optimizer uses.
double fd_of(const Dataset& d, LossKind kind, const ModelParams& base,
             const std::function<ModelParams(double)>& at, double h = 1e-5) {
  (void)base;
  return (alo(d, at(h), kind).U - alo(d, at(-h), kind).U) / (2.0 * h);
}

ModelParams with_free_c(const ModelParams& base, int which, double delta) {
  ModelParams p = base;
  std::vector<double> f = base.thresholds.free_values();
  f[static_cast<std::size_t>(which)] += delta;
  p.thresholds = Thresholds::symmetric_from_free(f, base.outcomes());
  return p;
}

ModelParams with_free_r(const ModelParams& base, int which, double delta) {
  ModelParams p = base;
  int L = base.outcomes();
  std::vector<double> f;
  for (int i = 1; i < L / 2; ++i) f.push_back(base.scores.r[static_cast<std::size_t>(i)]);
  f[static_cast<std::size_t>(which)] += delta;
  p.scores = NumericalScores::antisymmetric_from_free(base.scores.r[0], f, L);
  return p;
}

} // namespace

TEST_CASE("hyper-gradient matches finite differences on every free group",
          "[hypergrad][slow]") {
  ModelParams p = ModelParams::fivb();
  p.gamma = 0.5;
  p.eta = 0.2;
  SynthResult s = synthesize(6, 150, p, 314);
  const Dataset& d = s.data;

  for (LossKind kind : {LossKind::LogScore, LossKind::ImplicitFivb}) {
    HyperSpec spec;
    spec.thresholds = spec.eta = spec.weights = spec.gamma = true;
    spec.scores = kind == LossKind::ImplicitFivb;
    HyperGradient g = hyper_grad(d, p, kind, spec);

    REQUIRE(g.thresholds.size() == 2);
    for (int i = 0; i < 2; ++i) {
      double fd = fd_of(d, kind, p, [&](double h) { return with_free_c(p, i, h); });
      INFO("threshold " << i << " kind " << to_string(kind));
      CHECK(oracle::rel_err(g.thresholds[static_cast<std::size_t>(i)], fd) <= 1e-4);
    }

    {
      double fd = fd_of(d, kind, p, [&](double h) {
        ModelParams q = p;
        q.eta += h;
        return q;
      });
      INFO("eta, kind " << to_string(kind));
      CHECK(oracle::rel_err(g.eta, fd) <= 1e-4);
    }

    if (kind == LossKind::ImplicitFivb) {
      REQUIRE(g.scores.size() == 2);
      for (int i = 0; i < 2; ++i) {
        double fd = fd_of(d, kind, p, [&](double h) { return with_free_r(p, i, h); });
        INFO("score " << i + 1);
        CHECK(oracle::rel_err(g.scores[static_cast<std::size_t>(i)], fd) <= 1e-4);
      }
    }

    REQUIRE(g.weights.size() == 6);
    for (int k = 1; k < 7; ++k) {
      double fd = fd_of(d, kind, p, [&](double h) {
        ModelParams q = p;
        q.weights[static_cast<std::size_t>(k)] += h;
        return q;
      });
      INFO("weight " << k << " kind " << to_string(kind));
      CHECK(oracle::rel_err(g.weights[static_cast<std::size_t>(k - 1)], fd, 0.01) <= 1e-4);
    }

    {
      double fd = fd_of(d, kind, p, [&](double h) {
        ModelParams q = p;
        q.gamma += h;
        return q;
      });
      INFO("gamma, kind " << to_string(kind));
      CHECK(oracle::rel_err(g.gamma, fd) <= 1e-4);
    }
  }
}

TEST_CASE("hyper-gradient of eta vanishes exactly on all-neutral data", "[hypergrad]") {
  ModelParams p = ModelParams::fivb();
  p.eta = 0.0;
  SynthResult s = synthesize(6, 120, p, 17, std::nullopt, 0.0);
  HyperSpec spec;
  spec.eta = true;
  HyperGradient g = hyper_grad(s.data, p, LossKind::LogScore, spec);
  CHECK(g.eta == 0.0);
}

TEST_CASE("hyper-gradient for scores is identically zero under the log-score",
          "[hypergrad]") {
  ModelParams p = ModelParams::fivb();
  SynthResult s = synthesize(5, 80, p, 23);
  HyperSpec spec;
  spec.scores = true;
  HyperGradient g = hyper_grad(s.data, p, LossKind::LogScore, spec);
  REQUIRE(g.scores.size() == 2);
  CHECK(g.scores[0] == 0.0);
  CHECK(g.scores[1] == 0.0);
}

TEST_CASE("hyper-gradient dimensions follow the reductions", "[hypergrad]") {
  ModelParams p = ModelParams::fivb();
  SynthResult s = synthesize(5, 60, p, 29);
  HyperSpec spec;
  spec.thresholds = spec.eta = spec.scores = spec.weights = spec.gamma = true;
  HyperGradient g = hyper_grad(s.data, p, LossKind::ImplicitFivb, spec);
  CHECK(g.thresholds.size() == 2);  // free symmetric cut points
  CHECK(g.scores.size() == 2);      // r_1, r_2 under antisymmetry with r_0 fixed
  CHECK(g.weights.size() == 6);     // xi_1..xi_6
}
