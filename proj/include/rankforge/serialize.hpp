#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rankforge/alo.hpp"
#include "rankforge/dataset.hpp"
#include "rankforge/fit.hpp"
#include "rankforge/hyperopt.hpp"
#include "rankforge/online.hpp"
#include "rankforge/params.hpp"
#include "rankforge/synth.hpp"

namespace rankforge {

using json = nlohmann::json;

/// Canonical ModelParams serialization. `thresholds` holds the finite
/// interior cut points c_0..c_{L-2}.
inline json to_json(const ModelParams& p) {
  return json{{"thresholds", std::vector<double>(p.thresholds.interior().begin(),
                                                 p.thresholds.interior().end())},
              {"symmetric", p.thresholds.symmetric()},
              {"eta", p.eta},
              {"scores", p.scores.r},
              {"weights", p.weights},
              {"gamma", p.gamma},
              {"scale", p.scale},
              {"mu", p.mu}};
}

inline ModelParams params_from_json(const json& j) {
  ModelParams p;
  if (j.contains("thresholds"))
    p.thresholds = Thresholds(j.at("thresholds").get<std::vector<double>>(),
                              j.value("symmetric", true));
  if (j.contains("eta")) p.eta = j.at("eta").get<double>();
  if (j.contains("scores")) p.scores = NumericalScores(j.at("scores").get<std::vector<double>>());
  if (j.contains("weights")) p.weights = j.at("weights").get<std::vector<double>>();
  if (j.contains("gamma")) p.gamma = j.at("gamma").get<double>();
  if (j.contains("scale")) p.scale = j.at("scale").get<double>();
  if (j.contains("mu")) p.mu = j.at("mu").get<double>();
  p.validate();
  return p;
}

inline json to_json(const FitResult& f, const Dataset& d) {
  json theta = json::object();
  for (int m = 0; m < d.team_count(); ++m) theta[d.team_name(m)] = f.theta[m];
  return json{{"theta", theta},
              {"objective", f.objective},
              {"iterations", f.iterations},
              {"converged", f.converged},
              {"grad_norm", f.grad_norm}};
}

inline json to_json(const AloReport& rep) {
  return json{{"U", rep.U},
              {"V", rep.V},
              {"U_ntr", rep.U_ntr},
              {"U_hfa", rep.U_hfa},
              {"T", rep.T},
              {"T_ntr", rep.T_ntr},
              {"T_hfa", rep.T_hfa},
              {"loss", to_string(rep.kind)},
              {"z_loo", rep.z_loo},
              {"leverage", rep.leverage},
              {"params", to_json(rep.params)}};
}

inline json to_json(const HyperOptResult& res) {
  json trace = json::array();
  for (const auto& pt : res.trace)
    trace.push_back(json{{"free_params", pt.free_params}, {"U", pt.U}, {"grad_norm", pt.grad_norm}});
  return json{{"params", to_json(res.params)},
              {"U", res.U},
              {"method", res.method},
              {"converged", res.converged},
              {"trace", trace}};
}

inline json to_json(const OnlineReport& rep, const Dataset& d) {
  json ranking = json::array();
  for (int idx : rep.ranking)
    ranking.push_back(json{{"team", d.team_name(idx)}, {"skill", rep.final_theta[idx]}});
  json out{{"U_bar", rep.U_bar},
           {"U_bar_ntr", rep.U_bar_ntr},
           {"U_bar_hfa", rep.U_bar_hfa},
           {"T", rep.T},
           {"T_ntr", rep.T_ntr},
           {"T_hfa", rep.T_hfa},
           {"ranking", ranking}};
  if (rep.rho_bar.has_value()) out["rho_bar"] = *rep.rho_bar;
  return out;
}

/// Field names follow the official FIVB vocabulary.
inline json to_json(const FivbCompatRecord& r) {
  json out{{"WRS1", r.wrs1},     {"WRS2", r.wrs2},         {"Delta", r.delta},
           {"SSV", r.ssv},       {"EMR", r.emr},           {"MWF", r.mwf},
           {"WR_value", r.wr_value}, {"WR_points", r.wr_points}};
  for (std::size_t i = 0; i < r.probs.size(); ++i)
    out["P" + std::to_string(i + 1)] = r.probs[i];
  return out;
}

inline json to_json(const ExclusionRecord& e) {
  return json{{"t", e.t}, {"rule", e.rule}, {"detail", e.detail}};
}

inline json to_json(const SynthResult& s) {
  json skills = json::object();
  for (int m = 0; m < s.data.team_count(); ++m)
    skills[s.data.team_name(m)] = s.true_skills[static_cast<std::size_t>(m)];
  return json{{"skills", skills}, {"seed", s.seed}};
}

} // namespace rankforge
