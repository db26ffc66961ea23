#pragma once

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rankforge/rankforge.hpp"

namespace rankforge::cli {

namespace detail {

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  in >> j;
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

inline void emit_json(const json& j, const std::string& path) {
  std::string text = j.dump(2);
  text.push_back('\n');
  if (path.empty())
    std::cout << text;
  else
    write_text(path, text);
}

inline std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::runtime_error("empty numeric list '" + csv + "'");
  return out;
}

inline std::string csv_comment(const json& config) {
  json meta{{"version", version}, {"config", config}};
  return "# rankforge " + meta.dump() + "\n";
}

/// Initial skills from {"skills": {team: value}} or a flat {team: value}.
inline Eigen::VectorXd load_initial_skills(const std::string& path, const Dataset& d) {
  json j = load_json_file(path);
  const json& skills = j.contains("skills") ? j.at("skills") : j;
  Eigen::VectorXd init = Eigen::VectorXd::Zero(d.team_count());
  for (int m = 0; m < d.team_count(); ++m) {
    const std::string& name = d.team_name(m);
    if (!skills.contains(name))
      throw std::runtime_error("initial skills: team '" + name + "' missing from " + path);
    init[m] = skills.at(name).get<double>();
  }
  return init;
}

struct DatasetFlags {
  std::string path;
  bool drop_small_increments = false;
  std::vector<std::string> forfeits;  // "date,home,away"
  std::string exclusions_out;
};

inline void add_dataset_flags(CLI::App* cmd, DatasetFlags& f) {
  cmd->add_option("data", f.path, "match results CSV")->required();
  cmd->add_flag("--drop-small-increments", f.drop_small_increments,
                "exclude matches whose published increment is 0 or 0.01");
  cmd->add_option("--forfeit", f.forfeits, "exclude a forfeited match, as date,home,away");
  cmd->add_option("--exclusions-out", f.exclusions_out,
                  "write the exclusion report as JSON lines");
}

inline Dataset load_dataset(const DatasetFlags& f, int categories) {
  Dataset d = load_csv(f.path, categories);
  if (!f.drop_small_increments && f.forfeits.empty()) return d;
  FilterRules rules;
  rules.drop_small_increments = f.drop_small_increments;
  for (const auto& spec : f.forfeits) {
    std::stringstream ss(spec);
    ForfeitKey key;
    if (!std::getline(ss, key.date, ',') || !std::getline(ss, key.home, ',') ||
        !std::getline(ss, key.away, ','))
      throw std::runtime_error("bad --forfeit spec '" + spec + "', expected date,home,away");
    rules.forfeits.push_back(std::move(key));
  }
  FilterResult res = filter_matches(d, rules);
  if (!f.exclusions_out.empty()) {
    std::string lines;
    for (const auto& e : res.excluded) lines += to_json(e).dump() + "\n";
    write_text(f.exclusions_out, lines);
  }
  return std::move(res.data);
}

struct ParamFlags {
  std::string config_path;
  std::optional<double> gamma, eta, mu, scale;
};

inline void add_param_flags(CLI::App* cmd, ParamFlags& f) {
  cmd->add_option("--config", f.config_path, "ModelParams JSON file");
  cmd->add_option("--gamma", f.gamma, "regularization strength");
  cmd->add_option("--eta", f.eta, "home-venue offset on the latent scale");
  cmd->add_option("--mu", f.mu, "adaptation step");
  cmd->add_option("--scale", f.scale, "display scale");
}

inline ModelParams resolve_params(const ParamFlags& f) {
  ModelParams p = f.config_path.empty() ? ModelParams::fivb()
                                        : params_from_json(load_json_file(f.config_path));
  if (f.gamma) p.gamma = *f.gamma;
  if (f.eta) p.eta = *f.eta;
  if (f.mu) p.mu = *f.mu;
  if (f.scale) p.scale = *f.scale;
  p.validate();
  return p;
}

} // namespace detail

// ---------------------------------------------------------------------------
// validate: leave-one-out metrics, optimization presets, gamma sweeps.
// ---------------------------------------------------------------------------

inline int cmd_validate(const detail::DatasetFlags& df, const detail::ParamFlags& pf,
                        const std::string& case_name, const std::string& method,
                        const std::string& gamma_grid, std::size_t max_T, bool force,
                        const std::string& out_path, const std::string& sweep_out,
                        const json& config) {
  auto preset = preset_from_string(case_name);
  if (!preset) throw std::runtime_error("unknown --case '" + case_name + "'");
  if (method != "alo" && method != "exact")
    throw std::runtime_error("--method must be alo or exact");

  ModelParams base = detail::resolve_params(pf);
  Dataset d = detail::load_dataset(df, base.categories());

  if (method == "exact" && d.match_count() > max_T && !force)
    throw std::runtime_error("exact LOO on T = " + std::to_string(d.match_count()) +
                             " exceeds --max-T = " + std::to_string(max_T) +
                             " (refit per match is expensive); pass --force to override");

  json output{{"version", version}, {"config", config}};

  if (!gamma_grid.empty()) {
    std::vector<double> gammas = detail::parse_list(gamma_grid);
    auto rows = gamma_sweep(d, *preset, base, gammas);
    std::string csv = detail::csv_comment(config);
    csv += "gamma,U,V,U_ntr,U_hfa";
    bool free_c = *preset == Preset::Thresholds || *preset == Preset::Both;
    bool free_eta = *preset != Preset::FivbBaseline && *preset != Preset::Thresholds;
    bool free_r = *preset == Preset::Scores;
    bool free_w = *preset == Preset::Weights;
    int L = base.outcomes();
    if (free_c)
      for (int i = 0; i < Thresholds::free_count(L); ++i) csv += ",c" + std::to_string(i);
    if (free_eta) csv += ",eta";
    if (free_r)
      for (int i = 1; i < L / 2; ++i) csv += ",r" + std::to_string(i);
    if (free_w)
      for (int i = 1; i < base.categories(); ++i) csv += ",xi" + std::to_string(i);
    csv += "\n";
    json jrows = json::array();
    for (const auto& row : rows) {
      if (row.failed) {
        jrows.push_back(json{{"gamma", row.gamma}, {"error", row.error}});
        continue;
      }
      std::ostringstream line;
      line.precision(17);
      line << row.gamma << ',' << row.U << ',' << row.V << ',' << row.U_ntr << ',' << row.U_hfa;
      if (free_c)
        for (double v : row.params.thresholds.free_values()) line << ',' << v;
      if (free_eta) line << ',' << row.params.eta;
      if (free_r)
        for (int i = 1; i < L / 2; ++i) line << ',' << row.params.scores.r[static_cast<std::size_t>(i)];
      if (free_w)
        for (int i = 1; i < base.categories(); ++i)
          line << ',' << row.params.weights[static_cast<std::size_t>(i)];
      csv += line.str() + "\n";
      jrows.push_back(json{{"gamma", row.gamma},
                           {"U", row.U},
                           {"V", row.V},
                           {"U_ntr", row.U_ntr},
                           {"U_hfa", row.U_hfa},
                           {"params", to_json(row.params)}});
    }
    if (!sweep_out.empty())
      detail::write_text(sweep_out, csv);
    else
      std::cout << csv;
    output["sweep"] = jrows;
    if (!out_path.empty()) detail::emit_json(output, out_path);
    return 0;
  }

  HyperOptResult res = run_preset(d, *preset, base);
  AloReport report = res.report;
  if (method == "exact") report = exact_loo(d, res.params, preset_loss(*preset));
  output["method"] = method;
  output["case"] = case_name;
  output["report"] = to_json(report);
  output["optimized"] = to_json(res);
  if (*preset == Preset::Scores) {
    NumericalScores matched = matched_scores(res.params.thresholds, res.params.scores.r.at(0));
    output["matched_scores"] = matched.r;
  }
  detail::emit_json(output, out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// rank: the online engine.
// ---------------------------------------------------------------------------

inline int cmd_rank(const detail::DatasetFlags& df, const detail::ParamFlags& pf,
                    const std::string& loss_name, const std::string& mu_search,
                    const std::string& weights_mode, const std::string& scores_mode,
                    const std::string& scores_file, const std::string& init_path,
                    const std::string& out_path, const std::string& trace_path,
                    const std::string& compat_path, const json& config) {
  LossKind kind;
  if (loss_name == "log")
    kind = LossKind::LogScore;
  else if (loss_name == "fivb")
    kind = LossKind::ImplicitFivb;
  else
    throw std::runtime_error("--loss must be log or fivb");

  ModelParams p = detail::resolve_params(pf);
  if (weights_mode == "unit")
    std::fill(p.weights.begin(), p.weights.end(), 1.0);
  else if (weights_mode != "fivb")
    throw std::runtime_error("--weights must be fivb or unit");

  if (!scores_file.empty()) {
    json j = detail::load_json_file(scores_file);
    p.scores = NumericalScores(
        (j.contains("scores") ? j.at("scores") : j).get<std::vector<double>>());
  } else if (scores_mode == "matched") {
    p.scores = matched_scores(p.thresholds, p.scores.r.at(0));
  } else if (scores_mode != "fivb") {
    throw std::runtime_error("--scores must be fivb or matched (or use --scores-file)");
  }
  p.validate();

  Dataset d = detail::load_dataset(df, p.categories());
  Eigen::VectorXd init = init_path.empty() ? Eigen::VectorXd::Zero(d.team_count())
                                           : detail::load_initial_skills(init_path, d);
  if (!init_path.empty()) d.initial_skills.assign(init.data(), init.data() + init.size());

  json output{{"version", version}, {"config", config}, {"params", to_json(p)}};

  if (!mu_search.empty()) {
    std::vector<double> mus = detail::parse_list(mu_search);
    StepSearchResult search = step_search(d, init, p, kind, mus);
    json table = json::array();
    for (const auto& [mu, rep] : search.table)
      table.push_back(json{{"mu", mu},
                           {"U_bar", rep.U_bar},
                           {"U_bar_ntr", rep.U_bar_ntr},
                           {"U_bar_hfa", rep.U_bar_hfa}});
    output["mu_search"] = json{{"best_mu", search.best_mu},
                               {"boundary_minimum", search.boundary_minimum},
                               {"table", table}};
    p.mu = search.best_mu;
  }

  RunOptions ropts;
  ropts.collect_trace = !trace_path.empty();
  OnlineReport rep = run(d, init, p, kind, ropts);
  output["report"] = to_json(rep, d);

  if (!trace_path.empty()) {
    std::string csv = detail::csv_comment(config);
    csv += "t,home,away,y,h,v,z,pred_loss,delta_home\n";
    for (const auto& row : rep.trace) {
      std::ostringstream line;
      line.precision(17);
      line << row.t << ',' << row.home << ',' << row.away << ',' << row.outcome << ','
           << row.venue << ',' << row.category << ',' << row.z_display << ',' << row.pred_loss
           << ',' << row.delta_home;
      csv += line.str() + "\n";
    }
    detail::write_text(trace_path, csv);
  }

  if (!compat_path.empty()) {
    RankState state{init, 0, p, kind};
    json records = json::array();
    for (const auto& m : d.matches) {
      records.push_back(to_json(fivb_notation(m, state)));
      step(state, m);
    }
    detail::emit_json(json{{"version", version}, {"config", config}, {"records", records}},
                      compat_path);
  }

  detail::emit_json(output, out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// synth: model-sampled datasets with ground truth.
// ---------------------------------------------------------------------------

inline int cmd_synth(const detail::ParamFlags& pf, int teams, int matches, std::uint64_t seed,
                     double p_home, const std::string& out_path, const std::string& truth_path,
                     const json& config) {
  ModelParams p = detail::resolve_params(pf);
  SynthResult res = synthesize(teams, matches, p, seed, std::nullopt, p_home);
  if (out_path.empty()) throw std::runtime_error("synth: --out is required");
  write_csv(res.data, out_path);
  json truth = to_json(res);
  truth["params"] = to_json(p);
  truth["version"] = version;
  truth["config"] = config;
  truth["teams"] = teams;
  truth["matches"] = matches;
  if (!truth_path.empty()) detail::emit_json(truth, truth_path);
  std::cout << "wrote " << matches << " matches for " << teams << " teams to " << out_path
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// scores: the analytic score table for given thresholds.
// ---------------------------------------------------------------------------

inline int cmd_scores(const detail::ParamFlags& pf, std::optional<double> c0,
                      std::optional<double> c1, double r0, bool fd_check,
                      const std::string& out_path, const json& config) {
  ModelParams p = detail::resolve_params(pf);
  if (c0 || c1) {
    if (!(c0 && c1)) throw std::runtime_error("scores: pass both --c0 and --c1");
    std::vector<double> free{*c0, *c1};
    p.thresholds = Thresholds::symmetric_from_free(free, 6);
  }
  NumericalScores matched = matched_scores(p.thresholds, r0);
  ConvexityReport conv = check_convexity(p.thresholds, matched);

  std::cout << detail::csv_comment(config);
  std::cout << "y,score\n";
  std::cout.precision(17);
  for (int y = 0; y < matched.outcomes(); ++y)
    std::cout << y << ',' << matched.r[static_cast<std::size_t>(y)] << "\n";
  std::cout << "# convex: " << (conv.convex ? "yes" : "no") << "\n";

  double max_rel = 0.0;
  if (fd_check) {
    // Independent route: first derivatives of the log-score by central
    // differences, then the defining ratio.
    double h = 1e-6;
    auto fd_d1 = [&](int y) {
      return (log_loss(y, h, p.thresholds) - log_loss(y, -h, p.thresholds)) / (2.0 * h);
    };
    double d0 = fd_d1(0);
    for (int y = 0; y < matched.outcomes(); ++y) {
      double ref = r0 * fd_d1(y) / d0;
      double rel = std::abs(ref - matched.r[static_cast<std::size_t>(y)]) /
                   std::max(1.0, std::abs(ref));
      max_rel = std::max(max_rel, rel);
    }
    std::cout << "# fd_check_max_rel_err: " << max_rel << "\n";
  }

  if (!out_path.empty()) {
    json output{{"version", version},
                {"config", config},
                {"thresholds", std::vector<double>(p.thresholds.interior().begin(),
                                                   p.thresholds.interior().end())},
                {"r0", r0},
                {"scores", matched.r},
                {"convex", conv.convex}};
    if (!conv.convex) {
      output["violation"] = json{{"z_lo", conv.violation_lo},
                                 {"z_hi", conv.violation_hi},
                                 {"drop", conv.violation_drop}};
    }
    if (fd_check) output["fd_check_max_rel_err"] = max_rel;
    detail::emit_json(output, out_path);
  }
  return 0;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"rankforge: ordinal-outcome rating laboratory for volleyball-style results"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "cap worker threads (env RANKFORGE_THREADS)");

  // validate
  auto* validate = app.add_subcommand("validate", "leave-one-out validation and optimization");
  detail::DatasetFlags v_df;
  detail::ParamFlags v_pf;
  std::string v_case = "fivb", v_method = "alo", v_grid, v_out, v_sweep_out;
  std::size_t v_max_T = 500;
  bool v_force = false;
  detail::add_dataset_flags(validate, v_df);
  detail::add_param_flags(validate, v_pf);
  validate->add_option("--case", v_case, "fivb|thresholds|hfa|both|scores|weights");
  validate->add_option("--method", v_method, "alo|exact");
  validate->add_option("--gamma-grid", v_grid, "comma-separated gammas for a sweep");
  validate->add_option("--max-T", v_max_T, "largest T allowed for --method exact");
  validate->add_flag("--force", v_force, "override the --max-T guard");
  validate->add_option("--out", v_out, "report JSON path (default: stdout)");
  validate->add_option("--sweep-out", v_sweep_out, "gamma sweep CSV path (default: stdout)");

  // rank
  auto* rank = app.add_subcommand("rank", "real-time ranking over a match list");
  detail::DatasetFlags r_df;
  detail::ParamFlags r_pf;
  std::string r_loss = "fivb", r_mu_search, r_weights = "fivb", r_scores = "fivb", r_scores_file,
              r_init, r_out, r_trace, r_compat;
  detail::add_dataset_flags(rank, r_df);
  detail::add_param_flags(rank, r_pf);
  rank->add_option("--loss", r_loss, "log|fivb");
  rank->add_option("--mu-search", r_mu_search, "comma-separated adaptation steps to try");
  rank->add_option("--weights", r_weights, "fivb|unit");
  rank->add_option("--scores", r_scores, "fivb|matched");
  rank->add_option("--scores-file", r_scores_file, "numerical scores JSON file");
  rank->add_option("--init", r_init, "initial skills JSON (default: zeros)");
  rank->add_option("--out", r_out, "report JSON path (default: stdout)");
  rank->add_option("--trace", r_trace, "per-step trace CSV path");
  rank->add_option("--compat", r_compat, "official-notation records JSON path");

  // synth
  auto* synth = app.add_subcommand("synth", "sample a dataset from the model");
  detail::ParamFlags s_pf;
  int s_teams = 10, s_matches = 1000;
  std::uint64_t s_seed = 1;
  double s_p_home = 0.34;
  std::string s_out, s_truth;
  detail::add_param_flags(synth, s_pf);
  synth->add_option("--teams", s_teams, "number of teams");
  synth->add_option("--matches", s_matches, "number of matches");
  synth->add_option("--seed", s_seed, "RNG seed");
  synth->add_option("--p-home", s_p_home, "probability of a home venue");
  synth->add_option("--out", s_out, "dataset CSV path")->required();
  synth->add_option("--truth", s_truth, "ground-truth JSON path");

  // scores
  auto* scores = app.add_subcommand("scores", "analytic numerical scores for given thresholds");
  detail::ParamFlags c_pf;
  std::optional<double> c_c0, c_c1;
  double c_r0 = 2.0;
  bool c_fd = false;
  std::string c_out;
  detail::add_param_flags(scores, c_pf);
  scores->add_option("--c0", c_c0, "first symmetric cut point (< c1 < 0)");
  scores->add_option("--c1", c_c1, "second symmetric cut point");
  scores->add_option("--r0", c_r0, "score anchored to the strongest outcome");
  scores->add_flag("--fd-check", c_fd, "cross-check against finite differences");
  scores->add_option("--out", c_out, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (threads > 0) set_thread_cap(threads);

  // The resolved configuration, echoed into every output.
  json config = json::object();
  for (int i = 1; i < argc; ++i) config["argv"].push_back(argv[i]);

  try {
    if (validate->parsed())
      return cmd_validate(v_df, v_pf, v_case, v_method, v_grid, v_max_T, v_force, v_out,
                          v_sweep_out, config);
    if (rank->parsed())
      return cmd_rank(r_df, r_pf, r_loss, r_mu_search, r_weights, r_scores, r_scores_file, r_init,
                      r_out, r_trace, r_compat, config);
    if (synth->parsed())
      return cmd_synth(s_pf, s_teams, s_matches, s_seed, s_p_home, s_out, s_truth, config);
    if (scores->parsed())
      return cmd_scores(c_pf, c_c0, c_c1, c_r0, c_fd, c_out, config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}

} // namespace rankforge::cli
