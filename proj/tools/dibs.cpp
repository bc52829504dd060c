/*
 * dibs.cpp
 *
 * Pipeline driver: check -> abstract -> synthesize -> simulate, plus
 * the end-to-end disturbance-bisimulation oracle run.
 *
 * Exit codes: 0 success, 2 infeasible parameters, 3 empty winning set,
 * 4 relation violation at runtime.
 */

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dibs/config.hpp"
#include "dibs/pipeline.hpp"
#include "dibs/lyapunov.hpp"
#include "dibs/runtime.hpp"
#include "dibs/synthesis.hpp"
#include "dibs/verify.hpp"

namespace {

using namespace dibs;
using ordered_json = nlohmann::ordered_json;

struct CommonFlags {
  std::string config;
  std::string norm;
  std::string margin;
  int threads = 0;
};

LoadedConfig load_with_overrides(const CommonFlags& cf) {
  LoadedConfig cfg = load_config(cf.config);
  if (cf.norm == "inf")
    cfg.net.eps_tilde_norm = NormConvention::infinity;
  else if (cf.norm == "euclid")
    cfg.net.eps_tilde_norm = NormConvention::euclidean;
  else if (!cf.norm.empty())
    throw std::runtime_error("--norm expects inf or euclid");
  if (cf.margin == "eps")
    cfg.net.margin = SpecMargin::eps;
  else if (cf.margin == "eps-plus-chi")
    cfg.net.margin = SpecMargin::eps_plus_chi;
  else if (!cf.margin.empty())
    throw std::runtime_error("--spec-margin expects eps or eps-plus-chi");
  if (cf.threads > 0) omp_set_num_threads(cf.threads);
  return cfg;
}

int find_template(const NetworkSpec& net, const std::string& name) {
  for (std::size_t t = 0; t < net.templates.size(); ++t)
    if (net.templates[t].name == name) return static_cast<int>(t);
  throw std::runtime_error("unknown template " + name);
}

int cmd_check(const CommonFlags& cf, const std::string& out) {
  const LoadedConfig cfg = load_with_overrides(cf);
  const NetworkParamReport rep = solve_network_params(cfg.net);

  ordered_json jr;
  jr["feasible"] = rep.feasible;
  jr["norm_convention"] = norm_name(cfg.net.eps_tilde_norm);
  jr["config_hash"] = cfg.hash;
  if (!cfg.net.instances.empty()) {
    jr["small_gain"]["lambda_max"] = rep.small_gain_spectral.lambda_max;
    jr["small_gain"]["feasible"] = rep.small_gain_spectral.feasible;
    jr["small_gain"]["lp_agrees"] =
        rep.small_gain_lp.feasible == rep.small_gain_spectral.feasible;
    std::printf("small-gain: lambda_max(A^-1 B) = %.6f  %s (lp %s)\n",
                rep.small_gain_spectral.lambda_max,
                rep.small_gain_spectral.feasible ? "feasible" : "infeasible",
                rep.small_gain_lp.feasible == rep.small_gain_spectral.feasible
                    ? "agrees"
                    : "DISAGREES");
  }
  for (const auto& tp : rep.templates) {
    ordered_json tj;
    tj["name"] = tp.name;
    tj["psi"] = tp.psi;
    tj["chi"] = tp.chi;
    tj["eps_tilde_norm_value"] = tp.eps_tilde_norm_value;
    tj["eta_max_inf"] = tp.eta_max_inf;
    tj["eta_max_euclid"] = tp.eta_max_euclid;
    tj["eta_max"] = tp.eta_max;
    tj["tau_bound"] = tp.tau_bound;
    if (tp.bound.feasible) {
      for (int d = 0; d < tp.params.eta.size(); ++d)
        tj["eta"].push_back(tp.params.eta[d]);
    }
    jr["templates"].push_back(tj);
    std::string et = "(";
    for (int k = 0; k < tp.params.eps_tilde.size(); ++k)
      et += (k ? ", " : "") + std::to_string(tp.params.eps_tilde[k]);
    et += ")";
    for (int k = 0; k < tp.params.eps_tilde.size(); ++k)
      tj["eps_tilde"].push_back(tp.params.eps_tilde[k]);
    std::printf(
        "template %-12s eps_tilde = %s  psi = %.4f  chi = %.4f\n"
        "  eta_max(inf) = %.6f  eta_max(euclid) = %.6f  tau_bound = %.4f\n",
        tp.name.c_str(), et.c_str(), tp.psi, tp.chi, tp.eta_max_inf,
        tp.eta_max_euclid, tp.tau_bound);
    if (tp.bound.feasible)
      std::printf("  eta = %.6f (convention %s, safety %.2f%s)\n",
                  tp.params.eta[0], norm_name(cfg.net.eps_tilde_norm).c_str(),
                  cfg.net.eta_safety, cfg.net.snap_eta ? ", snapped" : "");
  }
  if (!rep.feasible) {
    std::printf("infeasible: %s\n", rep.message.c_str());
    jr["message"] = rep.message;
  }
  if (!out.empty()) {
    std::ofstream os(out);
    os << jr.dump(2) << "\n";
  }
  return rep.feasible ? 0 : 2;
}

int cmd_abstract(const CommonFlags& cf, const std::string& tmpl_name,
                 const std::string& mode_name, const std::string& out) {
  const LoadedConfig cfg = load_with_overrides(cf);
  const NetworkParamReport rep = solve_network_params(cfg.net);
  if (!rep.feasible) {
    std::fprintf(stderr, "infeasible parameters: %s\n", rep.message.c_str());
    return 2;
  }
  const int tmpl = find_template(cfg.net, tmpl_name);
  const auto& t = cfg.net.templates[tmpl];
  const AbstractionMode mode = mode_name == "exact" ? AbstractionMode::exact
                                                    : AbstractionMode::box;
  const double t0 = omp_get_wtime();
  const AbstractSystem abs = build_abstraction(
      t.field, rep.templates[tmpl].params, t.state_domain, t.input_domain,
      abstraction_disturbance(cfg.net, tmpl, rep), mode, cfg.net.rk4_substeps);
  const double t1 = omp_get_wtime();
  save_abstraction(out, abs);
  std::size_t ood = 0;
  for (std::size_t r = 0; r < abs.n_records(); ++r)
    ood += abs.out_of_domain(r);
  std::printf(
      "abstraction %s: %zu states x %zu inputs (%zu records, %zu out-of-domain) "
      "in %.2fs -> %s\n",
      t.name.c_str(), abs.n_states(), abs.n_inputs(), abs.n_records(), ood,
      t1 - t0, out.c_str());
  return 0;
}

int cmd_synthesize(const CommonFlags& cf, const std::string& abs_path,
                   const std::string& tmpl_name, const std::string& objective,
                   const std::string& out) {
  const LoadedConfig cfg = load_with_overrides(cf);
  const int tmpl = find_template(cfg.net, tmpl_name);
  const AbstractSystem abs = load_abstraction(abs_path);
  const Objective obj = objective_from_name(objective);
  const AbstractSpec spec =
      build_abstract_spec(cfg.net, tmpl, abs.state_grid, obj);

  const double t0 = omp_get_wtime();
  const Controller ctrl = obj == Objective::safety
                              ? solve_safety(abs, spec.safe)
                              : solve_reach_avoid(abs, spec.target, spec.safe);
  const double t1 = omp_get_wtime();

  const VerifyResult vr = verify_controller(abs, ctrl, spec);
  if (!vr.ok) {
    std::fprintf(stderr, "internal verification failed: %s\n",
                 vr.message.c_str());
    return 1;
  }
  const std::size_t win = ctrl.winning_count();
  std::printf("%s: winning set %zu/%zu states in %.2fs -> %s\n",
              objective.c_str(), win, abs.n_states(), t1 - t0, out.c_str());
  save_controller(out, ctrl);
  if (win == 0) {
    std::fprintf(stderr, "empty winning set\n");
    return 3;
  }
  return 0;
}

int cmd_simulate(const CommonFlags& cf,
                 const std::vector<std::string>& use_args,
                 const std::string& out, int steps, std::uint64_t seed_flag) {
  const LoadedConfig cfg = load_with_overrides(cf);

  std::map<std::string, std::pair<AbstractSystem, Controller>> per_template;
  for (const auto& spec : use_args) {
    const auto eq = spec.find('=');
    const auto colon = spec.find(':', eq);
    if (eq == std::string::npos || colon == std::string::npos)
      throw std::runtime_error("--use expects TEMPLATE=ABS_FILE:CTRL_FILE");
    const std::string name = spec.substr(0, eq);
    AbstractSystem abs = load_abstraction(spec.substr(eq + 1, colon - eq - 1));
    Controller ctrl = load_controller(spec.substr(colon + 1));
    if (ctrl.abstraction_hash != descriptor_hash(abs))
      throw std::runtime_error("controller/abstraction hash mismatch for " +
                               name);
    per_template.emplace(name,
                         std::make_pair(std::move(abs), std::move(ctrl)));
  }

  std::map<std::string, SubsystemRuntime> runtimes;
  for (const auto& inst : cfg.net.instances) {
    const auto& tname = cfg.net.templates[inst.tmpl].name;
    const auto it = per_template.find(tname);
    if (it == per_template.end())
      throw std::runtime_error("no --use entry for template " + tname);
    runtimes[inst.id] = {&it->second.first, &it->second.second};
  }

  /* initial states: explicit entries, otherwise seeded sampling into
   * the winning set */
  const std::uint64_t seed = seed_flag ? seed_flag : cfg.x0_seed;
  std::map<std::string, std::pair<const AbstractSystem*, const Controller*>>
      rt_pairs;
  for (const auto& [id, rt] : runtimes) rt_pairs[id] = {rt.abs, rt.ctrl};
  const std::map<std::string, Vec> x0 = sample_initial_states(
      cfg.net, rt_pairs, cfg.x0, cfg.x0_sample, seed);

  SimulationOptions opts;
  if (steps > 0) opts.max_steps = steps;
  SimulationResult res;
  try {
    res = simulate_network(cfg.net, runtimes, x0, opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 4;
  }
  write_trajectory_csv(out, res.log);

  ordered_json meta;
  meta["config_hash"] = cfg.hash;
  meta["norm_convention"] = norm_name(cfg.net.eps_tilde_norm);
  meta["seed"] = seed;
  meta["steps"] = res.steps;
  meta["all_reached"] = res.all_reached;
  meta["all_safe"] = res.all_safe;
  meta["all_safe_substeps"] = res.all_safe_substeps;
  for (std::size_t i = 0; i < res.max_v.size(); ++i) {
    meta["max_v"].push_back(res.max_v[i]);
    meta["max_envelope"].push_back(res.max_envelope[i]);
  }
  std::ofstream ms(out + ".meta.json");
  ms << meta.dump(2) << "\n";

  std::printf("simulated %d steps: all_reached=%d all_safe=%d -> %s\n",
              res.steps, res.all_reached ? 1 : 0, res.all_safe ? 1 : 0,
              out.c_str());
  return 0;
}

int cmd_verify_bisim(const CommonFlags& cf, const std::string& tmpl_name,
                     double fine_factor) {
  const LoadedConfig cfg = load_with_overrides(cf);
  const NetworkParamReport rep = solve_network_params(cfg.net);
  if (!rep.feasible) {
    std::fprintf(stderr, "infeasible parameters: %s\n", rep.message.c_str());
    return 2;
  }
  const int tmpl =
      tmpl_name.empty() ? 0 : find_template(cfg.net, tmpl_name);
  const double t0 = omp_get_wtime();
  const BisimInstanceReport r = verify_bisim_instance(
      cfg.net, tmpl, rep.templates[tmpl], fine_factor);
  const double t1 = omp_get_wtime();
  std::printf(
      "bisimulation oracle: %zu fine states (eta %.5f) vs %zu abstract states "
      "(eta %.5f), %zu related pairs, %zu violations -> %s (%.2fs)\n",
      r.fine_states, r.eta_fine, r.coarse_states, r.eta_coarse,
      r.relation_pairs, r.report.violations.size(),
      r.report.holds ? "holds" : "FAILS", t1 - t0);
  return r.report.holds ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compositional symbolic controller synthesis"};
  app.require_subcommand(1);

  CommonFlags cf;
  std::string out, tmpl, mode = "box", objective = "reach_while_avoid";
  std::string abs_path;
  std::vector<std::string> use_args;
  int steps = 0;
  std::uint64_t seed = 0;
  double fine_factor = 0.2;

  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* opt = sub->add_option("--config", cf.config, "configuration file");
    if (needs_config) opt->required();
    sub->add_option("--norm", cf.norm, "eps_tilde norm convention: inf|euclid");
    sub->add_option("--spec-margin", cf.margin,
                    "specification margin: eps|eps-plus-chi");
    sub->add_option("--threads", cf.threads, "worker thread cap");
  };

  auto* check = app.add_subcommand("check", "parameter feasibility report");
  add_common(check);
  check->add_option("--out", out, "write the JSON report here");

  auto* abstract_cmd =
      app.add_subcommand("abstract", "build and persist one abstraction");
  add_common(abstract_cmd);
  abstract_cmd->add_option("--template", tmpl, "template name")->required();
  abstract_cmd->add_option("--mode", mode, "box|exact");
  abstract_cmd->add_option("--out", out, "abstraction file")->required();

  auto* synth = app.add_subcommand("synthesize", "solve the abstract game");
  add_common(synth);
  synth->add_option("--abstraction", abs_path, "abstraction file")->required();
  synth->add_option("--template", tmpl, "template name")->required();
  synth->add_option("--objective", objective,
                    "safety|reachability|reach_while_avoid");
  synth->add_option("--out", out, "controller file")->required();

  auto* sim = app.add_subcommand("simulate", "closed-loop network simulation");
  add_common(sim);
  sim->add_option("--use", use_args,
                  "TEMPLATE=ABS_FILE:CTRL_FILE (one per template)")
      ->required();
  sim->add_option("--out", out, "trajectory CSV")->required();
  sim->add_option("--steps", steps, "maximum sampled steps");
  sim->add_option("--seed", seed, "initial-state sampling seed");

  auto* vb = app.add_subcommand("verify-bisim",
                                "exhaustive relation check at desk scale");
  add_common(vb);
  vb->add_option("--template", tmpl, "template name (default: first)");
  vb->add_option("--fine-factor", fine_factor,
                 "fine grid eta as a fraction of the solved eta");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(cf, out);
    if (abstract_cmd->parsed()) return cmd_abstract(cf, tmpl, mode, out);
    if (synth->parsed())
      return cmd_synthesize(cf, abs_path, tmpl, objective, out);
    if (sim->parsed()) return cmd_simulate(cf, use_args, out, steps, seed);
    if (vb->parsed()) return cmd_verify_bisim(cf, tmpl, fine_factor);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
