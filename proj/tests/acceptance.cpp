/*
 * acceptance.cpp
 *
 * End-to-end acceptance suite.  Each criterion prints one PASS/FAIL
 * line; the exit code is the number of failures.
 */

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "dibs/bisim.hpp"
#include "dibs/config.hpp"
#include "dibs/pipeline.hpp"
#include "dibs/runtime.hpp"
#include "dibs/synthesis.hpp"
#include "dibs/verify.hpp"
#include "oracles.hpp"

using namespace dibs;

namespace {

int g_failures = 0;

void report(int num, const std::string& name, bool ok, double seconds,
            const std::string& detail) {
  std::printf("[%s] %2d. %-28s %6.2fs  %s\n", ok ? "PASS" : "FAIL", num,
              name.c_str(), seconds, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string config_path(const std::string& name) {
  return std::string(DIBS_SOURCE_DIR) + "/configs/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
}

/* ---------- criterion 1 & 2: parameter and small-gain reproduction */

void criterion_1_2() {
  double t0 = omp_get_wtime();
  const auto cfg = load_config(config_path("paper_n3.json"));
  const auto rep = solve_network_params(cfg.net);
  const double dt = omp_get_wtime() - t0;

  bool ok = rep.feasible && dt < 1.0;
  char detail[256];
  const auto& up = rep.templates[0];
  const auto& lo = rep.templates[1];
  ok = ok && std::abs(lo.eta_max_inf - 0.0228) < 5e-4;
  ok = ok && std::abs(lo.eta_max_euclid - 0.0228) < 5e-4;
  ok = ok && std::abs(up.eta_max_euclid - 0.0236) < 5e-4;
  ok = ok && std::abs(up.eta_max_inf - 0.0275) < 5e-4;
  std::snprintf(detail, sizeof detail,
                "eta2=%.6f eta1(euclid)=%.6f eta1(inf)=%.6f",
                lo.eta_max_inf, up.eta_max_euclid, up.eta_max_inf);
  report(1, "eta bound reproduction", ok, dt, detail);

  t0 = omp_get_wtime();
  const bool sg_ok =
      rep.small_gain_spectral.feasible && rep.small_gain_lp.feasible &&
      std::abs(rep.small_gain_spectral.lambda_max - 0.4606) < 1e-3;
  const double dt2 = omp_get_wtime() - t0 + dt;
  std::snprintf(detail, sizeof detail, "lambda_max=%.6f lp agrees",
                rep.small_gain_spectral.lambda_max);
  report(2, "small-gain reproduction", sg_ok && dt2 < 1.0, dt2, detail);
}

/* ---------- criterion 3: desk-scale relation check */

void criterion_3() {
  const double t0 = omp_get_wtime();
  const auto cfg = load_config(config_path("desk_bisim.json"));
  const auto rep = solve_network_params(cfg.net);
  bool ok = rep.feasible;
  std::size_t pairs = 0, violations = 1;
  if (ok) {
    /* template index of the plant */
    int tmpl = 0;
    for (std::size_t t = 0; t < cfg.net.templates.size(); ++t)
      if (cfg.net.templates[t].name == "plant") tmpl = static_cast<int>(t);
    const auto r = verify_bisim_instance(cfg.net, tmpl, rep.templates[tmpl]);
    ok = r.report.holds && r.report.violations.empty() &&
         r.relation_pairs > 1000;
    pairs = r.relation_pairs;
    violations = r.report.violations.size();
  }
  const double dt = omp_get_wtime() - t0;
  char detail[128];
  std::snprintf(detail, sizeof detail, "%zu pairs, %zu violations", pairs,
                violations);
  report(3, "sampled/abstract relation", ok && dt < 30.0, dt, detail);
}

/* ---------- criterion 4: composed relations of random networks */

void criterion_4() {
  const double t0 = omp_get_wtime();
  std::mt19937_64 rng(20260810);
  int valid = 0, passed = 0, attempts = 0;

  while (valid < 100 && attempts < 3000) {
    ++attempts;
    const int n = 2 + static_cast<int>(rng() % 2);
    auto net = oracles::random_network(rng, n);

    /* per-subsystem relations: prune the epsilon-ball seed to the
     * greatest disturbance bisimulation via the checker itself */
    std::map<std::string, Relation> rel;
    bool all_ok = true;
    for (const auto& id : net.topology.index_set()) {
      const auto& s1 = net.concrete[id];
      const auto& s2 = net.abstracted[id];
      const double eps = net.eps[id];
      Vec et(static_cast<int>(net.topology.neighbors(id).size()));
      for (int k = 0; k < et.size(); ++k)
        et[k] = net.eps[net.topology.neighbors(id)[k]];
      VectorMetric metric;
      for (std::size_t k = 0; k < net.topology.neighbors(id).size(); ++k)
        metric.block_dims.push_back(1);

      Relation r;
      for (sys_index a = 0; a < s1.n_states(); ++a)
        for (sys_index b = 0; b < s2.n_states(); ++b)
          if (FiniteMetricSystem::metric(s1.states[a], s2.states[b]) <= eps)
            r.pairs.emplace_back(a, b);

      BisimOptions opts;
      opts.max_violations = 1u << 20;
      for (;;) {
        if (r.pairs.empty()) break;
        const auto chk =
            check_disturbance_bisimulation(s1, s2, r, eps, et, metric, opts);
        if (chk.holds) break;
        std::set<std::pair<sys_index, sys_index>> bad;
        for (const auto& v : chk.violations) bad.insert({v.x1, v.x2});
        Relation next;
        for (const auto& p : r.pairs)
          if (!bad.count(p)) next.pairs.push_back(p);
        r = std::move(next);
      }
      if (r.pairs.empty()) {
        all_ok = false;
        break;
      }
      rel[id] = std::move(r);
    }
    if (!all_ok) continue;

    /* random subset of the index set */
    std::vector<std::string> subset;
    for (const auto& id : net.topology.index_set())
      if (rng() % 2 == 0) subset.push_back(id);
    if (subset.empty()) subset.push_back(net.topology.index_set()[0]);

    const auto c1 = compose(net.concrete, subset, net.topology);
    const auto c2 = compose(net.abstracted, subset, net.topology);
    const auto pr = product_relation(rel, net.eps, c1, c2, net.topology);
    const auto chk = check_disturbance_bisimulation(
        c1.system, c2.system, pr.relation, pr.eps, pr.eps_tilde, c1.w_metric);
    ++valid;
    if (chk.holds) ++passed;
  }
  const double dt = omp_get_wtime() - t0;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "%d/%d composed relations hold (%d attempts)", passed, valid,
                attempts);
  report(4, "composition property suite", valid >= 100 && passed == valid, dt,
         detail);
}

/* ---------- criterion 5: box mode contains exact mode */

void criterion_5() {
  const double t0 = omp_get_wtime();
  const auto cfg = load_config(config_path("paper_n3.json"));
  bool ok = true;
  std::size_t total = 0;

  for (int tmpl = 0; tmpl < 2 && ok; ++tmpl) {
    const auto& t = cfg.net.templates[tmpl];
    AbstractionParams p;
    p.tau = cfg.net.tau;
    p.eta = Vec::Constant(2, 0.2);
    p.omega = Vec::Constant(1, 1.0);
    p.eps = t.eps;
    p.eps_tilde = template_eps_tilde(cfg.net, tmpl);
    std::vector<UniformGrid> slot_grids;
    Vec slot_eps(static_cast<int>(t.slots.size()));
    for (std::size_t s = 0; s < t.slots.size(); ++s) {
      const auto& src = cfg.net.templates[t.slots[s].source_template];
      const double half = src.state_domain.upper[0];
      slot_grids.emplace_back(src.state_domain,
                              Vec::Constant(src.state_domain.dim(), half / 2));
      slot_eps[static_cast<int>(s)] = half / 2;
    }
    const auto dist = DisturbanceModel::neighbor_grids_model(
        std::move(slot_grids), slot_eps);
    const auto exact = build_abstraction(t.field, p, t.state_domain,
                                         t.input_domain, dist,
                                         AbstractionMode::exact);
    const auto box = build_abstraction(t.field, p, t.state_domain,
                                       t.input_domain, dist,
                                       AbstractionMode::box);
    for (std::size_t s = 0; s < exact.n_states() && ok; ++s)
      for (std::size_t u = 0; u < exact.n_inputs() && ok; ++u) {
        const auto brec = box.record(s, u);
        for (std::size_t w = 0; w < exact.n_dist() && ok; ++w) {
          const auto erec = exact.record(s, u, w);
          ++total;
          if (exact.out_of_domain(erec)) {
            ok = box.out_of_domain(brec);
            continue;
          }
          if (box.out_of_domain(brec)) continue;
          const auto* eb = exact.box_of(erec);
          const auto* bb = box.box_of(brec);
          for (int d = 0; d < 2; ++d)
            ok = ok && bb[2 * d] <= eb[2 * d] && bb[2 * d + 1] >= eb[2 * d + 1];
        }
      }
  }
  const double dt = omp_get_wtime() - t0;
  char detail[128];
  std::snprintf(detail, sizeof detail, "%zu (state,input,disturbance) triples",
                total);
  report(5, "box-mode soundness", ok, dt, detail);
}

/* ---------- criterion 6: integrator accuracy and order */

void criterion_6() {
  const double t0 = omp_get_wtime();
  Mat A(2, 2), B(2, 1), D(2, 2);
  A << -1, 1, -1, -1;
  B << 0, 1;
  D << 0, 0, 0, 0.3;
  const VectorField f = VectorField::affine(A, B, D);
  const Mat M = oracles::expm(0.1 * A);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  double worst = 0.0, e1 = 0.0, e2 = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vec x(2);
    x << d(rng), d(rng);
    const Vec exact = M * x;
    worst = std::max(
        worst, (integrate_rk4(f, x, Vec::Zero(1), Vec::Zero(2), 0.1, 1e-3) -
                exact)
                   .lpNorm<Eigen::Infinity>());
    /* order check runs at steps where truncation dominates rounding;
     * at tau/100 the error sits at the double-precision floor */
    e1 = std::max(
        e1, (integrate_rk4(f, x, Vec::Zero(1), Vec::Zero(2), 0.1, 0.05) -
             exact)
                .lpNorm<Eigen::Infinity>());
    e2 = std::max(
        e2, (integrate_rk4(f, x, Vec::Zero(1), Vec::Zero(2), 0.1, 0.025) -
             exact)
                .lpNorm<Eigen::Infinity>());
  }
  const double dt = omp_get_wtime() - t0;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "max err %.2e at tau/100, halving gain %.1fx", worst, e1 / e2);
  report(6, "integrator accuracy", worst < 1e-8 && e1 / e2 >= 8.0, dt, detail);
}

/* ---------- criterion 7: synthesis against the game oracles ---------- */

void criterion_7() {
  const double t0 = omp_get_wtime();
  std::mt19937_64 rng(7109);
  bool ok = true;
  int instances = 0;

  for (int trial = 0; trial < 20 && ok; ++trial) {
    const int n = 20 + static_cast<int>(rng() % 181); /* up to 200 states */
    const int m = 2 + static_cast<int>(rng() % 2);
    oracles::Arena a = oracles::random_arena(rng, n, m);
    std::vector<char> target(n, 0), safe(n, 1);
    for (int s = 0; s < n; ++s) {
      if (rng() % 6 == 0) target[s] = 1;
      if (rng() % 8 == 0) safe[s] = 0;
    }
    for (int s = 0; s < n; ++s) target[s] = target[s] && safe[s];

    const auto hold = oracles::safety_induction(a, safe);
    std::vector<char> core(n, 0);
    for (int s = 0; s < n; ++s) core[s] = target[s] && hold[s];
    const auto oracle = oracles::backward_induction(a, core, safe);

    const auto abs = oracles::make_arena_abstraction(a);
    const StateSet tset(target.begin(), target.end());
    const StateSet sset(safe.begin(), safe.end());
    const auto ctrl = solve_reach_avoid(abs, tset, sset);
    for (int s = 0; s < n && ok; ++s) {
      ok = static_cast<bool>(ctrl.winning[s]) ==
           static_cast<bool>(oracle.winning[s]);
      if (ok && ctrl.winning[s]) ok = ctrl.rank[s] == oracle.rank[s];
    }
    AbstractSpec spec;
    spec.objective = Objective::reach_while_avoid;
    spec.target = tset;
    spec.safe = sset;
    ok = ok && verify_controller(abs, ctrl, spec).ok;
    ++instances;
  }

  /* mutation killing on one mid-size instance: enumerate provably
   * invalid single-entry edits, then check the verifier rejects every
   * one of them */
  int mutations = 0, caught = 0;
  {
    oracles::Arena a = oracles::random_arena(rng, 150, 3);
    std::vector<char> target(150, 0), safe(150, 1);
    for (int s = 0; s < 150; ++s)
      if (rng() % 5 == 0) target[s] = 1;
    const auto abs = oracles::make_arena_abstraction(a);
    const StateSet tset(target.begin(), target.end());
    const StateSet sset(safe.begin(), safe.end());
    const auto ctrl = solve_reach_avoid(abs, tset, sset);
    AbstractSpec spec;
    spec.objective = Objective::reach_while_avoid;
    spec.target = tset;
    spec.safe = sset;
    if (!verify_controller(abs, ctrl, spec).ok) ok = false;

    std::vector<Controller> bad_controllers;
    for (std::size_t s = 0; s < 150 && bad_controllers.size() < 100; ++s) {
      if (!ctrl.winning[s] && !ctrl.hold[s]) {
        Controller bad = ctrl; /* claim a dead state is winning */
        bad.winning[s] = 1;
        bad_controllers.push_back(std::move(bad));
      }
      if (ctrl.winning[s] && ctrl.rank[s] > 0 && !tset[s] &&
          bad_controllers.size() < 100) {
        Controller bad = ctrl; /* zero the rank of a progress state */
        bad.rank[s] = 0;
        bad_controllers.push_back(std::move(bad));
      }
      if (ctrl.winning[s] && ctrl.choice[s] >= 0 &&
          bad_controllers.size() < 100) {
        int alt = -1; /* redirect to an inadmissible input */
        for (std::size_t u = 0; u < abs.n_inputs(); ++u) {
          if (static_cast<int>(u) == ctrl.choice[s]) continue;
          const auto rec = abs.record(s, u);
          bool escapes = abs.out_of_domain(rec) || abs.box_empty(rec);
          if (!escapes)
            abs.for_each_successor(rec, [&](grid_index q) {
              if (!ctrl.winning[q] && !ctrl.hold[q]) escapes = true;
            });
          if (escapes) {
            alt = static_cast<int>(u);
            break;
          }
        }
        if (alt >= 0) {
          Controller bad = ctrl;
          bad.choice[s] = alt;
          bad_controllers.push_back(std::move(bad));
        }
      }
    }
    for (const auto& bad : bad_controllers) {
      ++mutations;
      if (!verify_controller(abs, bad, spec).ok) ++caught;
    }
    if (mutations < 100) ok = false;
  }
  const double dt = omp_get_wtime() - t0;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "%d instances match the oracle, %d/%d mutations caught",
                instances, caught, mutations);
  report(7, "synthesis oracle", ok && caught == mutations, dt, detail);
}

/* ---------- criteria 8-10: end-to-end pipeline ---------- */

struct PipelineArtifacts {
  NetworkParamReport rep;
  std::vector<AbstractSystem> abs;
  std::vector<Controller> ctrl;
  int controller_files = 0;
};

PipelineArtifacts run_pipeline(const LoadedConfig& cfg,
                               const std::string& tag) {
  PipelineArtifacts art;
  art.rep = solve_network_params(cfg.net);
  if (!art.rep.feasible) throw std::runtime_error("infeasible parameters");
  for (std::size_t t = 0; t < cfg.net.templates.size(); ++t) {
    const auto& tp = cfg.net.templates[t];
    art.abs.push_back(build_abstraction(
        tp.field, art.rep.templates[t].params, tp.state_domain,
        tp.input_domain,
        abstraction_disturbance(cfg.net, static_cast<int>(t), art.rep),
        AbstractionMode::box));
    const auto spec = build_abstract_spec(cfg.net, static_cast<int>(t),
                                          art.abs.back().state_grid,
                                          Objective::reach_while_avoid);
    art.ctrl.push_back(
        solve_reach_avoid(art.abs.back(), spec.target, spec.safe));
    if (art.ctrl.back().winning_count() == 0)
      throw std::runtime_error("empty winning set");
    const auto vr = verify_controller(art.abs.back(), art.ctrl.back(), spec);
    if (!vr.ok) throw std::runtime_error("verification: " + vr.message);
    save_abstraction("/tmp/dibs_acc_" + tag + "_" + tp.name + ".abs",
                     art.abs.back());
    save_controller("/tmp/dibs_acc_" + tag + "_" + tp.name + ".ctrl",
                    art.ctrl.back());
    ++art.controller_files;
  }
  return art;
}

SimulationResult simulate_with(const LoadedConfig& cfg,
                               const PipelineArtifacts& art,
                               const std::string& csv_path) {
  std::map<std::string, SubsystemRuntime> rt;
  std::map<std::string, std::pair<const AbstractSystem*, const Controller*>>
      rt_pairs;
  for (const auto& inst : cfg.net.instances) {
    rt[inst.id] = {&art.abs[inst.tmpl], &art.ctrl[inst.tmpl]};
    rt_pairs[inst.id] = {&art.abs[inst.tmpl], &art.ctrl[inst.tmpl]};
  }
  const auto x0 = sample_initial_states(cfg.net, rt_pairs, cfg.x0,
                                        cfg.x0_sample, cfg.x0_seed);
  const auto res = simulate_network(cfg.net, rt, x0);
  if (!csv_path.empty()) write_trajectory_csv(csv_path, res.log);
  return res;
}

bool trajectories_respect_geometry(const LoadedConfig& cfg,
                                   const SimulationResult& res,
                                   std::string* why) {
  for (const auto& row : res.log.rows) {
    const auto& inst = cfg.net.instance(res.log.ids[row.subsystem]);
    const auto& t = cfg.net.templates[inst.tmpl];
    if (t.obstacle && t.obstacle->contains(row.x)) {
      *why = "obstacle hit by " + inst.id;
      return false;
    }
    if (!t.state_domain.contains(row.x, 1e-9)) {
      *why = "domain exit by " + inst.id;
      return false;
    }
  }
  return true;
}

void criteria_8_9_10() {
  /* ---- N = 3, full pipeline ---- */
  double t0 = omp_get_wtime();
  LoadedConfig cfg3 = load_config(config_path("paper_n3.json"));
  bool ok8 = true;
  std::string why;
  double max_v_ratio = 0.0;
  double t_synth = 0.0;
  try {
    const double ts = omp_get_wtime();
    const auto art = run_pipeline(cfg3, "n3");
    t_synth = omp_get_wtime() - ts;
    const auto res = simulate_with(cfg3, art, "/tmp/dibs_acc_n3.csv");
    ok8 = res.all_reached && res.all_safe && res.all_safe_substeps;
    if (!ok8) why = "flags not set";
    if (ok8) ok8 = trajectories_respect_geometry(cfg3, res, &why);
    for (std::size_t i = 0; i < res.max_v.size(); ++i) {
      const auto& t = cfg3.net.templates[cfg3.net.instances[i].tmpl];
      const double thr = t.lyap.alpha_low(t.eps);
      max_v_ratio = std::max(max_v_ratio, res.max_v[i] / thr);
    }
    if (ok8 && max_v_ratio > 1.0) {
      ok8 = false;
      why = "relation bound exceeded";
    }
    /* inter-sample excursions stay inside the chi envelope */
    for (double e : res.max_envelope)
      if (e > 1.0 + 1e-6) {
        ok8 = false;
        why = "chi envelope exceeded";
      }
    /* the synthesis budget is thirty minutes */
    if (t_synth > 1800.0) {
      ok8 = false;
      why = "synthesis budget exceeded";
    }
  } catch (const std::exception& e) {
    ok8 = false;
    why = e.what();
  }
  double dt = omp_get_wtime() - t0;
  char detail[192];
  std::snprintf(detail, sizeof detail, "max V/alpha_low(eps) = %.3f %s",
                max_v_ratio, why.c_str());
  report(8, "end-to-end cascade (N=3)", ok8, dt, detail);

  /* ---- N in {3, 10, 100}: reuse and scaling ---- */
  t0 = omp_get_wtime();
  bool ok9 = true;
  std::string d9;
  try {
    /* two synthesis artifacts serve every network size */
    const auto art = run_pipeline(cfg3, "shared");
    ok9 = art.controller_files == 2;

    std::map<int, double> sim_time;
    nlohmann::ordered_json base =
        nlohmann::ordered_json::parse(slurp(config_path("paper_n100.json")));
    for (int N : {3, 10, 100}) {
      base["network"]["chain_of_pairs"] = N;
      LoadedConfig cfg = parse_config(base.dump());
      const double ts = omp_get_wtime();
      const auto res = simulate_with(cfg, art, N == 100
                                                    ? "/tmp/dibs_acc_n100.csv"
                                                    : "");
      sim_time[N] = omp_get_wtime() - ts;
      if (!res.all_reached || !res.all_safe) {
        ok9 = false;
        d9 = "flags not set at N=" + std::to_string(N);
      }
      if (N == 100) {
        std::string why100;
        if (!trajectories_respect_geometry(cfg, res, &why100)) {
          ok9 = false;
          d9 = why100;
        }
      }
    }
    /* linear scaling within generous slack: per-pair time at N=100
     * within 5x of N=10 (plus a 2ms floor for constant costs) */
    const double per10 = sim_time[10] / 10.0 + 2e-3;
    const double per100 = sim_time[100] / 100.0;
    if (per100 > 5.0 * per10) {
      ok9 = false;
      d9 = "superlinear simulation time";
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "2 controllers, sim %.3fs/%.3fs/%.3fs for N=3/10/100%s%s",
                  sim_time[3], sim_time[10], sim_time[100],
                  d9.empty() ? "" : " ", d9.c_str());
    d9 = buf;
  } catch (const std::exception& e) {
    ok9 = false;
    d9 = e.what();
  }
  dt = omp_get_wtime() - t0;
  report(9, "cascade at N=100", ok9, dt, d9);

  /* ---- determinism: byte-identical artifacts on a rerun ---- */
  t0 = omp_get_wtime();
  bool ok10 = true;
  std::string d10 = "controller and trajectory bytes identical";
  try {
    const auto art2 = run_pipeline(cfg3, "rerun");
    (void)art2;
    simulate_with(cfg3, art2, "/tmp/dibs_acc_rerun.csv");
    for (const auto* name : {"upper", "lower"}) {
      if (slurp(std::string("/tmp/dibs_acc_n3_") + name + ".abs") !=
          slurp(std::string("/tmp/dibs_acc_rerun_") + name + ".abs"))
        ok10 = false;
      if (slurp(std::string("/tmp/dibs_acc_n3_") + name + ".ctrl") !=
          slurp(std::string("/tmp/dibs_acc_rerun_") + name + ".ctrl"))
        ok10 = false;
    }
    if (slurp("/tmp/dibs_acc_n3.csv") != slurp("/tmp/dibs_acc_rerun.csv"))
      ok10 = false;
    if (!ok10) d10 = "artifacts differ between runs";
  } catch (const std::exception& e) {
    ok10 = false;
    d10 = e.what();
  }
  dt = omp_get_wtime() - t0;
  report(10, "pipeline determinism", ok10, dt, d10);
}

}  // namespace

int main() {
  std::printf("acceptance suite (%d threads)\n", omp_get_max_threads());
  criterion_1_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criteria_8_9_10();
  std::printf("%s: %d criterion failure(s)\n",
              g_failures == 0 ? "SUCCESS" : "FAILURE", g_failures);
  return g_failures;
}
