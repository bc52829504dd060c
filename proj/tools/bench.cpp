/*
 * bench.cpp
 *
 * Timing comparison of the OpenMP kernels against their serial
 * reference implementations: abstraction build, fixpoint synthesis and
 * the exhaustive relation checker.
 */

#include <omp.h>

#include <cstdio>

#include "dibs/abstraction.hpp"
#include "dibs/bisim.hpp"
#include "dibs/synthesis.hpp"
#include "dibs/verify.hpp"

using namespace dibs;

namespace {

VectorField paper_pair_field() {
  Mat A(2, 2), B(2, 1), D(2, 2);
  A << -1, 1, -1, -1;
  B << 0, 1;
  D << 0, 0, 0, 0.3;
  return VectorField::affine(A, B, D);
}

AbstractionParams bench_params(double eta) {
  AbstractionParams p;
  p.tau = 0.1;
  p.eta = Vec::Constant(2, eta);
  p.omega = Vec::Constant(1, 0.1);
  p.eps = 0.7;
  p.eps_tilde = Vec::Constant(1, 0.7);
  return p;
}

template <class F>
double timed(F&& f) {
  const double t0 = omp_get_wtime();
  f();
  return omp_get_wtime() - t0;
}

}  // namespace

int main(int argc, char** argv) {
  double eta = 0.04;
  if (argc > 1) eta = std::atof(argv[1]);

  const VectorField field = paper_pair_field();
  const Box Xp(Vec::Constant(2, -4.2), Vec::Constant(2, 4.2));
  const Box Up(Vec::Constant(1, -7.0), Vec::Constant(1, 7.0));
  const AbstractionParams params = bench_params(eta);
  const DisturbanceModel dist = DisturbanceModel::neighbor_grids_model(
      {UniformGrid(Box(Vec::Constant(2, -3.2), Vec::Constant(2, 3.2)),
                   Vec::Constant(2, 0.35))},
      Vec::Constant(1, 0.7));

  std::printf("threads: %d, eta: %g\n", omp_get_max_threads(), eta);

  AbstractSystem abs_par, abs_ser;
  const double tb_ser = timed([&] {
    abs_ser = build_abstraction_serial(field, params, Xp, Up, dist,
                                       AbstractionMode::box);
  });
  const double tb_par = timed([&] {
    abs_par =
        build_abstraction(field, params, Xp, Up, dist, AbstractionMode::box);
  });
  const bool same_abs =
      abs_ser.bounds == abs_par.bounds && abs_ser.flags == abs_par.flags;
  std::printf("abstraction (%zu records): serial %.3fs  omp %.3fs  x%.2f  %s\n",
              abs_par.n_records(), tb_ser, tb_par, tb_ser / tb_par,
              same_abs ? "identical" : "MISMATCH");

  StateSet safe(abs_par.n_states(), 1);
  StateSet target(abs_par.n_states(), 0);
  for (std::size_t s = 0; s < abs_par.n_states(); ++s) {
    const Vec p = abs_par.state_grid.point(static_cast<grid_index>(s));
    if ((p[0] + 1.5) * (p[0] + 1.5) + p[1] * p[1] <= 0.3) target[s] = 1;
  }

  Controller c_ser, c_par;
  const double ts_ser = timed(
      [&] { c_ser = solve_reach_avoid_serial(abs_par, target, safe); });
  const double ts_par =
      timed([&] { c_par = solve_reach_avoid(abs_par, target, safe); });
  const bool same_ctrl = c_ser.winning == c_par.winning &&
                         c_ser.choice == c_par.choice &&
                         c_ser.rank == c_par.rank;
  std::printf(
      "reach-avoid fixpoint (%zu winning): serial %.3fs  omp %.3fs  x%.2f  %s\n",
      c_par.winning_count(), ts_ser, ts_par, ts_ser / ts_par,
      same_ctrl ? "identical" : "MISMATCH");

  /* checker on a full (trivially holding) relation over a contractive
   * exact model; the timing is dominated by the quantifier sweep */
  Mat A2 = -2.0 * Mat::Identity(2, 2);
  Mat B2(2, 1), D2(2, 2);
  B2 << 0, 1;
  D2 << 0, 0, 0, 0.1;
  const VectorField contractive = VectorField::affine(A2, B2, D2);
  AbstractionParams cp = bench_params(0.125);
  cp.omega = Vec::Constant(1, 0.25);
  const DisturbanceModel cd = DisturbanceModel::neighbor_grids_model(
      {UniformGrid(Box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)),
                   Vec::Constant(2, 0.5))},
      Vec::Constant(1, 1.0));
  const AbstractSystem coarse = build_abstraction(
      contractive, cp, Box(Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)),
      Box(Vec::Constant(1, -0.5), Vec::Constant(1, 0.5)), cd,
      AbstractionMode::exact);
  const FiniteMetricSystem sys = to_metric_system(coarse);
  Relation full;
  for (sys_index a = 0; a < sys.n_states(); ++a)
    for (sys_index b = 0; b < sys.n_states(); ++b) full.pairs.emplace_back(a, b);
  VectorMetric metric;
  metric.block_dims = {2};
  const Vec et = Vec::Constant(1, 2.0);

  BisimReport r_ser, r_par;
  BisimOptions opts;
  const double tc_ser = timed([&] {
    r_ser = check_disturbance_bisimulation_serial(sys, sys, full, 4.0, et,
                                                  metric, opts);
  });
  const double tc_par = timed([&] {
    r_par = check_disturbance_bisimulation(sys, sys, full, 4.0, et, metric,
                                           opts);
  });
  std::printf(
      "bisim checker (%zu pairs): serial %.3fs  omp %.3fs  x%.2f  %s\n",
      r_par.pairs_checked, tc_ser, tc_par, tc_ser / tc_par,
      r_ser.holds == r_par.holds ? "identical" : "MISMATCH");

  return same_abs && same_ctrl ? 0 : 1;
}
