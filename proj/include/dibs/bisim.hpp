/*
 * bisim.hpp
 *
 * Exhaustive disturbance-bisimulation checker over finite metric
 * systems and the componentwise product relation for compositions.
 * The checker is the oracle behind all relational guarantees; the
 * OpenMP kernel and the serial reference produce identical reports.
 */

#ifndef DIBS_BISIM_HPP_
#define DIBS_BISIM_HPP_

#include "dibs/metric_system.hpp"

namespace dibs {

struct BisimViolation {
  char condition;  /* 'a', 'b' or 'c' */
  sys_index x1, x2;
  /* for 'b': mu is the S1 input with no matching S2 input; for 'c' the
   * roles are swapped.  nu1/nu2/succ1/succ2 witness the failure of the
   * first candidate matching input (-1 where not applicable). */
  int mu = -1;
  int nu1 = -1, nu2 = -1;
  int succ1 = -1, succ2 = -1;
};

struct BisimReport {
  bool holds = false;
  bool vacuous_empty = false; /* empty relation: holds, with a warning */
  std::vector<BisimViolation> violations;
  std::size_t pairs_checked = 0;
};

struct BisimOptions {
  double eps_slack = 1e-9;  /* admissibility tolerance on e <= eps_tilde */
  std::size_t max_violations = 16;
  bool parallel = true;
};

/*
 * Def.-style conditions over every pair (x1,x2) in R:
 *  (a) d(x1,x2) <= eps
 *  (b) for every input of S1 there is an input of S2 such that for all
 *      disturbance value pairs with e(nu1,nu2) <= eps_tilde every
 *      successor pair lands in R
 *  (c) symmetric to (b)
 */
BisimReport check_disturbance_bisimulation(
    const FiniteMetricSystem& s1, const FiniteMetricSystem& s2,
    const Relation& r, double eps, const Vec& eps_tilde, const VectorMetric& e,
    const BisimOptions& opts = {});

/* serial reference implementation, kept for testing the parallel kernel */
BisimReport check_disturbance_bisimulation_serial(
    const FiniteMetricSystem& s1, const FiniteMetricSystem& s2,
    const Relation& r, double eps, const Vec& eps_tilde, const VectorMetric& e,
    const BisimOptions& opts = {});

struct ProductRelationResult {
  Relation relation;
  double eps = 0.0;
  Vec eps_tilde; /* stacked over the composition's external neighbors */
};

/*
 * Componentwise product of per-subsystem relations for two parallel
 * compositions sharing member order.  eps is the max over member
 * epsilons; eps_tilde stacks the neighbor epsilons in external-block
 * order.
 */
ProductRelationResult product_relation(
    const std::map<std::string, Relation>& relations,
    const std::map<std::string, double>& eps, const Composition& c1,
    const Composition& c2, const NetworkTopology& topology);

}  // namespace dibs

#endif
