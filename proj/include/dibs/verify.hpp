/*
 * verify.hpp
 *
 * End-to-end oracle run: build a grid-restricted sampled-time system
 * (a fine exact-mode abstraction) and the exact-mode abstraction at the
 * solved quantization, connect them by the Lyapunov sublevel relation
 * and feed the pair to the exhaustive disturbance-bisimulation checker.
 */

#ifndef DIBS_VERIFY_HPP_
#define DIBS_VERIFY_HPP_

#include "dibs/abstraction.hpp"
#include "dibs/bisim.hpp"
#include "dibs/lyapunov.hpp"

namespace dibs {

struct BisimInstanceReport {
  BisimReport report;
  std::size_t fine_states = 0;
  std::size_t coarse_states = 0;
  std::size_t relation_pairs = 0;
  double eta_fine = 0.0;
  double eta_coarse = 0.0;
};

/*
 * fine_factor scales the solved eta down for the sampled-side grid.
 * The disturbance lists are neighbor grids at the slot epsilons
 * (coarse side) and at half of them (fine side), so every admissible
 * value pair stays within the eps_tilde mismatch bound.
 */
BisimInstanceReport verify_bisim_instance(const NetworkSpec& net, int tmpl,
                                          const TemplateParams& tp,
                                          double fine_factor = 0.2,
                                          bool parallel = true);

}  // namespace dibs

#endif
