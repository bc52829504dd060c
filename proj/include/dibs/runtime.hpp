/*
 * runtime.hpp
 *
 * Controller refinement via the product construction and synchronous
 * closed-loop simulation of the continuous network with trajectory
 * logging.  The abstract companion model runs alongside the continuous
 * state; the pair must stay inside the Lyapunov relation at every
 * sampling instant.
 */

#ifndef DIBS_RUNTIME_HPP_
#define DIBS_RUNTIME_HPP_

#include <map>
#include <string>

#include "dibs/abstraction.hpp"
#include "dibs/network_spec.hpp"
#include "dibs/synthesis.hpp"

namespace dibs {

struct ProductState {
  Vec x;
  grid_index x_hat = 0;
  double v_value = 0.0; /* V(x, x_hat) at the last sampling instant */
};

struct RefineStep {
  ProductState next;
  int input_index = -1;
};

/*
 * One sampled step of the product system: the controller input of the
 * current abstract state drives both components; the abstract successor
 * is the box successor minimizing V against the new continuous state.
 * Throws when the abstract state is not winning or the relation is
 * violated at the new sampling instant.
 */
RefineStep refine_step(const AbstractSystem& abs, const Controller& ctrl,
                       const LyapunovRelation& rel, const VectorField& field,
                       const ProductState& current, const Vec& nu,
                       const Vec& nu_hat, double tau, double h);

struct TrajectoryRow {
  double time = 0.0;
  int subsystem = 0;
  Vec x;
  std::int64_t abstract_index = -1;
  int input_index = -1;
  bool reached = false;
  bool safe = true;
};

struct TrajectoryLog {
  std::vector<std::string> ids;
  std::vector<TrajectoryRow> rows;
};

/* abstraction + controller deployed on one subsystem (shared between
 * instances of the same template) */
struct SubsystemRuntime {
  const AbstractSystem* abs = nullptr;
  const Controller* ctrl = nullptr;
};

struct SimulationOptions {
  int max_steps = 20000;
  bool stop_when_all_reached = true;
  bool check_envelope = true;
};

struct SimulationResult {
  TrajectoryLog log;
  bool all_reached = false;
  bool all_safe = true;         /* at sampling instants */
  bool all_safe_substeps = true; /* at sub-step resolution */
  int steps = 0;
  std::vector<double> max_v;        /* max V(x, x_hat) per subsystem */
  std::vector<double> max_envelope; /* max |x(t)-x(k tau)| / (chi (t-k tau)) */
};

/*
 * Synchronous sampled execution: every subsystem reads its neighbors'
 * states (quantized copies feed the abstract components), applies its
 * local controller, and the coupled network ODE is integrated jointly
 * with shared sub-steps.  Throws with the subsystem id on relation
 * violations or non-winning states.
 */
SimulationResult simulate_network(
    const NetworkSpec& net,
    const std::map<std::string, SubsystemRuntime>& runtimes,
    const std::map<std::string, Vec>& x0, const SimulationOptions& opts = {});

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log);

}  // namespace dibs

#endif
