/*
 * metric_system.hpp
 *
 * Finite metric systems, network topology and subset composition.
 * States, inputs and disturbance values are explicit real vectors; the
 * state metric is the infinity norm.  Disturbance signals are
 * represented by their constant value.
 */

#ifndef DIBS_METRIC_SYSTEM_HPP_
#define DIBS_METRIC_SYSTEM_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dibs/ode.hpp"

namespace dibs {

using sys_index = std::uint32_t;

/* directed interconnection graph; an edge (j,i) means "j disturbs i" */
class NetworkTopology {
public:
  NetworkTopology() = default;
  NetworkTopology(std::vector<std::string> index_set,
                  std::vector<std::pair<std::string, std::string>> edges);

  const std::vector<std::string>& index_set() const { return m_ids; }
  bool has(const std::string& id) const;
  int position(const std::string& id) const;

  /* neighbors of i, ordered by position in the index set */
  std::vector<std::string> neighbors(const std::string& i) const;

  /* neighbors of i restricted to edges from outside the subset
   * (the relation over the index set minus the subset-internal edges) */
  std::vector<std::string> neighbors_outside(
      const std::string& i, const std::vector<std::string>& subset) const;

  /* external neighbors of a subset: sources outside the subset feeding
   * some member, ordered by index-set position */
  std::vector<std::string> external_neighbors(
      const std::vector<std::string>& subset) const;

  bool has_edge(const std::string& j, const std::string& i) const;

private:
  std::vector<std::string> m_ids;
  std::vector<std::pair<std::string, std::string>> m_edges;
};

/* block decomposition of a disturbance vector into per-neighbor blocks;
 * e(w,w') is the vector of blockwise infinity norms */
struct VectorMetric {
  std::vector<int> block_dims;

  int total_dim() const;
  int blocks() const { return static_cast<int>(block_dims.size()); }
  Vec eval(const Vec& w1, const Vec& w2) const;
};

struct FiniteMetricSystem {
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  std::vector<Vec> disturbance_values; /* singleton zero vector when undisturbed */
  double tau = 0.0;
  /* flat (state, input, disturbance) -> set of successor state indices */
  std::vector<std::vector<sys_index>> transitions;

  std::size_t n_states() const { return states.size(); }
  std::size_t n_inputs() const { return inputs.size(); }
  std::size_t n_dist() const { return disturbance_values.size(); }

  std::size_t slot(std::size_t s, std::size_t u, std::size_t w) const {
    return (s * n_inputs() + u) * n_dist() + w;
  }
  const std::vector<sys_index>& delta(std::size_t s, std::size_t u,
                                      std::size_t w) const {
    return transitions[slot(s, u, w)];
  }
  std::vector<sys_index>& delta(std::size_t s, std::size_t u, std::size_t w) {
    return transitions[slot(s, u, w)];
  }

  /* infinity-norm state metric */
  static double metric(const Vec& a, const Vec& b) {
    return (a - b).lpNorm<Eigen::Infinity>();
  }

  /* checks index validity and nonemptiness of every transition set */
  void validate() const;

  /* an undisturbed system: one zero-dimensional disturbance value */
  static FiniteMetricSystem undisturbed(std::vector<Vec> states,
                                        std::vector<Vec> inputs, double tau);
};

struct Relation {
  std::vector<std::pair<sys_index, sys_index>> pairs;

  bool empty() const { return pairs.empty(); }
  static Relation identity(std::size_t n);
};

/* result of composing a subset of compatible systems */
struct Composition {
  FiniteMetricSystem system;
  std::vector<std::string> members;            /* subset, index-set order */
  std::vector<std::string> external_neighbors; /* sources of the composed W */
  VectorMetric state_blocks;                   /* per-member state dims */
  VectorMetric w_metric;                       /* per-external-neighbor blocks */

  /* mixed-radix strides (last member fastest) */
  std::vector<std::uint64_t> state_stride;
  std::vector<std::uint64_t> input_stride;
  std::vector<std::uint64_t> dist_stride;

  sys_index compose_state(const std::vector<sys_index>& parts) const;
  std::vector<sys_index> split_state(sys_index s) const;
};

/*
 * Composition of a subset w.r.t. the topology.  Requires all members'
 * disturbance value lists to equal the canonical product of their
 * neighbors' state lists (in index-set order, last neighbor fastest)
 * and all sampling times to agree.  Coupling disturbances are wired
 * from the co-composed states at the start of the step.
 */
Composition compose(const std::map<std::string, FiniteMetricSystem>& systems,
                    const std::vector<std::string>& subset,
                    const NetworkTopology& topology);

/* canonical product disturbance list for subsystem i (neighbors'
 * states, index-set order, last fastest); helper for building
 * compatible networks */
std::vector<Vec> product_disturbances(
    const std::map<std::string, FiniteMetricSystem>& systems,
    const std::string& i, const NetworkTopology& topology);

}  // namespace dibs

#endif
