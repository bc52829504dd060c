/*
 * abstraction.hpp
 *
 * Grid-indexed abstract metric systems.  Box mode stores, per
 * (state, input), one inclusive index box covering every successor
 * over the whole disturbance box (interval hull of the affine
 * endpoint); exact mode stores one index box per (state, input,
 * disturbance point) from the RK4 endpoint.  Out-of-domain entries
 * model the losing sink.
 */

#ifndef DIBS_ABSTRACTION_HPP_
#define DIBS_ABSTRACTION_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "dibs/grid.hpp"
#include "dibs/metric_system.hpp"
#include "dibs/network_spec.hpp"

namespace dibs {

enum class AbstractionMode : std::uint8_t { box = 0, exact = 1 };

/* disturbance value model: product of neighbor state grids, an explicit
 * point list, or none */
struct DisturbanceModel {
  enum class Kind : std::uint8_t { none = 0, neighbor_grids = 1, points = 2 };
  Kind kind = Kind::none;
  std::vector<UniformGrid> slot_grids;
  std::vector<Vec> explicit_points;
  VectorMetric metric; /* block decomposition for e */

  static DisturbanceModel none_model();
  static DisturbanceModel neighbor_grids_model(std::vector<UniformGrid> grids,
                                               const Vec& slot_eps);
  static DisturbanceModel points_model(std::vector<Vec> points,
                                       VectorMetric metric);

  int dim() const;
  Box hull() const;                  /* smallest box containing all values */
  std::vector<Vec> enumerate() const; /* all values (exact mode) */
  std::size_t count() const;
  /* enumeration index of a disturbance value (nearest for grids) */
  std::size_t index_of(const Vec& w) const;
};

/* neighbor-grid model of subsystem i: product of the neighbors' state
 * grids; requires eta_j <= eps_j for every neighbor */
DisturbanceModel neighbor_disturbance_model(
    const NetworkTopology& topology, const std::string& i,
    const std::map<std::string, UniformGrid>& grids,
    const std::map<std::string, double>& eps_map);

/* membership test of the Lyapunov-derived relation:
 * (q, q_hat) related iff V(q, q_hat) <= alpha_low(eps) */
struct LyapunovRelation {
  Vec v_coeffs;
  KInf alpha_low = KInf::identity();
  double eps = 0.0;

  double threshold() const { return alpha_low(eps); }
  double value(const Vec& q, const Vec& q_hat) const {
    return lyapunov_value(v_coeffs, q, q_hat);
  }
  bool member(const Vec& q, const Vec& q_hat) const {
    return value(q, q_hat) <= threshold() * (1.0 + 1e-12) + 1e-15;
  }
};

bool relation_membership(const LyapunovRelation& rel, const Vec& q,
                         const Vec& q_hat);

class AbstractSystem {
public:
  static constexpr std::uint8_t kOutOfDomain = 1;

  UniformGrid state_grid;
  UniformGrid input_grid;
  DisturbanceModel disturbance;
  AbstractionMode mode = AbstractionMode::box;
  AbstractionParams params;

  /* flat records: box mode (state, input), exact mode
   * (state, input, disturbance); 2*dim int32 bounds per record */
  std::vector<std::int32_t> bounds;
  std::vector<std::uint8_t> flags;

  std::size_t n_states() const { return state_grid.size(); }
  std::size_t n_inputs() const { return input_grid.size(); }
  std::size_t n_dist() const {
    return mode == AbstractionMode::exact ? disturbance.count() : 1;
  }
  std::size_t n_records() const { return flags.size(); }

  std::size_t record(std::size_t s, std::size_t u, std::size_t w = 0) const {
    return (s * n_inputs() + u) * n_dist() + w;
  }
  bool out_of_domain(std::size_t rec) const {
    return flags[rec] & kOutOfDomain;
  }
  const std::int32_t* box_of(std::size_t rec) const {
    return bounds.data() + rec * 2 * state_grid.dim();
  }
  bool box_empty(std::size_t rec) const;
  std::uint64_t box_count(std::size_t rec) const;

  /* invokes f(grid_index) for every successor in the record box */
  template <class F>
  void for_each_successor(std::size_t rec, F&& f) const {
    if (box_empty(rec)) return;
    const int dim = state_grid.dim();
    const std::int32_t* b = box_of(rec);
    std::vector<int> c(dim);
    for (int d = 0; d < dim; ++d) c[d] = b[2 * d];
    for (;;) {
      f(state_grid.from_coords(c));
      int d = dim - 1;
      while (d >= 0 && ++c[d] > b[2 * d + 1]) {
        c[d] = b[2 * d];
        --d;
      }
      if (d < 0) break;
    }
  }
};

/* OpenMP transition-table kernel */
AbstractSystem build_abstraction(const VectorField& field,
                                 const AbstractionParams& params, const Box& Xp,
                                 const Box& Up,
                                 const DisturbanceModel& disturbance,
                                 AbstractionMode mode, int rk4_substeps = 100);

/* serial reference implementation kept for testing; produces a table
 * byte-identical to the parallel kernel */
AbstractSystem build_abstraction_serial(const VectorField& field,
                                        const AbstractionParams& params,
                                        const Box& Xp, const Box& Up,
                                        const DisturbanceModel& disturbance,
                                        AbstractionMode mode,
                                        int rk4_substeps = 100);

/* converts an exact-mode abstraction into a finite metric system for
 * the exhaustive checker */
FiniteMetricSystem to_metric_system(const AbstractSystem& abs);

void save_abstraction(const std::string& path, const AbstractSystem& abs);
AbstractSystem load_abstraction(const std::string& path);

/* hash over grids, parameters and mode (not the transition records);
 * controllers carry it to match their abstraction */
std::uint64_t descriptor_hash(const AbstractSystem& abs);

}  // namespace dibs

#endif
