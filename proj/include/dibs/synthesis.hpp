/*
 * synthesis.hpp
 *
 * Specification deflation onto grids and fixpoint game solving over
 * abstract systems: safety (greatest fixpoint), reachability and
 * reach-while-avoid (least fixpoint with progress ranks).
 */

#ifndef DIBS_SYNTHESIS_HPP_
#define DIBS_SYNTHESIS_HPP_

#include <string>

#include "dibs/abstraction.hpp"
#include "dibs/geometry.hpp"

namespace dibs {

/* one byte per abstract state; nonzero = member */
using StateSet = std::vector<std::uint8_t>;

enum class Objective : std::uint8_t {
  safety = 0,
  reachability = 1,
  reach_while_avoid = 2
};

std::string objective_name(Objective o);
Objective objective_from_name(const std::string& name);

struct AbstractSpec {
  Objective objective = Objective::safety;
  StateSet target; /* empty for safety */
  StateSet safe;
};

/*
 * Grid points whose closed radius-ball lies inside the set, so any
 * continuous state within the radius of a marked point is inside.
 * radius 0 degrades to plain membership.  An empty result is returned
 * (not an error) when the radius eats the whole set.
 */
StateSet deflate_set(const GeometricSet& set, double radius,
                     const UniformGrid& grid, BallShape shape = BallShape::linf);

struct Controller {
  Objective objective = Objective::safety;
  std::uint64_t abstraction_hash = 0;
  NormConvention norm = NormConvention::infinity;
  StateSet winning;
  /* safety-winning states outside the reach-winning set; they carry
   * hold inputs so the closed loop stays defined after the target has
   * been reached (rank -1 in the persisted table) */
  StateSet hold;
  std::vector<std::int32_t> choice; /* -1: undefined (or terminal target) */
  std::vector<std::int32_t> rank;   /* 0 on absorbing targets and for safety */

  std::size_t winning_count() const;
  bool controllable(std::size_t s) const {
    return winning[s] || (!hold.empty() && hold[s]);
  }
};

/* greatest fixpoint Z = safe cap {q | exists u: succ(q,u) subset Z};
 * the stored input is the first admissible one in input order */
Controller solve_safety(const AbstractSystem& abs, const StateSet& safe);
Controller solve_safety_serial(const AbstractSystem& abs, const StateSet& safe);

/*
 * least fixpoint Z = target cup (safe cap {q | exists u: succ(q,u)
 * subset Z}); ranks are the entry rounds and certify progress; target
 * states get a winning-preserving input when one exists, else stay
 * terminal
 */
Controller solve_reach_avoid(const AbstractSystem& abs, const StateSet& target,
                             const StateSet& safe);
Controller solve_reach_avoid_serial(const AbstractSystem& abs,
                                    const StateSet& target,
                                    const StateSet& safe);

struct VerifyResult {
  bool ok = true;
  std::string message;
  std::int64_t state = -1;
};

/* exhaustive model check of the abstract closed loop: all successor
 * choices stay winning/safe and ranks strictly decrease outside the
 * target */
VerifyResult verify_controller(const AbstractSystem& abs, const Controller& ctrl,
                               const AbstractSpec& spec);

void save_controller(const std::string& path, const Controller& ctrl);
Controller load_controller(const std::string& path);

}  // namespace dibs

#endif
