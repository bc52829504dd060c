#include "dibs/synthesis.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dibs {

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::safety:
      return "safety";
    case Objective::reachability:
      return "reachability";
    case Objective::reach_while_avoid:
      return "reach_while_avoid";
  }
  return "?";
}

Objective objective_from_name(const std::string& name) {
  if (name == "safety") return Objective::safety;
  if (name == "reachability") return Objective::reachability;
  if (name == "reach_while_avoid") return Objective::reach_while_avoid;
  throw std::invalid_argument("unknown objective: " + name);
}

StateSet deflate_set(const GeometricSet& set, double radius,
                     const UniformGrid& grid, BallShape shape) {
  if (radius < 0.0) throw std::invalid_argument("deflate_set: negative radius");
  StateSet out(grid.size(), 0);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const Vec p = grid.point(static_cast<grid_index>(q));
    const bool in = radius == 0.0 ? set.contains(p)
                                  : set.ball_inside(p, radius, shape);
    out[q] = in ? 1 : 0;
  }
  return out;
}

std::size_t Controller::winning_count() const {
  std::size_t c = 0;
  for (auto b : winning) c += b != 0;
  return c;
}

namespace {

/* all successors of (s,u) over every disturbance record lie in Z and
 * no record is out of domain */
bool admissible(const AbstractSystem& abs, std::size_t s, std::size_t u,
                const StateSet& z) {
  const int dim = abs.state_grid.dim();
  const std::size_t nw = abs.n_dist();
  int c[8];
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t rec = abs.record(s, u, w);
    if (abs.out_of_domain(rec)) return false;
    const std::int32_t* b = abs.box_of(rec);
    for (int d = 0; d < dim; ++d) {
      if (b[2 * d] > b[2 * d + 1]) return false;
      c[d] = b[2 * d];
    }
    for (;;) {
      std::uint64_t idx = 0;
      for (int d = 0; d < dim; ++d)
        idx += static_cast<std::uint64_t>(c[d]) * abs.state_grid.stride(d);
      if (!z[idx]) return false;
      int d = dim - 1;
      while (d >= 0 && ++c[d] > b[2 * d + 1]) {
        c[d] = b[2 * d];
        --d;
      }
      if (d < 0) break;
    }
  }
  return true;
}

int first_admissible(const AbstractSystem& abs, std::size_t s,
                     const StateSet& z) {
  for (std::size_t u = 0; u < abs.n_inputs(); ++u)
    if (admissible(abs, s, u, z)) return static_cast<int>(u);
  return -1;
}

Controller solve_safety_impl(const AbstractSystem& abs, const StateSet& safe,
                             bool parallel) {
  if (safe.size() != abs.n_states())
    throw std::invalid_argument("solve_safety: safe set size mismatch");
  const auto ns = static_cast<std::int64_t>(abs.n_states());
  StateSet z = safe, next(abs.n_states(), 0);
  for (;;) {
    bool changed = false;
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 256) reduction(|| : changed)
      for (std::int64_t s = 0; s < ns; ++s) {
        const std::uint8_t keep =
            z[s] && first_admissible(abs, static_cast<std::size_t>(s), z) >= 0;
        next[s] = keep;
        if (keep != z[s]) changed = true;
      }
    } else {
      for (std::int64_t s = 0; s < ns; ++s) {
        const std::uint8_t keep =
            z[s] && first_admissible(abs, static_cast<std::size_t>(s), z) >= 0;
        next[s] = keep;
        if (keep != z[s]) changed = true;
      }
    }
    std::swap(z, next);
    if (!changed) break;
  }
  Controller ctrl;
  ctrl.objective = Objective::safety;
  ctrl.abstraction_hash = descriptor_hash(abs);
  ctrl.norm = abs.params.eps_tilde_norm;
  ctrl.winning = z;
  ctrl.hold.assign(abs.n_states(), 0);
  ctrl.choice.assign(abs.n_states(), -1);
  ctrl.rank.assign(abs.n_states(), 0);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t s = 0; s < ns; ++s)
      if (z[s]) ctrl.choice[s] = first_admissible(abs, s, z);
  } else {
    for (std::int64_t s = 0; s < ns; ++s)
      if (z[s]) ctrl.choice[s] = first_admissible(abs, s, z);
  }
  return ctrl;
}

Controller solve_reach_impl(const AbstractSystem& abs, const StateSet& target,
                            const StateSet& safe, bool parallel) {
  if (safe.size() != abs.n_states() || target.size() != abs.n_states())
    throw std::invalid_argument("solve_reach_avoid: set size mismatch");
  for (std::size_t s = 0; s < abs.n_states(); ++s)
    if (target[s] && !safe[s])
      throw std::invalid_argument(
          "solve_reach_avoid: target not contained in safe");

  const auto ns = static_cast<std::int64_t>(abs.n_states());

  /* absorbing core: target states that can stay safe forever; their
   * hold inputs come from the safety fixpoint.  Target cells outside
   * the core can still win by reaching the core. */
  const Controller safety = solve_safety_impl(abs, safe, parallel);

  Controller ctrl;
  ctrl.objective = Objective::reach_while_avoid;
  ctrl.abstraction_hash = descriptor_hash(abs);
  ctrl.norm = abs.params.eps_tilde_norm;
  ctrl.choice.assign(abs.n_states(), -1);
  ctrl.rank.assign(abs.n_states(), 0);

  StateSet core(abs.n_states(), 0);
  for (std::int64_t s = 0; s < ns; ++s)
    if (target[s] && safety.winning[s]) {
      core[s] = 1;
      ctrl.choice[s] = safety.choice[s];
    }

  StateSet z = core;
  std::vector<std::int32_t> new_choice(abs.n_states());
  int round = 0;
  for (;;) {
    ++round;
    bool changed = false;
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 256) reduction(|| : changed)
      for (std::int64_t s = 0; s < ns; ++s) {
        new_choice[s] = -1;
        if (z[s] || !safe[s]) continue;
        const int u = first_admissible(abs, static_cast<std::size_t>(s), z);
        if (u >= 0) {
          new_choice[s] = u;
          changed = true;
        }
      }
    } else {
      for (std::int64_t s = 0; s < ns; ++s) {
        new_choice[s] = -1;
        if (z[s] || !safe[s]) continue;
        const int u = first_admissible(abs, static_cast<std::size_t>(s), z);
        if (u >= 0) {
          new_choice[s] = u;
          changed = true;
        }
      }
    }
    if (!changed) break;
    for (std::int64_t s = 0; s < ns; ++s)
      if (new_choice[s] >= 0) {
        z[s] = 1;
        ctrl.choice[s] = new_choice[s];
        ctrl.rank[s] = round;
      }
  }
  ctrl.winning = z;
  /* hold layer: safety-winning states outside z keep their safety
   * inputs so the absorbing core has a total continuation */
  ctrl.hold.assign(abs.n_states(), 0);
  for (std::int64_t s = 0; s < ns; ++s)
    if (safety.winning[s] && !z[s]) {
      ctrl.hold[s] = 1;
      ctrl.choice[s] = safety.choice[s];
      ctrl.rank[s] = -1;
    }
  return ctrl;
}

}  // namespace

Controller solve_safety(const AbstractSystem& abs, const StateSet& safe) {
  return solve_safety_impl(abs, safe, true);
}
Controller solve_safety_serial(const AbstractSystem& abs,
                               const StateSet& safe) {
  return solve_safety_impl(abs, safe, false);
}

Controller solve_reach_avoid(const AbstractSystem& abs, const StateSet& target,
                             const StateSet& safe) {
  return solve_reach_impl(abs, target, safe, true);
}
Controller solve_reach_avoid_serial(const AbstractSystem& abs,
                                    const StateSet& target,
                                    const StateSet& safe) {
  return solve_reach_impl(abs, target, safe, false);
}

VerifyResult verify_controller(const AbstractSystem& abs, const Controller& ctrl,
                               const AbstractSpec& spec) {
  VerifyResult res;
  const auto fail = [&](std::size_t s, const std::string& what) {
    res.ok = false;
    res.state = static_cast<std::int64_t>(s);
    res.message = what + " at state " + std::to_string(s);
    return res;
  };
  if (ctrl.winning.size() != abs.n_states())
    return fail(0, "winning set size mismatch");

  const bool reach = ctrl.objective != Objective::safety;
  for (std::size_t s = 0; s < abs.n_states(); ++s) {
    const bool is_hold = !ctrl.hold.empty() && ctrl.hold[s];
    if (!ctrl.winning[s] && !is_hold) continue;
    if (ctrl.winning[s] && is_hold) return fail(s, "state both winning and hold");
    if (!spec.safe[s]) return fail(s, "controlled state outside safe set");
    /* absorbing states are the rank-0 winning targets */
    const bool absorbing =
        reach && ctrl.winning[s] && spec.target[s] && ctrl.rank[s] == 0;
    if (reach && ctrl.winning[s] && ctrl.rank[s] == 0 && !spec.target[s])
      return fail(s, "rank 0 outside the target");
    if (is_hold && ctrl.rank[s] != -1) return fail(s, "hold state with a rank");
    if (ctrl.choice[s] < 0) {
      if (absorbing) continue; /* terminal target state */
      return fail(s, "missing input choice");
    }
    const auto u = static_cast<std::size_t>(ctrl.choice[s]);
    if (u >= abs.n_inputs()) return fail(s, "input choice out of range");
    /* reach-progress steps must stay in the winning set; absorbing and
     * hold steps may use the whole controllable region */
    const bool progress = reach && ctrl.winning[s] && !absorbing;
    for (std::size_t w = 0; w < abs.n_dist(); ++w) {
      const std::size_t rec = abs.record(s, u, w);
      if (abs.out_of_domain(rec) || abs.box_empty(rec))
        return fail(s, "chosen input can leave the domain");
      bool ok = true;
      std::int32_t max_rank = -1;
      abs.for_each_successor(rec, [&](grid_index q) {
        if (progress ? !ctrl.winning[q] : !ctrl.controllable(q)) ok = false;
        max_rank = std::max(max_rank, ctrl.rank[q]);
      });
      if (!ok) return fail(s, "successor leaves the controllable region");
      if (progress && max_rank >= ctrl.rank[s])
        return fail(s, "rank does not decrease");
    }
  }
  return res;
}

void save_controller(const std::string& path, const Controller& ctrl) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_controller: cannot open " + path);
  os << "# dibs-controller v1\n";
  os << "# objective " << objective_name(ctrl.objective) << "\n";
  os << "# abstraction_hash " << std::hex << ctrl.abstraction_hash << std::dec
     << "\n";
  os << "# norm " << norm_name(ctrl.norm) << "\n";
  os << "# states " << ctrl.winning.size() << "\n";
  os << "state,input,rank\n";
  for (std::size_t s = 0; s < ctrl.winning.size(); ++s)
    if (ctrl.winning[s] || (!ctrl.hold.empty() && ctrl.hold[s]))
      os << s << "," << ctrl.choice[s] << "," << ctrl.rank[s] << "\n";
  if (!os) throw std::runtime_error("save_controller: write failed");
}

Controller load_controller(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_controller: cannot open " + path);
  Controller ctrl;
  std::string line;
  std::size_t n_states = 0;
  while (std::getline(is, line)) {
    if (line.rfind("# objective ", 0) == 0)
      ctrl.objective = objective_from_name(line.substr(12));
    else if (line.rfind("# abstraction_hash ", 0) == 0)
      ctrl.abstraction_hash = std::stoull(line.substr(19), nullptr, 16);
    else if (line.rfind("# norm ", 0) == 0)
      ctrl.norm = line.substr(7) == "euclid" ? NormConvention::euclidean
                                             : NormConvention::infinity;
    else if (line.rfind("# states ", 0) == 0)
      n_states = std::stoull(line.substr(9));
    else if (line == "state,input,rank")
      break;
  }
  if (n_states == 0) throw std::runtime_error("load_controller: bad header");
  ctrl.winning.assign(n_states, 0);
  ctrl.hold.assign(n_states, 0);
  ctrl.choice.assign(n_states, -1);
  ctrl.rank.assign(n_states, 0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t s;
    std::int32_t u, r;
    char c1, c2;
    if (!(ls >> s >> c1 >> u >> c2 >> r) || c1 != ',' || c2 != ',')
      throw std::runtime_error("load_controller: bad row: " + line);
    if (s >= n_states) throw std::runtime_error("load_controller: state range");
    if (r < 0)
      ctrl.hold[s] = 1;
    else
      ctrl.winning[s] = 1;
    ctrl.choice[s] = u;
    ctrl.rank[s] = r;
  }
  return ctrl;
}

}  // namespace dibs
