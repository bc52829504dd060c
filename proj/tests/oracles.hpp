/*
 * oracles.hpp
 *
 * Test-only reference computations kept independent of the library
 * implementation paths they check: a scaling-and-squaring matrix
 * exponential, naive game solvers (backward induction and strategy
 * enumeration), hand-made abstract systems and a generator of random
 * compatible finite-system networks.
 */

#ifndef DIBS_TESTS_ORACLES_HPP_
#define DIBS_TESTS_ORACLES_HPP_

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "dibs/abstraction.hpp"
#include "dibs/metric_system.hpp"
#include "dibs/synthesis.hpp"

namespace oracles {

using dibs::Mat;
using dibs::Vec;

/* matrix exponential by Taylor series with scaling and squaring,
 * truncation below 1e-16 per term */
inline Mat expm(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  int squarings = 0;
  double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  Mat As = A;
  while (norm > 0.5) {
    As *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  Mat result = Mat::Identity(n, n);
  Mat term = Mat::Identity(n, n);
  for (int k = 1; k < 40; ++k) {
    term = term * As / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/* explicit game arena: per (state, input) a set of successors; losing
 * entries are marked unusable */
struct Arena {
  int n_states = 0;
  int n_inputs = 0;
  std::vector<std::vector<std::vector<int>>> succ; /* [s][u] -> set */
  std::vector<char> usable;                        /* [s*n_inputs+u] */

  const std::vector<int>& successors(int s, int u) const { return succ[s][u]; }
  bool ok(int s, int u) const { return usable[s * n_inputs + u] != 0; }
};

/* naive backward induction for reach-while-avoid: recomputes the
 * attractor from scratch every round over plain integer sets */
struct InductionResult {
  std::vector<char> winning;
  std::vector<int> rank; /* -1 outside */
};

inline InductionResult backward_induction(const Arena& a,
                                          const std::vector<char>& target,
                                          const std::vector<char>& safe) {
  InductionResult res;
  res.winning.assign(a.n_states, 0);
  res.rank.assign(a.n_states, -1);
  for (int s = 0; s < a.n_states; ++s)
    if (target[s] && safe[s]) {
      res.winning[s] = 1;
      res.rank[s] = 0;
    }
  for (int round = 1;; ++round) {
    std::vector<int> added;
    for (int s = 0; s < a.n_states; ++s) {
      if (res.winning[s] || !safe[s]) continue;
      bool can = false;
      for (int u = 0; u < a.n_inputs && !can; ++u) {
        if (!a.ok(s, u) || a.successors(s, u).empty()) continue;
        bool all_in = true;
        for (int t : a.successors(s, u))
          if (!res.winning[t]) {
            all_in = false;
            break;
          }
        can = all_in;
      }
      if (can) added.push_back(s);
    }
    if (added.empty()) break;
    for (int s : added) {
      res.winning[s] = 1;
      res.rank[s] = round;
    }
  }
  return res;
}

/* greatest safety fixpoint over plain sets */
inline std::vector<char> safety_induction(const Arena& a,
                                          const std::vector<char>& safe) {
  std::vector<char> z = safe;
  for (;;) {
    bool changed = false;
    for (int s = 0; s < a.n_states; ++s) {
      if (!z[s]) continue;
      bool can = false;
      for (int u = 0; u < a.n_inputs && !can; ++u) {
        if (!a.ok(s, u) || a.successors(s, u).empty()) continue;
        bool all_in = true;
        for (int t : a.successors(s, u))
          if (!z[t]) all_in = false;
        can = all_in;
      }
      if (!can) {
        z[s] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return z;
}

/* brute force over memoryless strategies; only for tiny arenas.
 * A state wins iff some strategy forces reaching target through safe
 * states; min over winning strategies of the worst-case step count
 * equals the attractor rank. */
inline InductionResult strategy_enumeration(const Arena& a,
                                            const std::vector<char>& target,
                                            const std::vector<char>& safe) {
  InductionResult res;
  res.winning.assign(a.n_states, 0);
  res.rank.assign(a.n_states, -1);
  std::vector<int> strat(a.n_states, 0);
  const long total = static_cast<long>(
      std::pow(static_cast<double>(a.n_inputs), a.n_states));
  for (long code = 0; code < total; ++code) {
    long rest = code;
    for (int s = 0; s < a.n_states; ++s) {
      strat[s] = static_cast<int>(rest % a.n_inputs);
      rest /= a.n_inputs;
    }
    /* worst-case steps to target under this strategy; -1 if it can
     * fail from the state */
    std::vector<int> steps(a.n_states, -1);
    for (int s = 0; s < a.n_states; ++s)
      if (target[s] && safe[s]) steps[s] = 0;
    for (int round = 1; round <= a.n_states; ++round) {
      for (int s = 0; s < a.n_states; ++s) {
        if (steps[s] >= 0 || !safe[s]) continue;
        const int u = strat[s];
        if (!a.ok(s, u) || a.successors(s, u).empty()) continue;
        int worst = 0;
        bool all_done = true;
        for (int t : a.successors(s, u)) {
          if (steps[t] < 0) {
            all_done = false;
            break;
          }
          worst = std::max(worst, steps[t]);
        }
        if (all_done) steps[s] = worst + 1;
      }
    }
    for (int s = 0; s < a.n_states; ++s)
      if (steps[s] >= 0 &&
          (res.rank[s] < 0 || steps[s] < res.rank[s])) {
        res.winning[s] = 1;
        res.rank[s] = steps[s];
      }
  }
  return res;
}

/* hand-made abstract system on a 1-D unit grid: successor boxes are
 * explicit index intervals */
inline dibs::AbstractSystem make_arena_abstraction(const Arena& a,
                                                   double tau = 0.1) {
  using namespace dibs;
  AbstractSystem abs;
  const double eta = 0.5;
  abs.state_grid =
      UniformGrid(Box(Vec::Constant(1, 0.0),
                      Vec::Constant(1, static_cast<double>(a.n_states - 1))),
                  Vec::Constant(1, eta));
  abs.input_grid =
      UniformGrid(Box(Vec::Constant(1, 0.0),
                      Vec::Constant(1, static_cast<double>(a.n_inputs - 1))),
                  Vec::Constant(1, eta));
  if (abs.state_grid.size() != static_cast<std::size_t>(a.n_states) ||
      abs.input_grid.size() != static_cast<std::size_t>(a.n_inputs))
    throw std::logic_error("make_arena_abstraction: grid size");
  abs.disturbance = DisturbanceModel::none_model();
  abs.mode = AbstractionMode::box;
  abs.params.tau = tau;
  abs.params.eta = Vec::Constant(1, eta);
  abs.params.omega = Vec::Constant(1, eta);
  abs.params.eps = 1.0;
  abs.params.eps_tilde = Vec(0);
  abs.bounds.assign(static_cast<std::size_t>(a.n_states) * a.n_inputs * 2, 0);
  abs.flags.assign(static_cast<std::size_t>(a.n_states) * a.n_inputs, 0);
  for (int s = 0; s < a.n_states; ++s)
    for (int u = 0; u < a.n_inputs; ++u) {
      const std::size_t rec = abs.record(s, u);
      auto* b = abs.bounds.data() + rec * 2;
      if (!a.ok(s, u) || a.successors(s, u).empty()) {
        abs.flags[rec] = AbstractSystem::kOutOfDomain;
        b[0] = 0;
        b[1] = -1;
        continue;
      }
      /* successor sets must be contiguous index intervals */
      const auto& sc = a.successors(s, u);
      const int lo = *std::min_element(sc.begin(), sc.end());
      const int hi = *std::max_element(sc.begin(), sc.end());
      if (static_cast<int>(sc.size()) != hi - lo + 1)
        throw std::logic_error("make_arena_abstraction: gap in successor set");
      b[0] = lo;
      b[1] = hi;
    }
  return abs;
}

/* random arena with contiguous successor intervals */
inline Arena random_arena(std::mt19937_64& rng, int n_states, int n_inputs) {
  Arena a;
  a.n_states = n_states;
  a.n_inputs = n_inputs;
  a.succ.assign(n_states, {});
  a.usable.assign(static_cast<std::size_t>(n_states) * n_inputs, 1);
  std::uniform_int_distribution<int> st(0, n_states - 1);
  std::uniform_int_distribution<int> width(0, 2);
  std::uniform_int_distribution<int> coin(0, 9);
  for (int s = 0; s < n_states; ++s) {
    a.succ[s].resize(n_inputs);
    for (int u = 0; u < n_inputs; ++u) {
      if (coin(rng) == 0) {
        a.usable[s * n_inputs + u] = 0; /* models an out-of-domain entry */
        continue;
      }
      const int lo = st(rng);
      const int hi = std::min(n_states - 1, lo + width(rng));
      for (int t = lo; t <= hi; ++t) a.succ[s][u].push_back(t);
    }
  }
  return a;
}

/* ---- random compatible finite-system networks ---- */

struct RandomNetwork {
  dibs::NetworkTopology topology;
  std::map<std::string, dibs::FiniteMetricSystem> concrete;
  std::map<std::string, dibs::FiniteMetricSystem> abstracted;
  std::map<std::string, double> eps;
};

/* each subsystem gets 1-D states; the abstract twin shares the
 * transition structure with states perturbed within a fraction of
 * epsilon; transitions depend on the disturbance index only part of
 * the time so that identity-style relations often survive pruning */
inline RandomNetwork random_network(std::mt19937_64& rng, int n_systems) {
  using namespace dibs;
  RandomNetwork net;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> nstates(2, 4);
  std::uniform_int_distribution<int> ninputs(1, 2);

  std::vector<std::string> ids;
  for (int i = 0; i < n_systems; ++i) ids.push_back("s" + std::to_string(i));
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i < n_systems; ++i)
    for (int j = 0; j < n_systems; ++j)
      if (i != j && unit(rng) < 0.4) edges.emplace_back(ids[i], ids[j]);
  net.topology = NetworkTopology(ids, edges);

  /* state sets first (disturbance lists need the neighbors') */
  std::map<std::string, std::vector<Vec>> states, pert;
  for (const auto& id : ids) {
    const int ns = nstates(rng);
    const double eps = 0.2 + 0.8 * unit(rng);
    net.eps[id] = eps;
    std::vector<Vec> xs, ys;
    for (int k = 0; k < ns; ++k) {
      Vec x(1);
      x[0] = 3.0 * unit(rng);
      Vec y = x;
      y[0] += eps * (0.9 * unit(rng) - 0.45);
      xs.push_back(x);
      ys.push_back(y);
    }
    states[id] = xs;
    pert[id] = ys;
  }

  for (const auto& id : ids) {
    FiniteMetricSystem sys;
    sys.tau = 0.1;
    sys.states = states[id];
    const int nu = ninputs(rng);
    for (int u = 0; u < nu; ++u) sys.inputs.push_back(Vec::Constant(1, u));
    FiniteMetricSystem hat = sys;
    hat.states = pert[id];

    /* canonical product disturbance lists over the neighbors */
    std::map<std::string, FiniteMetricSystem> probe;
    for (const auto& jd : ids) {
      FiniteMetricSystem stub;
      stub.states = states[jd];
      probe[jd] = stub;
    }
    sys.disturbance_values = product_disturbances(probe, id, net.topology);
    for (auto& [jd, stub] : probe) stub.states = pert[jd];
    hat.disturbance_values = product_disturbances(probe, id, net.topology);

    const std::size_t slots =
        sys.n_states() * sys.n_inputs() * sys.n_dist();
    sys.transitions.resize(slots);
    hat.transitions.resize(slots);
    std::uniform_int_distribution<int> pick(0,
                                            static_cast<int>(sys.n_states()) - 1);
    for (std::size_t s = 0; s < sys.n_states(); ++s)
      for (std::size_t u = 0; u < sys.n_inputs(); ++u) {
        /* disturbance-sensitive rows with probability 1/2 */
        const bool sensitive = unit(rng) < 0.5;
        std::vector<dibs::sys_index> base{
            static_cast<dibs::sys_index>(pick(rng))};
        if (unit(rng) < 0.3)
          base.push_back(static_cast<dibs::sys_index>(pick(rng)));
        for (std::size_t w = 0; w < sys.n_dist(); ++w) {
          std::vector<dibs::sys_index> row = base;
          if (sensitive && w % 2 == 1) row[0] = static_cast<dibs::sys_index>(
              pick(rng));
          std::sort(row.begin(), row.end());
          row.erase(std::unique(row.begin(), row.end()), row.end());
          sys.delta(s, u, w) = row;
          hat.delta(s, u, w) = row;
        }
      }
    net.concrete[id] = std::move(sys);
    net.abstracted[id] = std::move(hat);
  }
  return net;
}

}  // namespace oracles

#endif
