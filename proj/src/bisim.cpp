#include "dibs/bisim.hpp"

#include <omp.h>

#include <algorithm>
#include <stdexcept>

namespace dibs {

namespace {

struct PairMembership {
  std::size_t n2;
  std::vector<std::uint64_t> bits;

  PairMembership(std::size_t n1, std::size_t n2_) : n2(n2_) {
    const std::uint64_t total = static_cast<std::uint64_t>(n1) * n2;
    if (total > (1ull << 33))
      throw std::runtime_error("bisim: relation universe too large");
    bits.assign((total + 63) / 64, 0);
  }
  void set(sys_index a, sys_index b) {
    const std::uint64_t k = static_cast<std::uint64_t>(a) * n2 + b;
    bits[k >> 6] |= (1ull << (k & 63));
  }
  bool get(sys_index a, sys_index b) const {
    const std::uint64_t k = static_cast<std::uint64_t>(a) * n2 + b;
    return bits[k >> 6] & (1ull << (k & 63));
  }
};

struct CheckContext {
  const FiniteMetricSystem& s1;
  const FiniteMetricSystem& s2;
  const PairMembership& member;
  std::vector<std::pair<int, int>> nu_pairs; /* admissible (d1,d2) */
};

/* all successor pairs of (delta1, delta2) must be related */
bool sets_related(const CheckContext& ctx, const std::vector<sys_index>& a,
                  const std::vector<sys_index>& b, int* bad1, int* bad2) {
  for (sys_index s1p : a)
    for (sys_index s2p : b)
      if (!ctx.member.get(s1p, s2p)) {
        if (bad1) *bad1 = static_cast<int>(s1p);
        if (bad2) *bad2 = static_cast<int>(s2p);
        return false;
      }
  return true;
}

bool input_match(const CheckContext& ctx, sys_index x1, sys_index x2,
                 std::size_t mu1, std::size_t mu2, BisimViolation* wit) {
  for (const auto& [d1, d2] : ctx.nu_pairs) {
    int b1 = -1, b2 = -1;
    if (!sets_related(ctx, ctx.s1.delta(x1, mu1, d1), ctx.s2.delta(x2, mu2, d2),
                      &b1, &b2)) {
      if (wit) {
        wit->nu1 = d1;
        wit->nu2 = d2;
        wit->succ1 = b1;
        wit->succ2 = b2;
      }
      return false;
    }
  }
  return true;
}

void check_pair(const CheckContext& ctx, sys_index x1, sys_index x2, double eps,
                double slack, std::vector<BisimViolation>& out) {
  /* (a) state distance bound */
  if (FiniteMetricSystem::metric(ctx.s1.states[x1], ctx.s2.states[x2]) >
      eps + slack) {
    out.push_back({'a', x1, x2, -1, -1, -1, -1, -1});
  }
  /* (b) every S1 input has a matching S2 input */
  for (std::size_t mu1 = 0; mu1 < ctx.s1.n_inputs(); ++mu1) {
    bool matched = false;
    for (std::size_t mu2 = 0; mu2 < ctx.s2.n_inputs() && !matched; ++mu2)
      matched = input_match(ctx, x1, x2, mu1, mu2, nullptr);
    if (!matched) {
      BisimViolation v{'b', x1, x2, static_cast<int>(mu1), -1, -1, -1, -1};
      input_match(ctx, x1, x2, mu1, 0, &v); /* witness vs first candidate */
      out.push_back(v);
    }
  }
  /* (c) every S2 input has a matching S1 input */
  for (std::size_t mu2 = 0; mu2 < ctx.s2.n_inputs(); ++mu2) {
    bool matched = false;
    for (std::size_t mu1 = 0; mu1 < ctx.s1.n_inputs() && !matched; ++mu1)
      matched = input_match(ctx, x1, x2, mu1, mu2, nullptr);
    if (!matched) {
      BisimViolation v{'c', x1, x2, static_cast<int>(mu2), -1, -1, -1, -1};
      input_match(ctx, x1, x2, 0, mu2, &v);
      out.push_back(v);
    }
  }
}

BisimReport run_check(const FiniteMetricSystem& s1,
                      const FiniteMetricSystem& s2, const Relation& r,
                      double eps, const Vec& eps_tilde, const VectorMetric& e,
                      const BisimOptions& opts, bool parallel) {
  if (s1.states.empty() || s2.states.empty())
    throw std::invalid_argument("bisim: empty system");
  if (s1.states[0].size() != s2.states[0].size())
    throw std::invalid_argument("bisim: state dimension mismatch");
  if (eps_tilde.size() != e.blocks())
    throw std::invalid_argument("bisim: eps_tilde does not match metric blocks");
  if (s1.disturbance_values[0].size() != e.total_dim() ||
      s2.disturbance_values[0].size() != e.total_dim())
    throw std::invalid_argument(
        "bisim: disturbance vectors not decomposable by the metric");

  BisimReport rep;
  if (r.empty()) {
    rep.holds = true;
    rep.vacuous_empty = true;
    return rep;
  }

  PairMembership member(s1.n_states(), s2.n_states());
  for (const auto& [a, b] : r.pairs) {
    if (a >= s1.n_states() || b >= s2.n_states())
      throw std::invalid_argument("bisim: relation index out of range");
    member.set(a, b);
  }

  CheckContext ctx{s1, s2, member, {}};
  const double slack = opts.eps_slack;
  for (std::size_t d1 = 0; d1 < s1.n_dist(); ++d1)
    for (std::size_t d2 = 0; d2 < s2.n_dist(); ++d2) {
      const Vec ev =
          e.eval(s1.disturbance_values[d1], s2.disturbance_values[d2]);
      bool ok = true;
      for (int b = 0; b < ev.size(); ++b)
        if (ev[b] > eps_tilde[b] + slack) {
          ok = false;
          break;
        }
      if (ok) ctx.nu_pairs.emplace_back(static_cast<int>(d1),
                                        static_cast<int>(d2));
    }

  const auto npairs = static_cast<std::int64_t>(r.pairs.size());
  std::vector<std::vector<BisimViolation>> local(
      parallel ? static_cast<std::size_t>(omp_get_max_threads()) : 1);

  if (parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t k = 0; k < npairs; ++k) {
      auto& sink = local[static_cast<std::size_t>(omp_get_thread_num())];
      check_pair(ctx, r.pairs[k].first, r.pairs[k].second, eps, slack, sink);
    }
  } else {
    for (std::int64_t k = 0; k < npairs; ++k)
      check_pair(ctx, r.pairs[k].first, r.pairs[k].second, eps, slack,
                 local[0]);
  }

  for (auto& l : local)
    rep.violations.insert(rep.violations.end(), l.begin(), l.end());
  std::sort(rep.violations.begin(), rep.violations.end(),
            [](const BisimViolation& a, const BisimViolation& b) {
              return std::tie(a.x1, a.x2, a.condition, a.mu) <
                     std::tie(b.x1, b.x2, b.condition, b.mu);
            });
  if (rep.violations.size() > opts.max_violations)
    rep.violations.resize(opts.max_violations);
  rep.pairs_checked = r.pairs.size();
  rep.holds = rep.violations.empty();
  return rep;
}

}  // namespace

BisimReport check_disturbance_bisimulation(const FiniteMetricSystem& s1,
                                           const FiniteMetricSystem& s2,
                                           const Relation& r, double eps,
                                           const Vec& eps_tilde,
                                           const VectorMetric& e,
                                           const BisimOptions& opts) {
  return run_check(s1, s2, r, eps, eps_tilde, e, opts, opts.parallel);
}

BisimReport check_disturbance_bisimulation_serial(const FiniteMetricSystem& s1,
                                                  const FiniteMetricSystem& s2,
                                                  const Relation& r, double eps,
                                                  const Vec& eps_tilde,
                                                  const VectorMetric& e,
                                                  const BisimOptions& opts) {
  return run_check(s1, s2, r, eps, eps_tilde, e, opts, false);
}

ProductRelationResult product_relation(
    const std::map<std::string, Relation>& relations,
    const std::map<std::string, double>& eps, const Composition& c1,
    const Composition& c2, const NetworkTopology& topology) {
  if (c1.members != c2.members)
    throw std::invalid_argument("product_relation: member mismatch");
  ProductRelationResult res;

  std::vector<const Relation*> rel;
  for (const auto& id : c1.members) {
    const auto it = relations.find(id);
    if (it == relations.end())
      throw std::invalid_argument("product_relation: missing relation " + id);
    rel.push_back(&it->second);
    res.eps = std::max(res.eps, eps.at(id));
  }

  if (topology.external_neighbors(c1.members) != c1.external_neighbors)
    throw std::invalid_argument(
        "product_relation: composition does not match the topology");
  res.eps_tilde = Vec(static_cast<int>(c1.external_neighbors.size()));
  for (std::size_t k = 0; k < c1.external_neighbors.size(); ++k) {
    const auto it = eps.find(c1.external_neighbors[k]);
    if (it == eps.end())
      throw std::invalid_argument("product_relation: missing epsilon for " +
                                  c1.external_neighbors[k]);
    res.eps_tilde[static_cast<int>(k)] = it->second;
  }

  /* componentwise membership (all combinations of component pairs) */
  std::vector<std::size_t> pick(rel.size(), 0);
  for (;;) {
    std::uint64_t a = 0, b = 0;
    for (std::size_t k = 0; k < rel.size(); ++k) {
      a += rel[k]->pairs[pick[k]].first * c1.state_stride[k];
      b += rel[k]->pairs[pick[k]].second * c2.state_stride[k];
    }
    res.relation.pairs.emplace_back(static_cast<sys_index>(a),
                                    static_cast<sys_index>(b));
    int k = static_cast<int>(rel.size()) - 1;
    while (k >= 0 && ++pick[k] == rel[k]->pairs.size()) pick[k--] = 0;
    if (k < 0) break;
  }
  std::sort(res.relation.pairs.begin(), res.relation.pairs.end());
  return res;
}

}  // namespace dibs
