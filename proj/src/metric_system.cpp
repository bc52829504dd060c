#include "dibs/metric_system.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dibs {

NetworkTopology::NetworkTopology(
    std::vector<std::string> index_set,
    std::vector<std::pair<std::string, std::string>> edges)
    : m_ids(std::move(index_set)), m_edges(std::move(edges)) {
  std::set<std::string> seen(m_ids.begin(), m_ids.end());
  if (seen.size() != m_ids.size())
    throw std::invalid_argument("NetworkTopology: duplicate identifiers");
  for (const auto& [j, i] : m_edges) {
    if (j == i)
      throw std::invalid_argument("NetworkTopology: self loop at " + j);
    if (!seen.count(j) || !seen.count(i))
      throw std::invalid_argument("NetworkTopology: edge endpoint (" + j +
                                  "," + i + ") not in index set");
  }
}

bool NetworkTopology::has(const std::string& id) const {
  return std::find(m_ids.begin(), m_ids.end(), id) != m_ids.end();
}

int NetworkTopology::position(const std::string& id) const {
  const auto it = std::find(m_ids.begin(), m_ids.end(), id);
  if (it == m_ids.end())
    throw std::invalid_argument("NetworkTopology: unknown id " + id);
  return static_cast<int>(it - m_ids.begin());
}

bool NetworkTopology::has_edge(const std::string& j,
                               const std::string& i) const {
  return std::find(m_edges.begin(), m_edges.end(), std::make_pair(j, i)) !=
         m_edges.end();
}

std::vector<std::string> NetworkTopology::neighbors(
    const std::string& i) const {
  position(i); /* validates */
  std::vector<std::string> out;
  for (const auto& id : m_ids)
    if (has_edge(id, i)) out.push_back(id);
  return out;
}

std::vector<std::string> NetworkTopology::neighbors_outside(
    const std::string& i, const std::vector<std::string>& subset) const {
  position(i);
  const auto inside = [&](const std::string& id) {
    return std::find(subset.begin(), subset.end(), id) != subset.end();
  };
  std::vector<std::string> out;
  for (const auto& id : m_ids)
    if (has_edge(id, i) && !(inside(id) && inside(i))) out.push_back(id);
  return out;
}

std::vector<std::string> NetworkTopology::external_neighbors(
    const std::vector<std::string>& subset) const {
  const auto inside = [&](const std::string& id) {
    return std::find(subset.begin(), subset.end(), id) != subset.end();
  };
  std::vector<std::string> out;
  for (const auto& j : m_ids) {
    if (inside(j)) continue;
    for (const auto& i : subset)
      if (has_edge(j, i)) {
        out.push_back(j);
        break;
      }
  }
  return out;
}

int VectorMetric::total_dim() const {
  int t = 0;
  for (int d : block_dims) t += d;
  return t;
}

Vec VectorMetric::eval(const Vec& w1, const Vec& w2) const {
  if (w1.size() != total_dim() || w2.size() != total_dim())
    throw std::invalid_argument("VectorMetric: dimension mismatch");
  Vec e(blocks());
  int off = 0;
  for (int b = 0; b < blocks(); ++b) {
    e[b] = (w1.segment(off, block_dims[b]) - w2.segment(off, block_dims[b]))
               .lpNorm<Eigen::Infinity>();
    off += block_dims[b];
  }
  return e;
}

void FiniteMetricSystem::validate() const {
  if (states.empty()) throw std::runtime_error("FiniteMetricSystem: no states");
  if (inputs.empty()) throw std::runtime_error("FiniteMetricSystem: no inputs");
  if (disturbance_values.empty())
    throw std::runtime_error("FiniteMetricSystem: no disturbance values");
  const std::size_t want = n_states() * n_inputs() * n_dist();
  if (transitions.size() != want)
    throw std::runtime_error("FiniteMetricSystem: transition table size");
  for (const auto& succ : transitions) {
    if (succ.empty())
      throw std::runtime_error("FiniteMetricSystem: empty transition set");
    for (sys_index t : succ)
      if (t >= n_states())
        throw std::runtime_error("FiniteMetricSystem: successor out of range");
  }
}

FiniteMetricSystem FiniteMetricSystem::undisturbed(std::vector<Vec> states,
                                                   std::vector<Vec> inputs,
                                                   double tau) {
  FiniteMetricSystem s;
  s.states = std::move(states);
  s.inputs = std::move(inputs);
  s.disturbance_values = {Vec(0)};
  s.tau = tau;
  s.transitions.resize(s.n_states() * s.n_inputs());
  return s;
}

Relation Relation::identity(std::size_t n) {
  Relation r;
  r.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    r.pairs.emplace_back(static_cast<sys_index>(i), static_cast<sys_index>(i));
  return r;
}

sys_index Composition::compose_state(const std::vector<sys_index>& parts) const {
  std::uint64_t s = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) s += parts[k] * state_stride[k];
  return static_cast<sys_index>(s);
}

std::vector<sys_index> Composition::split_state(sys_index s) const {
  std::vector<sys_index> parts(state_stride.size());
  std::uint64_t rest = s;
  for (std::size_t k = 0; k < state_stride.size(); ++k) {
    parts[k] = static_cast<sys_index>(rest / state_stride[k]);
    rest %= state_stride[k];
  }
  return parts;
}

std::vector<Vec> product_disturbances(
    const std::map<std::string, FiniteMetricSystem>& systems,
    const std::string& i, const NetworkTopology& topology) {
  const auto nbrs = topology.neighbors(i);
  if (nbrs.empty()) return {Vec(0)};
  int total = 0;
  std::vector<const FiniteMetricSystem*> src;
  for (const auto& j : nbrs) {
    const auto it = systems.find(j);
    if (it == systems.end())
      throw std::invalid_argument("product_disturbances: missing system " + j);
    src.push_back(&it->second);
    total += static_cast<int>(it->second.states[0].size());
  }
  std::vector<Vec> out;
  std::vector<std::size_t> idx(nbrs.size(), 0);
  for (;;) {
    Vec w(total);
    int off = 0;
    for (std::size_t k = 0; k < src.size(); ++k) {
      const Vec& xj = src[k]->states[idx[k]];
      w.segment(off, xj.size()) = xj;
      off += static_cast<int>(xj.size());
    }
    out.push_back(std::move(w));
    /* advance, last neighbor fastest */
    int k = static_cast<int>(idx.size()) - 1;
    while (k >= 0 && ++idx[k] == src[k]->states.size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

namespace {

bool vec_equal(const Vec& a, const Vec& b, double tol = 1e-12) {
  return a.size() == b.size() &&
         (a.size() == 0 || (a - b).lpNorm<Eigen::Infinity>() <= tol);
}

}  // namespace

Composition compose(const std::map<std::string, FiniteMetricSystem>& systems,
                    const std::vector<std::string>& subset,
                    const NetworkTopology& topology) {
  if (subset.empty()) throw std::invalid_argument("compose: empty subset");

  /* order members by index-set position */
  Composition comp;
  comp.members = subset;
  std::sort(comp.members.begin(), comp.members.end(),
            [&](const std::string& a, const std::string& b) {
              return topology.position(a) < topology.position(b);
            });

  std::vector<const FiniteMetricSystem*> mem;
  for (const auto& id : comp.members) {
    const auto it = systems.find(id);
    if (it == systems.end())
      throw std::invalid_argument("compose: missing system " + id);
    mem.push_back(&it->second);
  }

  /* compatibility: every member's disturbance list is the canonical
   * product of its neighbors' state lists, and sampling times agree */
  const double tau = mem[0]->tau;
  for (std::size_t k = 0; k < mem.size(); ++k) {
    if (mem[k]->tau != tau)
      throw std::invalid_argument("compose: mismatched tau at " +
                                  comp.members[k]);
    const auto want = product_disturbances(systems, comp.members[k], topology);
    if (want.size() != mem[k]->disturbance_values.size())
      throw std::invalid_argument(
          "compose: incompatible disturbance space at " + comp.members[k]);
    for (std::size_t v = 0; v < want.size(); ++v)
      if (!vec_equal(want[v], mem[k]->disturbance_values[v]))
        throw std::invalid_argument(
            "compose: incompatible disturbance space at " + comp.members[k]);
  }

  comp.external_neighbors = topology.external_neighbors(comp.members);
  std::vector<const FiniteMetricSystem*> ext;
  for (const auto& j : comp.external_neighbors) {
    const auto it = systems.find(j);
    if (it == systems.end())
      throw std::invalid_argument("compose: missing external system " + j);
    ext.push_back(&it->second);
  }

  const std::size_t n = mem.size();
  comp.state_stride.assign(n, 1);
  comp.input_stride.assign(n, 1);
  for (int k = static_cast<int>(n) - 2; k >= 0; --k) {
    comp.state_stride[k] = comp.state_stride[k + 1] * mem[k + 1]->n_states();
    comp.input_stride[k] = comp.input_stride[k + 1] * mem[k + 1]->n_inputs();
  }
  comp.dist_stride.assign(ext.size(), 1);
  for (int k = static_cast<int>(ext.size()) - 2; k >= 0; --k)
    comp.dist_stride[k] = comp.dist_stride[k + 1] * ext[k + 1]->n_states();

  FiniteMetricSystem& out = comp.system;
  out.tau = tau;

  auto product_vectors = [](const std::vector<const FiniteMetricSystem*>& src,
                            bool use_inputs) {
    std::vector<Vec> res;
    if (src.empty()) {
      res.push_back(Vec(0));
      return res;
    }
    std::vector<std::size_t> idx(src.size(), 0);
    int total = 0;
    for (const auto* s : src)
      total += static_cast<int>(
          (use_inputs ? s->inputs[0] : s->states[0]).size());
    for (;;) {
      Vec v(total);
      int off = 0;
      for (std::size_t k = 0; k < src.size(); ++k) {
        const Vec& part =
            use_inputs ? src[k]->inputs[idx[k]] : src[k]->states[idx[k]];
        v.segment(off, part.size()) = part;
        off += static_cast<int>(part.size());
      }
      res.push_back(std::move(v));
      int k = static_cast<int>(idx.size()) - 1;
      while (k >= 0 &&
             ++idx[k] == (use_inputs ? src[k]->inputs.size()
                                     : src[k]->states.size()))
        idx[k--] = 0;
      if (k < 0) break;
    }
    return res;
  };

  out.states = product_vectors(mem, false);
  out.inputs = product_vectors(mem, true);
  out.disturbance_values = product_vectors(ext, false);

  for (const auto* m : mem)
    comp.state_blocks.block_dims.push_back(static_cast<int>(m->states[0].size()));
  for (const auto* e : ext)
    comp.w_metric.block_dims.push_back(static_cast<int>(e->states[0].size()));

  /* per-member disturbance indexing: for each neighbor j of member i the
   * state index of j comes either from the composed state (coupling) or
   * from the composed disturbance (external) */
  struct NbrSource {
    bool coupled;
    std::size_t pos;             /* member position or external position */
    std::uint64_t stride_in_own; /* stride inside member's disturbance list */
  };
  std::vector<std::vector<NbrSource>> wiring(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto nbrs = topology.neighbors(comp.members[k]);
    std::vector<std::uint64_t> stride(nbrs.size(), 1);
    for (int q = static_cast<int>(nbrs.size()) - 2; q >= 0; --q) {
      const auto& sysq = systems.at(nbrs[q + 1]);
      stride[q] = stride[q + 1] * sysq.n_states();
    }
    for (std::size_t q = 0; q < nbrs.size(); ++q) {
      NbrSource src{};
      src.stride_in_own = stride[q];
      const auto mit =
          std::find(comp.members.begin(), comp.members.end(), nbrs[q]);
      if (mit != comp.members.end()) {
        src.coupled = true;
        src.pos = static_cast<std::size_t>(mit - comp.members.begin());
      } else {
        src.coupled = false;
        const auto eit = std::find(comp.external_neighbors.begin(),
                                   comp.external_neighbors.end(), nbrs[q]);
        src.pos = static_cast<std::size_t>(eit -
                                           comp.external_neighbors.begin());
      }
      wiring[k].push_back(src);
    }
  }

  const std::size_t NS = out.n_states(), NU = out.n_inputs(),
                    NW = out.n_dist();
  out.transitions.resize(NS * NU * NW);

  std::vector<sys_index> sparts(n), uparts(n);
  std::vector<sys_index> wparts(ext.size());
  for (std::size_t s = 0; s < NS; ++s) {
    {
      std::uint64_t rest = s;
      for (std::size_t k = 0; k < n; ++k) {
        sparts[k] = static_cast<sys_index>(rest / comp.state_stride[k]);
        rest %= comp.state_stride[k];
      }
    }
    for (std::size_t u = 0; u < NU; ++u) {
      {
        std::uint64_t rest = u;
        for (std::size_t k = 0; k < n; ++k) {
          uparts[k] = static_cast<sys_index>(rest / comp.input_stride[k]);
          rest %= comp.input_stride[k];
        }
      }
      for (std::size_t w = 0; w < NW; ++w) {
        {
          std::uint64_t rest = w;
          for (std::size_t k = 0; k < ext.size(); ++k) {
            wparts[k] = static_cast<sys_index>(rest / comp.dist_stride[k]);
            rest %= comp.dist_stride[k];
          }
        }
        /* component successor sets */
        std::vector<const std::vector<sys_index>*> succ(n);
        for (std::size_t k = 0; k < n; ++k) {
          std::uint64_t di = 0;
          for (const auto& nb : wiring[k])
            di += (nb.coupled ? sparts[nb.pos] : wparts[nb.pos]) *
                  nb.stride_in_own;
          succ[k] = &mem[k]->delta(sparts[k], uparts[k], di);
        }
        /* product of the component successor sets */
        auto& target = out.transitions[out.slot(s, u, w)];
        std::vector<std::size_t> pick(n, 0);
        for (;;) {
          std::uint64_t t = 0;
          for (std::size_t k = 0; k < n; ++k)
            t += (*succ[k])[pick[k]] * comp.state_stride[k];
          target.push_back(static_cast<sys_index>(t));
          int k = static_cast<int>(n) - 1;
          while (k >= 0 && ++pick[k] == succ[k]->size()) pick[k--] = 0;
          if (k < 0) break;
        }
      }
    }
  }
  return comp;
}

}  // namespace dibs
