#include "dibs/pipeline.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dibs {

double deflation_radius(const NetworkSpec& net, int tmpl) {
  const auto& t = net.templates.at(tmpl);
  const double cmin = t.v_coeffs.minCoeff();
  double r = t.lyap.alpha_low(t.eps) / std::sqrt(cmin);
  if (net.margin == SpecMargin::eps_plus_chi)
    r += template_chi(net, tmpl) * net.tau / 2.0;
  return r;
}

DisturbanceModel abstraction_disturbance(const NetworkSpec& net, int tmpl,
                                         const NetworkParamReport& rep) {
  const auto& t = net.templates.at(tmpl);
  if (t.slots.empty()) return DisturbanceModel::none_model();
  std::vector<UniformGrid> grids;
  Vec slot_eps(static_cast<int>(t.slots.size()));
  for (std::size_t s = 0; s < t.slots.size(); ++s) {
    const int src = t.slots[s].source_template;
    grids.emplace_back(net.templates[src].state_domain,
                       rep.templates[src].params.eta);
    slot_eps[static_cast<int>(s)] = net.templates[src].eps;
  }
  return DisturbanceModel::neighbor_grids_model(std::move(grids), slot_eps);
}

AbstractSpec build_abstract_spec(const NetworkSpec& net, int tmpl,
                                 const UniformGrid& grid, Objective objective) {
  const auto& t = net.templates.at(tmpl);
  const double r_target = deflation_radius(net, tmpl);
  double r_safe = r_target;
  if (net.safe_margin == SafeMargin::eta)
    r_safe = grid.eta().maxCoeff();
  else if (net.safe_margin == SafeMargin::value)
    r_safe = net.safe_margin_value;
  AbstractSpec spec;
  spec.objective = objective;
  const GeometricSet safe_set =
      t.obstacle ? GeometricSet::complement_rectangle(t.state_domain,
                                                      *t.obstacle)
                 : GeometricSet::rectangle(t.state_domain);
  spec.safe = deflate_set(safe_set, r_safe, grid, BallShape::l2);
  if (objective != Objective::safety) {
    spec.target = deflate_set(t.target, r_target, grid, BallShape::l2);
    for (std::size_t s = 0; s < spec.target.size(); ++s)
      if (spec.target[s] && !spec.safe[s]) spec.target[s] = 0;
  } else {
    spec.target.assign(grid.size(), 0);
  }
  return spec;
}

std::map<std::string, Vec> sample_initial_states(
    const NetworkSpec& net,
    const std::map<std::string, std::pair<const AbstractSystem*,
                                          const Controller*>>& runtimes,
    const std::map<std::string, Vec>& explicit_x0,
    const std::map<std::string, Box>& sample_boxes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<std::string, Vec> x0 = explicit_x0;
  for (const auto& inst : net.instances) {
    if (x0.count(inst.id)) continue;
    if (inst.x0.size() > 0) {
      x0[inst.id] = inst.x0;
      continue;
    }
    const auto& tname = net.templates[inst.tmpl].name;
    const auto bit = sample_boxes.find(tname);
    if (bit == sample_boxes.end())
      throw std::runtime_error("no initial state for " + inst.id);
    const Box& box = bit->second;
    const auto& rt = runtimes.at(inst.id);
    bool placed = false;
    for (int tries = 0; tries < 100000 && !placed; ++tries) {
      Vec cand(box.dim());
      for (int d = 0; d < box.dim(); ++d) {
        std::uniform_real_distribution<double> dist(box.lower[d],
                                                    box.upper[d]);
        cand[d] = dist(rng);
      }
      const auto q = rt.first->state_grid.quantize(cand);
      if (q && rt.second->winning[*q]) {
        x0[inst.id] = cand;
        placed = true;
      }
    }
    if (!placed)
      throw std::runtime_error(
          "could not sample a winning initial state for " + inst.id);
  }
  return x0;
}

}  // namespace dibs
