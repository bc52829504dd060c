#include "dibs/verify.hpp"

namespace dibs {

BisimInstanceReport verify_bisim_instance(const NetworkSpec& net, int tmpl,
                                          const TemplateParams& tp,
                                          double fine_factor, bool parallel) {
  const auto& t = net.templates.at(tmpl);
  BisimInstanceReport out;

  auto slot_model = [&](double eps_scale) {
    if (t.slots.empty()) return DisturbanceModel::none_model();
    std::vector<UniformGrid> grids;
    Vec slot_eps(static_cast<int>(t.slots.size()));
    for (std::size_t s = 0; s < t.slots.size(); ++s) {
      const auto& src = net.templates[t.slots[s].source_template];
      const double e = src.eps;
      grids.emplace_back(src.state_domain,
                         Vec::Constant(src.state_domain.dim(), e * eps_scale));
      slot_eps[static_cast<int>(s)] = e;
    }
    return DisturbanceModel::neighbor_grids_model(std::move(grids), slot_eps);
  };

  /* coarse side: the abstraction at the solved eta, neighbor grids at
   * the slot epsilons */
  AbstractionParams coarse = tp.params;
  const AbstractSystem abs_coarse =
      build_abstraction(t.field, coarse, t.state_domain, t.input_domain,
                        slot_model(1.0), AbstractionMode::exact,
                        net.rk4_substeps);

  /* fine side: the grid-restricted sampled-time system */
  AbstractionParams fine = tp.params;
  fine.eta = tp.params.eta * fine_factor;
  const AbstractSystem abs_fine =
      build_abstraction(t.field, fine, t.state_domain, t.input_domain,
                        slot_model(0.5), AbstractionMode::exact,
                        net.rk4_substeps);

  const FiniteMetricSystem s1 = to_metric_system(abs_fine);
  const FiniteMetricSystem s2 = to_metric_system(abs_coarse);
  out.fine_states = s1.n_states();
  out.coarse_states = s2.n_states();
  out.eta_fine = fine.eta[0];
  out.eta_coarse = coarse.eta[0];

  LyapunovRelation rel;
  rel.v_coeffs = t.v_coeffs;
  rel.alpha_low = t.lyap.alpha_low;
  rel.eps = t.eps;

  Relation r;
  for (std::size_t a = 0; a < s1.n_states(); ++a)
    for (std::size_t b = 0; b < s2.n_states(); ++b)
      if (rel.member(s1.states[a], s2.states[b]))
        r.pairs.emplace_back(static_cast<sys_index>(a),
                             static_cast<sys_index>(b));
  out.relation_pairs = r.pairs.size();

  BisimOptions opts;
  opts.parallel = parallel;
  const Vec et = template_eps_tilde(net, tmpl);
  VectorMetric metric;
  for (const auto& slot : t.slots)
    metric.block_dims.push_back(
        net.templates[slot.source_template].field.dim_x());
  out.report =
      check_disturbance_bisimulation(s1, s2, r, t.eps, et, metric, opts);
  return out;
}

}  // namespace dibs
