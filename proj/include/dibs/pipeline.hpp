/*
 * pipeline.hpp
 *
 * Glue between the network model and the per-template build steps:
 * disturbance models from solved parameters and abstract specification
 * sets from the template's geometry.
 */

#ifndef DIBS_PIPELINE_HPP_
#define DIBS_PIPELINE_HPP_

#include "dibs/abstraction.hpp"
#include "dibs/lyapunov.hpp"
#include "dibs/synthesis.hpp"

namespace dibs {

/* relation-ball radius used to deflate the target: the largest
 * semi-axis of {V <= alpha_low(eps)}, plus the inter-sample excursion
 * margin chi*tau/2 when enabled */
double deflation_radius(const NetworkSpec& net, int tmpl);

/* neighbor-grid disturbance model at the solved neighbor quantizations */
DisturbanceModel abstraction_disturbance(const NetworkSpec& net, int tmpl,
                                         const NetworkParamReport& rep);

/* deflated target and safe sets on the abstraction grid */
AbstractSpec build_abstract_spec(const NetworkSpec& net, int tmpl,
                                 const UniformGrid& grid, Objective objective);

/* completes an initial-state map: instances without explicit entries
 * draw seeded samples from their template box until one quantizes into
 * the winning set */
std::map<std::string, Vec> sample_initial_states(
    const NetworkSpec& net,
    const std::map<std::string, std::pair<const AbstractSystem*,
                                          const Controller*>>& runtimes,
    const std::map<std::string, Vec>& explicit_x0,
    const std::map<std::string, Box>& sample_boxes, std::uint64_t seed);

}  // namespace dibs

#endif
