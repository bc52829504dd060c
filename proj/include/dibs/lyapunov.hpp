/*
 * lyapunov.hpp
 *
 * Quantization-bound computation (the eta inequality), the feasible
 * sampling-time bound, the small-gain feasibility test and the
 * network-wide simultaneous parameter solver.
 */

#ifndef DIBS_LYAPUNOV_HPP_
#define DIBS_LYAPUNOV_HPP_

#include <map>

#include "dibs/network_spec.hpp"

namespace dibs {

/* stacked neighbor epsilons of subsystem i, index-set order */
Vec tilde_eps(const NetworkTopology& topology, const std::string& i,
              const std::map<std::string, double>& eps_map);

struct EtaBound {
  bool feasible = false;
  double eta_max = 0.0;     /* min of the two branches when feasible */
  double branch_gamma = 0.0; /* gamma^-1 branch (sign of the bracket shows
                                infeasibility) */
  double branch_alpha = 0.0; /* alpha_high^-1(alpha_low(eps)) branch */
  double bracket = 0.0;      /* lambda*alpha_low(eps) - sigma_u(omega)
                                - sigma_d(|eps_tilde|) - psi*tau */
};

EtaBound max_eta(const LyapunovSpec& spec, double tau, double eps, double omega,
                 const Vec& eps_tilde, double psi, NormConvention convention);

/* upper bound on tau guaranteeing a positive eta; +infinity when psi=0 */
double feasible_tau(const LyapunovSpec& spec, double eps, double omega,
                    const Vec& eps_tilde, double psi);

enum class SmallGainMethod { lp, spectral };

struct SmallGainNode {
  double lambda = 0.0;
  double c_alpha = 0.0;
  double c_sigma = 0.0;
};

struct SmallGainResult {
  bool feasible = false;
  Vec s;                 /* positive certificate with (-A+B)s < 0 */
  double lambda_max = 0; /* spectral radius of A^-1 B (NaN for lp) */
};

/*
 * Feasibility of (-A+B)s < 0 with A = diag(lambda_i c_alpha_i) and
 * B(i,j) = c_sigma_i on edges j -> i.  The spectral method computes the
 * spectral radius of A^-1 B (shifted power iteration, dense eigensolver
 * fallback for n <= 64); the lp method runs the monotone feasibility
 * iteration s <- A^-1 B s + 1 which converges exactly when the cone is
 * nonempty.
 */
SmallGainResult small_gain_check(const std::vector<SmallGainNode>& nodes,
                                 const NetworkTopology& topology,
                                 SmallGainMethod method);

/* samples the two small-gain constant conditions on a log grid of r */
bool validate_small_gain_constants(const LyapunovSpec& spec, double c_alpha,
                                   double c_sigma, int max_neighbors);

struct TemplateParams {
  std::string name;
  AbstractionParams params; /* eta after safety factor and snapping */
  double eta_max = 0.0;     /* bound under the configured convention */
  double eta_max_inf = 0.0;
  double eta_max_euclid = 0.0;
  double psi = 0.0;
  double chi = 0.0;
  double tau_bound = 0.0;
  double eps_tilde_norm_value = 0.0;
  EtaBound bound;
};

struct NetworkParamReport {
  bool feasible = false;
  std::string message; /* names the violating subsystem when infeasible */
  SmallGainResult small_gain_spectral;
  SmallGainResult small_gain_lp;
  std::vector<TemplateParams> templates; /* one per template */

  const TemplateParams& of(const NetworkSpec& net,
                           const std::string& instance_id) const;
};

/*
 * Simultaneous parameter solve: small-gain feasibility over the
 * instance graph, then per-template eps_tilde, psi and eta.  eta is the
 * bound shrunk by the safety factor and (optionally) snapped down so
 * that the lattice covers the state domain exactly.
 */
NetworkParamReport solve_network_params(const NetworkSpec& net);

}  // namespace dibs

#endif
