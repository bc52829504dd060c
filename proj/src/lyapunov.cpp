#include "dibs/lyapunov.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace dibs {

Vec tilde_eps(const NetworkTopology& topology, const std::string& i,
              const std::map<std::string, double>& eps_map) {
  const auto nbrs = topology.neighbors(i);
  Vec et(static_cast<int>(nbrs.size()));
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const auto it = eps_map.find(nbrs[k]);
    if (it == eps_map.end())
      throw std::invalid_argument("tilde_eps: missing epsilon for neighbor " +
                                  nbrs[k]);
    et[static_cast<int>(k)] = it->second;
  }
  return et;
}

EtaBound max_eta(const LyapunovSpec& spec, double tau, double eps, double omega,
                 const Vec& eps_tilde, double psi,
                 NormConvention convention) {
  EtaBound out;
  const double et = norm_value(eps_tilde, convention);
  out.bracket = spec.lambda * spec.alpha_low(eps) - spec.sigma_u(omega) -
                spec.sigma_d(et) - psi * tau;
  out.branch_alpha = spec.alpha_high.invert(spec.alpha_low(eps));
  if (out.bracket <= 0.0) {
    out.feasible = false;
    return out;
  }
  const double decay = (1.0 - std::exp(-spec.lambda * tau)) / spec.lambda;
  out.branch_gamma = spec.gamma.invert(decay * out.bracket);
  out.eta_max = std::min(out.branch_gamma, out.branch_alpha);
  out.feasible = out.eta_max > 0.0;
  return out;
}

double feasible_tau(const LyapunovSpec& spec, double eps, double omega,
                    const Vec& eps_tilde, double psi) {
  /* the norm convention does not matter for scalar eps_tilde; for
   * vectors the caller picks by pre-stacking, so use the largest
   * (infinity) bound conservatively only through sigma_d's argument */
  const double et = eps_tilde.size() == 0
                        ? 0.0
                        : eps_tilde.lpNorm<Eigen::Infinity>();
  const double bracket =
      spec.lambda * spec.alpha_low(eps) - spec.sigma_u(omega) -
      spec.sigma_d(et);
  if (bracket <= 0.0) return 0.0; /* infeasible: no positive tau works */
  if (psi == 0.0) return std::numeric_limits<double>::infinity();
  return bracket / psi;
}

namespace {

Mat small_gain_matrix(const std::vector<SmallGainNode>& nodes,
                      const NetworkTopology& topology) {
  const auto& ids = topology.index_set();
  const int n = static_cast<int>(ids.size());
  if (static_cast<int>(nodes.size()) != n)
    throw std::invalid_argument("small_gain_check: node count mismatch");
  Mat M = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double aii = nodes[i].lambda * nodes[i].c_alpha;
    if (aii <= 0.0)
      throw std::invalid_argument("small_gain_check: singular diagonal");
    for (const auto& j : topology.neighbors(ids[i]))
      M(i, topology.position(j)) = nodes[i].c_sigma / aii;
  }
  return M;
}

}  // namespace

SmallGainResult small_gain_check(const std::vector<SmallGainNode>& nodes,
                                 const NetworkTopology& topology,
                                 SmallGainMethod method) {
  const Mat M = small_gain_matrix(nodes, topology);
  const int n = static_cast<int>(M.rows());
  SmallGainResult res;
  res.lambda_max = std::numeric_limits<double>::quiet_NaN();

  if (method == SmallGainMethod::spectral) {
    /* shifted power iteration: M + I is nonnegative with positive
     * diagonal, hence aperiodic, so the iteration converges for a
     * positive start vector even on reducible graphs */
    Vec x = Vec::Ones(n);
    double lam = 0.0, prev = -1.0;
    bool converged = false;
    for (int it = 0; it < 20000; ++it) {
      Vec y = M * x + x;
      lam = y.lpNorm<Eigen::Infinity>();
      x = y / lam;
      if (std::abs(lam - prev) <= 1e-13 * std::max(1.0, lam)) {
        converged = true;
        break;
      }
      prev = lam;
    }
    if (!converged && n <= 64) {
      Eigen::EigenSolver<Mat> es(M, false);
      double rho = 0.0;
      for (int i = 0; i < n; ++i)
        rho = std::max(rho, std::abs(es.eigenvalues()[i]));
      res.lambda_max = rho;
    } else {
      res.lambda_max = lam - 1.0;
    }
    res.feasible = res.lambda_max < 1.0;
    if (res.feasible) {
      /* s = (I - M)^-1 1 is positive and satisfies M s < s */
      res.s = (Mat::Identity(n, n) - M).partialPivLu().solve(Vec::Ones(n));
    }
    return res;
  }

  /* lp: monotone feasibility iteration for s > 0 with (-A+B)s < 0,
   * equivalently M s < s; the iterates of s <- M s + 1 increase to the
   * finite fixed point exactly when the cone is nonempty */
  Vec s = Vec::Ones(n);
  for (int it = 0; it < 200000; ++it) {
    Vec next = M * s + Vec::Ones(n);
    const double delta = (next - s).lpNorm<Eigen::Infinity>();
    s = next;
    if (s.lpNorm<Eigen::Infinity>() > 1e12) {
      res.feasible = false;
      return res;
    }
    if (delta <= 1e-12 * s.lpNorm<Eigen::Infinity>()) {
      res.feasible = true;
      res.s = s;
      return res;
    }
  }
  res.feasible = false;
  return res;
}

bool validate_small_gain_constants(const LyapunovSpec& spec, double c_alpha,
                                   double c_sigma, int max_neighbors) {
  const double m = std::max(1, max_neighbors);
  for (double r = 1e-6; r <= 1e6; r *= std::sqrt(10.0)) {
    if (spec.alpha_low(r / m) < c_alpha * r * (1.0 - 1e-9)) return false;
    if (max_neighbors > 0 && spec.sigma_d(r) > c_sigma * r * (1.0 + 1e-9))
      return false;
  }
  return true;
}

namespace {

double sigma_slope(const LyapunovSpec& spec) {
  /* linear-case constant; for power gains use the unit secant */
  return spec.sigma_d(1.0);
}

/* largest eta <= cap such that the even lattice covers [lo,hi]; for
 * symmetric domains this is hi/(2k+1) for the smallest admissible k */
double snap_down(double lo, double hi, double cap) {
  if (std::abs(lo + hi) > 1e-12 * std::max(std::abs(lo), std::abs(hi)))
    return cap; /* asymmetric: covered sub-box handling applies instead */
  const double a = hi;
  if (a <= 0.0) return cap;
  const double k = std::ceil((a / cap - 1.0) / 2.0);
  return a / (2.0 * std::max(0.0, k) + 1.0);
}

}  // namespace

const TemplateParams& NetworkParamReport::of(
    const NetworkSpec& net, const std::string& instance_id) const {
  return templates.at(static_cast<std::size_t>(net.instance(instance_id).tmpl));
}

NetworkParamReport solve_network_params(const NetworkSpec& net) {
  net.validate();
  NetworkParamReport rep;

  const NetworkTopology topo = net.topology();
  std::vector<SmallGainNode> nodes;
  for (const auto& inst : net.instances) {
    const auto& t = net.templates[inst.tmpl];
    SmallGainNode nd;
    nd.lambda = t.lyap.lambda;
    nd.c_alpha = t.c_alpha;
    nd.c_sigma = t.c_sigma ? *t.c_sigma : sigma_slope(t.lyap);
    nodes.push_back(nd);
  }
  for (std::size_t ti = 0; ti < net.templates.size(); ++ti) {
    const auto& t = net.templates[ti];
    const double cs = t.c_sigma ? *t.c_sigma : sigma_slope(t.lyap);
    if (!validate_small_gain_constants(t.lyap, t.c_alpha, cs,
                                       static_cast<int>(t.slots.size()))) {
      rep.feasible = false;
      rep.message = "small-gain constants fail conditions (1)-(2) for " + t.name;
      return rep;
    }
  }

  if (!net.instances.empty()) {
    rep.small_gain_spectral =
        small_gain_check(nodes, topo, SmallGainMethod::spectral);
    rep.small_gain_lp = small_gain_check(nodes, topo, SmallGainMethod::lp);
    if (rep.small_gain_spectral.feasible != rep.small_gain_lp.feasible) {
      rep.feasible = false;
      rep.message = "small-gain methods disagree (spectral radius near 1)";
      return rep;
    }
    if (!rep.small_gain_spectral.feasible) {
      rep.feasible = false;
      std::ostringstream os;
      os << "small-gain condition infeasible: lambda_max(A^-1 B) = "
         << rep.small_gain_spectral.lambda_max << " >= 1";
      rep.message = os.str();
      return rep;
    }
  }

  for (std::size_t ti = 0; ti < net.templates.size(); ++ti) {
    const auto& t = net.templates[ti];
    TemplateParams tp;
    tp.name = t.name;
    const Vec et = template_eps_tilde(net, static_cast<int>(ti));
    tp.psi = compute_psi_template(net, static_cast<int>(ti));
    tp.chi = template_chi(net, static_cast<int>(ti));

    const EtaBound b_inf =
        max_eta(t.lyap, net.tau, t.eps, t.omega, et, tp.psi,
                NormConvention::infinity);
    const EtaBound b_euc =
        max_eta(t.lyap, net.tau, t.eps, t.omega, et, tp.psi,
                NormConvention::euclidean);
    tp.eta_max_inf = b_inf.feasible ? b_inf.eta_max : 0.0;
    tp.eta_max_euclid = b_euc.feasible ? b_euc.eta_max : 0.0;
    tp.bound = net.eps_tilde_norm == NormConvention::infinity ? b_inf : b_euc;
    tp.eta_max = tp.bound.feasible ? tp.bound.eta_max : 0.0;
    tp.eps_tilde_norm_value = norm_value(et, net.eps_tilde_norm);
    tp.tau_bound = feasible_tau(t.lyap, t.eps, t.omega, et, tp.psi);

    if (!tp.bound.feasible) {
      rep.feasible = false;
      std::ostringstream os;
      os << "no positive eta for " << t.name << ": bracket "
         << tp.bound.bracket << " (lambda*alpha_low(eps) - sigma_u(omega) - "
            "sigma_d(|eps_tilde|) - psi*tau) is nonpositive";
      rep.message = os.str();
      rep.templates.push_back(tp);
      return rep;
    }

    const double capped = net.eta_safety * tp.eta_max;
    const int n = t.field.dim_x();
    tp.params.eta = Vec::Constant(n, capped);
    if (net.snap_eta)
      for (int d = 0; d < n; ++d)
        tp.params.eta[d] = snap_down(t.state_domain.lower[d],
                                     t.state_domain.upper[d], capped);
    tp.params.omega = Vec::Constant(t.field.dim_u(), t.omega);
    tp.params.tau = net.tau;
    tp.params.eps = t.eps;
    tp.params.eps_tilde = et;
    tp.params.eps_tilde_norm = net.eps_tilde_norm;
    tp.params.validate();
    rep.templates.push_back(tp);
  }
  rep.feasible = true;
  return rep;
}

}  // namespace dibs
