/*
 * ode.hpp
 *
 * Continuous dynamics: vector fields, fixed-step RK4 integration,
 * closed-form endpoint maps for affine fields, and growth bounds.
 */

#ifndef DIBS_ODE_HPP_
#define DIBS_ODE_HPP_

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

namespace dibs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/* axis-aligned box, lower <= upper componentwise */
struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  Box(Vec lo, Vec up);
  static Box scalar(double lo, double up);

  int dim() const { return static_cast<int>(lower.size()); }
  Vec center() const { return 0.5 * (lower + upper); }
  Vec radius() const { return 0.5 * (upper - lower); }
  bool contains(const Vec& x, double tol = 0.0) const;
  bool empty() const { return lower.size() == 0; }
};

/*
 * Vector field dx/dt = f(x,u,w).  Affine fields carry explicit
 * matrices (A,B,D); general fields carry an evaluation callback.
 * lipschitz_L is a Lipschitz constant of f in x.
 */
class VectorField {
public:
  using GeneralFn = std::function<Vec(const Vec&, const Vec&, const Vec&)>;

  static VectorField affine(Mat A, Mat B, Mat D);
  static VectorField general(int dim_x, int dim_u, int dim_w, GeneralFn f,
                             double lipschitz_L);

  Vec eval(const Vec& x, const Vec& u, const Vec& w) const;

  bool is_affine() const { return m_affine; }
  int dim_x() const { return m_dim_x; }
  int dim_u() const { return m_dim_u; }
  int dim_w() const { return m_dim_w; }
  double lipschitz() const { return m_lipschitz; }

  const Mat& A() const;
  const Mat& B() const;
  const Mat& D() const;

private:
  VectorField() = default;
  bool m_affine = false;
  int m_dim_x = 0, m_dim_u = 0, m_dim_w = 0;
  double m_lipschitz = 0.0;
  Mat m_A, m_B, m_D;
  GeneralFn m_fn;
};

/*
 * Endpoint maps of an affine field over one sampling period:
 * x(tau) = M x(0) + N u + P w for u,w constant on [0,tau].
 */
struct EndpointMaps {
  Mat M;
  Mat N;
  Mat P;
  double tau = 0.0;

  Vec endpoint(const Vec& x, const Vec& u, const Vec& w) const {
    return M * x + N * u + P * w;
  }
};

/* classical RK4 endpoint with u,w held constant over [0,tau]; throws on
 * non-finite state (message carries the step index) */
Vec integrate_rk4(const VectorField& field, const Vec& x0, const Vec& u,
                  const Vec& w, double tau, double h);

/* integrates the matrix fundamental system with RK4 (h <= tau/100) and
 * cross-validates against integrate_rk4 on random points */
EndpointMaps affine_endpoint_maps(const VectorField& field, double tau,
                                  double h = -1.0);

/*
 * chi bound: max over Xp x Up x Wp of the infinity norm of f.
 * Exact for affine fields (per-row vertex maximum over the box);
 * general fields are grid-sampled and require a margin factor > 1.
 */
double bound_chi(const VectorField& field, const Box& Xp, const Box& Up,
                 const Box& Wp,
                 std::optional<double> sample_margin = std::nullopt,
                 int samples_per_dim = 16);

}  // namespace dibs

#endif
