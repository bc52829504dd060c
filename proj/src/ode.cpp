#include "dibs/ode.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dibs {

Box::Box(Vec lo, Vec up) : lower(std::move(lo)), upper(std::move(up)) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("Box: dimension mismatch");
  for (int i = 0; i < lower.size(); ++i)
    if (lower[i] > upper[i])
      throw std::invalid_argument("Box: lower > upper in dimension " +
                                  std::to_string(i));
}

Box Box::scalar(double lo, double up) {
  Vec l(1), u(1);
  l[0] = lo;
  u[0] = up;
  return Box(l, u);
}

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  return true;
}

VectorField VectorField::affine(Mat A, Mat B, Mat D) {
  if (A.rows() != A.cols()) throw std::invalid_argument("affine: A not square");
  if (B.rows() != A.rows() || D.rows() != A.rows())
    throw std::invalid_argument("affine: row count mismatch");
  VectorField f;
  f.m_affine = true;
  f.m_dim_x = static_cast<int>(A.rows());
  f.m_dim_u = static_cast<int>(B.cols());
  f.m_dim_w = static_cast<int>(D.cols());
  /* induced infinity norm of A is a valid Lipschitz constant */
  f.m_lipschitz = A.cwiseAbs().rowwise().sum().maxCoeff();
  f.m_A = std::move(A);
  f.m_B = std::move(B);
  f.m_D = std::move(D);
  return f;
}

VectorField VectorField::general(int dim_x, int dim_u, int dim_w, GeneralFn fn,
                                 double lipschitz_L) {
  if (dim_x <= 0 || lipschitz_L <= 0.0)
    throw std::invalid_argument("general: bad dimensions or Lipschitz constant");
  VectorField f;
  f.m_affine = false;
  f.m_dim_x = dim_x;
  f.m_dim_u = dim_u;
  f.m_dim_w = dim_w;
  f.m_lipschitz = lipschitz_L;
  f.m_fn = std::move(fn);
  return f;
}

Vec VectorField::eval(const Vec& x, const Vec& u, const Vec& w) const {
  if (m_affine) return m_A * x + m_B * u + m_D * w;
  return m_fn(x, u, w);
}

const Mat& VectorField::A() const {
  if (!m_affine) throw std::logic_error("A(): field is not affine");
  return m_A;
}
const Mat& VectorField::B() const {
  if (!m_affine) throw std::logic_error("B(): field is not affine");
  return m_B;
}
const Mat& VectorField::D() const {
  if (!m_affine) throw std::logic_error("D(): field is not affine");
  return m_D;
}

Vec integrate_rk4(const VectorField& field, const Vec& x0, const Vec& u,
                  const Vec& w, double tau, double h) {
  if (h <= 0.0 || tau <= 0.0)
    throw std::invalid_argument("integrate_rk4: tau and h must be positive");
  const long steps = std::lround(tau / h);
  if (steps < 1 || std::abs(steps * h - tau) > 1e-9 * tau)
    throw std::invalid_argument("integrate_rk4: h does not divide tau");
  Vec x = x0;
  for (long k = 0; k < steps; ++k) {
    const Vec k1 = field.eval(x, u, w);
    const Vec k2 = field.eval(x + 0.5 * h * k1, u, w);
    const Vec k3 = field.eval(x + 0.5 * h * k2, u, w);
    const Vec k4 = field.eval(x + h * k3, u, w);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      std::ostringstream os;
      os << "integrate_rk4: non-finite state at step " << k;
      throw std::runtime_error(os.str());
    }
  }
  return x;
}

EndpointMaps affine_endpoint_maps(const VectorField& field, double tau,
                                  double h) {
  if (!field.is_affine())
    throw std::invalid_argument("affine_endpoint_maps: field is not affine");
  if (h <= 0.0) h = tau / 200.0;
  if (h > tau / 100.0) h = tau / 100.0;
  const long steps = std::lround(tau / h);
  h = tau / static_cast<double>(steps);

  const Mat& A = field.A();
  const int n = field.dim_x();
  /* fundamental system: dM/dt = A M, dN/dt = A N + B, dP/dt = A P + D */
  Mat M = Mat::Identity(n, n);
  Mat N = Mat::Zero(n, field.dim_u());
  Mat P = Mat::Zero(n, field.dim_w());
  auto rk4_mat = [&](Mat& X, const Mat& C) {
    const Mat k1 = A * X + C;
    const Mat k2 = A * (X + 0.5 * h * k1) + C;
    const Mat k3 = A * (X + 0.5 * h * k2) + C;
    const Mat k4 = A * (X + h * k3) + C;
    X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  const Mat ZB = Mat::Zero(n, n);
  for (long k = 0; k < steps; ++k) {
    rk4_mat(M, ZB);
    rk4_mat(N, field.B());
    rk4_mat(P, field.D());
  }

  EndpointMaps maps{M, N, P, tau};

  /* cross-validation against the trajectory integrator */
  std::mt19937_64 rng(0x5eedu);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    Vec x(n), u(field.dim_u()), w(field.dim_w());
    for (int i = 0; i < n; ++i) x[i] = dist(rng);
    for (int i = 0; i < u.size(); ++i) u[i] = dist(rng);
    for (int i = 0; i < w.size(); ++i) w[i] = dist(rng);
    const Vec a = maps.endpoint(x, u, w);
    const Vec b = integrate_rk4(field, x, u, w, tau, h);
    if ((a - b).lpNorm<Eigen::Infinity>() > 1e-7)
      throw std::runtime_error(
          "affine_endpoint_maps: cross-validation against RK4 failed");
  }
  return maps;
}

double bound_chi(const VectorField& field, const Box& Xp, const Box& Up,
                 const Box& Wp, std::optional<double> sample_margin,
                 int samples_per_dim) {
  if (Xp.dim() != field.dim_x())
    throw std::invalid_argument("bound_chi: state box dimension mismatch");
  if (field.is_affine()) {
    /* row-wise maximum of |a^T z| over the box z in Xp x Up x Wp is
     * attained at a vertex: |value at center| + sum |coef|*radius */
    const Vec xc = Xp.center(), xr = Xp.radius();
    const Vec uc = field.dim_u() > 0 ? Up.center() : Vec(0);
    const Vec ur = field.dim_u() > 0 ? Up.radius() : Vec(0);
    const Vec wc = field.dim_w() > 0 ? Wp.center() : Vec(0);
    const Vec wr = field.dim_w() > 0 ? Wp.radius() : Vec(0);
    double chi = 0.0;
    for (int r = 0; r < field.dim_x(); ++r) {
      double c = field.A().row(r).dot(xc);
      double s = field.A().row(r).cwiseAbs().dot(xr);
      if (field.dim_u() > 0) {
        c += field.B().row(r).dot(uc);
        s += field.B().row(r).cwiseAbs().dot(ur);
      }
      if (field.dim_w() > 0) {
        c += field.D().row(r).dot(wc);
        s += field.D().row(r).cwiseAbs().dot(wr);
      }
      chi = std::max(chi, std::abs(c) + s);
    }
    return chi;
  }
  if (!sample_margin || *sample_margin < 1.0)
    throw std::invalid_argument(
        "bound_chi: general fields require a margin factor >= 1");
  /* grid sampling over the product box */
  auto samples = [&](const Box& b) {
    std::vector<Vec> out;
    if (b.dim() == 0) {
      out.push_back(Vec(0));
      return out;
    }
    const int per = std::max(2, samples_per_dim);
    std::vector<int> idx(b.dim(), 0);
    for (;;) {
      Vec v(b.dim());
      for (int d = 0; d < b.dim(); ++d) {
        const double t = static_cast<double>(idx[d]) / (per - 1);
        v[d] = b.lower[d] + t * (b.upper[d] - b.lower[d]);
      }
      out.push_back(v);
      int d = 0;
      while (d < b.dim() && ++idx[d] == per) idx[d++] = 0;
      if (d == b.dim()) break;
    }
    return out;
  };
  double chi = 0.0;
  for (const Vec& x : samples(Xp))
    for (const Vec& u : samples(Up))
      for (const Vec& w : samples(Wp))
        chi = std::max(chi, field.eval(x, u, w).lpNorm<Eigen::Infinity>());
  return chi * (*sample_margin);
}

}  // namespace dibs
