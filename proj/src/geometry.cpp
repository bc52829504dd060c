#include "dibs/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace dibs {

GeometricSet GeometricSet::rectangle(Box b) {
  GeometricSet g;
  g.m_kind = Kind::rectangle;
  g.m_box = std::move(b);
  return g;
}

GeometricSet GeometricSet::ellipsoid(Vec center, Vec coeffs, double level) {
  if (center.size() != coeffs.size())
    throw std::invalid_argument("ellipsoid: dimension mismatch");
  if (level <= 0.0) throw std::invalid_argument("ellipsoid: level must be > 0");
  for (int i = 0; i < coeffs.size(); ++i)
    if (coeffs[i] <= 0.0)
      throw std::invalid_argument("ellipsoid: coefficients must be > 0");
  GeometricSet g;
  g.m_kind = Kind::ellipsoid;
  g.m_center = std::move(center);
  g.m_coeffs = std::move(coeffs);
  g.m_level = level;
  return g;
}

GeometricSet GeometricSet::complement_rectangle(Box within, Box hole) {
  if (within.dim() != hole.dim())
    throw std::invalid_argument("complement_rectangle: dimension mismatch");
  GeometricSet g;
  g.m_kind = Kind::complement_rectangle;
  g.m_box = std::move(within);
  g.m_hole = std::move(hole);
  return g;
}

int GeometricSet::dim() const {
  switch (m_kind) {
    case Kind::ellipsoid:
      return static_cast<int>(m_center.size());
    default:
      return m_box.dim();
  }
}

bool GeometricSet::contains(const Vec& x) const {
  switch (m_kind) {
    case Kind::rectangle:
      return m_box.contains(x);
    case Kind::ellipsoid: {
      double q = 0.0;
      for (int i = 0; i < x.size(); ++i)
        q += m_coeffs[i] * (x[i] - m_center[i]) * (x[i] - m_center[i]);
      return q <= m_level;
    }
    case Kind::complement_rectangle:
      return m_box.contains(x) && !m_hole.contains(x);
  }
  return false;
}

namespace {

/* distance from a point to an axis-aligned box, zero inside */
Vec box_gap(const Vec& q, const Box& b) {
  Vec g(q.size());
  for (int d = 0; d < q.size(); ++d)
    g[d] = std::max({b.lower[d] - q[d], q[d] - b.upper[d], 0.0});
  return g;
}

bool ball_in_box(const Vec& q, double r, const Box& b) {
  /* the support of both ball shapes in an axis direction is r */
  for (int d = 0; d < q.size(); ++d)
    if (q[d] - r < b.lower[d] || q[d] + r > b.upper[d]) return false;
  return true;
}

}  // namespace

bool GeometricSet::ball_inside(const Vec& q, double radius,
                               BallShape shape) const {
  if (radius < 0.0) throw std::invalid_argument("ball_inside: negative radius");
  switch (m_kind) {
    case Kind::rectangle:
      return ball_in_box(q, radius, m_box);
    case Kind::ellipsoid: {
      if (shape == BallShape::linf) {
        /* separable vertex maximum over the cube */
        double worst = 0.0;
        for (int d = 0; d < q.size(); ++d) {
          const double t = std::abs(q[d] - m_center[d]) + radius;
          worst += m_coeffs[d] * t * t;
        }
        return worst <= m_level;
      }
      /* l2 ball: ||d+v||_a <= ||d||_a + sqrt(a_max) r; exact when the
       * coefficients are equal */
      double qa = 0.0, amax = 0.0;
      for (int d = 0; d < q.size(); ++d) {
        qa += m_coeffs[d] * (q[d] - m_center[d]) * (q[d] - m_center[d]);
        amax = std::max(amax, m_coeffs[d]);
      }
      const double worst = std::sqrt(qa) + std::sqrt(amax) * radius;
      return worst * worst <= m_level;
    }
    case Kind::complement_rectangle: {
      if (!ball_in_box(q, radius, m_box)) return false;
      const Vec gap = box_gap(q, m_hole);
      const double dist = shape == BallShape::linf
                              ? gap.lpNorm<Eigen::Infinity>()
                              : gap.norm();
      return dist > radius;
    }
  }
  return false;
}

}  // namespace dibs
