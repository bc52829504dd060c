/*
 * geometry.hpp
 *
 * Geometric specification sets (targets, obstacles) with exact
 * ball-containment tests used for margin deflation.
 */

#ifndef DIBS_GEOMETRY_HPP_
#define DIBS_GEOMETRY_HPP_

#include "dibs/ode.hpp"

namespace dibs {

/* shape of the deflation ball; l2 matches the sublevel sets of the
 * bundled quadratic-form-square-root Lyapunov functions */
enum class BallShape { linf, l2 };

class GeometricSet {
public:
  enum class Kind { rectangle, ellipsoid, complement_rectangle };

  static GeometricSet rectangle(Box b);
  /* {x : sum_k coeffs_k (x_k - center_k)^2 <= level} */
  static GeometricSet ellipsoid(Vec center, Vec coeffs, double level);
  /* within \ hole */
  static GeometricSet complement_rectangle(Box within, Box hole);

  Kind kind() const { return m_kind; }
  int dim() const;

  bool contains(const Vec& x) const;

  /* true iff the closed ball of the given radius around q lies inside
   * the set; exact for all three kinds */
  bool ball_inside(const Vec& q, double radius, BallShape shape) const;

  const Box& box() const { return m_box; }
  const Box& hole() const { return m_hole; }
  const Vec& center() const { return m_center; }
  const Vec& coeffs() const { return m_coeffs; }
  double level() const { return m_level; }

private:
  Kind m_kind = Kind::rectangle;
  Box m_box;
  Box m_hole;
  Vec m_center;
  Vec m_coeffs;
  double m_level = 0.0;
};

}  // namespace dibs

#endif
