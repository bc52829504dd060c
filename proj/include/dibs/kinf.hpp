/*
 * kinf.hpp
 *
 * Class-K-infinity gain functions restricted to linear and power forms,
 * both of which have closed-form inverses.
 */

#ifndef DIBS_KINF_HPP_
#define DIBS_KINF_HPP_

#include <cmath>
#include <stdexcept>
#include <string>

namespace dibs {

class KInf {
public:
  static KInf linear(double c) { return KInf(c, 1.0); }
  static KInf power(double c, double p) { return KInf(c, p); }
  static KInf identity() { return KInf(1.0, 1.0); }

  double operator()(double r) const {
    if (r < 0.0) throw std::invalid_argument("KInf: negative argument");
    return m_p == 1.0 ? m_c * r : m_c * std::pow(r, m_p);
  }

  double invert(double v) const {
    if (v < 0.0) throw std::invalid_argument("KInf::invert: negative argument");
    return m_p == 1.0 ? v / m_c : std::pow(v / m_c, 1.0 / m_p);
  }

  /* max of d/dz over [0,z_max]; for exponents < 1 the derivative is
   * unbounded at zero */
  double max_derivative(double z_max) const {
    if (z_max < 0.0) throw std::invalid_argument("KInf: negative interval");
    if (m_p == 1.0) return m_c;
    if (m_p < 1.0)
      throw std::domain_error("KInf: derivative unbounded on [0," +
                              std::to_string(z_max) + "] for exponent < 1");
    return m_c * m_p * std::pow(z_max, m_p - 1.0);
  }

  double coefficient() const { return m_c; }
  double exponent() const { return m_p; }
  bool is_linear() const { return m_p == 1.0; }

private:
  KInf(double c, double p) : m_c(c), m_p(p) {
    if (c <= 0.0 || p <= 0.0)
      throw std::invalid_argument("KInf: coefficient and exponent must be > 0");
  }
  double m_c;
  double m_p;
};

}  // namespace dibs

#endif
