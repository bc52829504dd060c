/*
 * grid.hpp
 *
 * Uniform origin-anchored lattice over an axis-aligned box.  Lattice
 * coordinates are even multiples of the per-dimension quantization,
 * a_i = 2*k*eta_i, indexed row-major (last dimension fastest).
 */

#ifndef DIBS_GRID_HPP_
#define DIBS_GRID_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "dibs/ode.hpp"

namespace dibs {

using grid_index = std::uint32_t;

class UniformGrid {
public:
  UniformGrid() = default;

  /* all lattice points 2*k*eta inside domain; throws if any dimension is
   * empty or the total point count exceeds the capacity limit */
  UniformGrid(const Box& domain, const Vec& eta);

  int dim() const { return static_cast<int>(m_eta.size()); }
  std::uint64_t size() const { return m_size; }
  const Vec& eta() const { return m_eta; }
  const Box& domain() const { return m_domain; }

  /* true if every point of the domain box is within eta (per dimension)
   * of some lattice point */
  bool covers_domain(double tol = 1e-9) const;

  Vec point(grid_index idx) const;
  void point(grid_index idx, double* out) const;

  /* nearest lattice point, ties toward negative coordinates; x must lie
   * in the domain inflated by eta, otherwise nullopt */
  std::optional<grid_index> quantize(const Vec& x) const;

  /* per-dimension integer coordinates (offsets from the smallest k) */
  std::vector<int> coords(grid_index idx) const;
  grid_index from_coords(const std::vector<int>& c) const;

  int points_per_dim(int d) const { return m_count[d]; }
  std::int64_t k_min(int d) const { return m_kmin[d]; }
  std::uint64_t stride(int d) const { return m_stride[d]; }

  /* smallest/largest lattice coordinate per dimension */
  double low_point(int d) const { return 2.0 * m_kmin[d] * m_eta[d]; }
  double high_point(int d) const {
    return 2.0 * (m_kmin[d] + m_count[d] - 1) * m_eta[d];
  }

  bool operator==(const UniformGrid& o) const;

private:
  Box m_domain;
  Vec m_eta;
  std::vector<std::int64_t> m_kmin;
  std::vector<int> m_count;
  std::vector<std::uint64_t> m_stride;  /* row-major, last dim fastest */
  std::uint64_t m_size = 0;
};

}  // namespace dibs

#endif
