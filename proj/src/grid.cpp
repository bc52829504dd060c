#include "dibs/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dibs {

namespace {
constexpr std::uint64_t kCapacity = 1000000000ull; /* 1e9 points */
}

UniformGrid::UniformGrid(const Box& domain, const Vec& eta)
    : m_domain(domain), m_eta(eta) {
  const int n = domain.dim();
  if (n == 0) throw std::invalid_argument("UniformGrid: empty domain box");
  if (eta.size() != n)
    throw std::invalid_argument("UniformGrid: eta dimension mismatch");
  for (int d = 0; d < n; ++d)
    if (eta[d] <= 0.0)
      throw std::invalid_argument("UniformGrid: eta must be positive");

  m_kmin.resize(n);
  m_count.resize(n);
  m_stride.assign(n, 1);
  m_size = 1;
  for (int d = 0; d < n; ++d) {
    const double spacing = 2.0 * eta[d];
    const double tol = 1e-9 * spacing;
    const auto kmin =
        static_cast<std::int64_t>(std::ceil((domain.lower[d] - tol) / spacing));
    const auto kmax =
        static_cast<std::int64_t>(std::floor((domain.upper[d] + tol) / spacing));
    if (kmax < kmin) {
      std::ostringstream os;
      os << "UniformGrid: no lattice point in dimension " << d << " ("
         << domain.lower[d] << "," << domain.upper[d] << ") at eta " << eta[d];
      throw std::runtime_error(os.str());
    }
    m_kmin[d] = kmin;
    m_count[d] = static_cast<int>(kmax - kmin + 1);
    m_size *= static_cast<std::uint64_t>(m_count[d]);
    if (m_size > kCapacity) {
      std::ostringstream os;
      os << "UniformGrid: capacity exceeded, >= " << m_size << " points";
      throw std::runtime_error(os.str());
    }
  }
  /* row-major strides, last dimension fastest */
  for (int d = n - 2; d >= 0; --d)
    m_stride[d] = m_stride[d + 1] * static_cast<std::uint64_t>(m_count[d + 1]);
}

bool UniformGrid::covers_domain(double tol) const {
  for (int d = 0; d < dim(); ++d) {
    if (low_point(d) - m_eta[d] > m_domain.lower[d] + tol) return false;
    if (high_point(d) + m_eta[d] < m_domain.upper[d] - tol) return false;
  }
  return true;
}

Vec UniformGrid::point(grid_index idx) const {
  Vec x(dim());
  point(idx, x.data());
  return x;
}

void UniformGrid::point(grid_index idx, double* out) const {
  std::uint64_t rest = idx;
  for (int d = 0; d < dim(); ++d) {
    const std::uint64_t c = rest / m_stride[d];
    rest %= m_stride[d];
    out[d] = 2.0 * (m_kmin[d] + static_cast<std::int64_t>(c)) * m_eta[d];
  }
}

std::optional<grid_index> UniformGrid::quantize(const Vec& x) const {
  if (x.size() != dim()) return std::nullopt;
  std::uint64_t idx = 0;
  for (int d = 0; d < dim(); ++d) {
    const double spacing = 2.0 * m_eta[d];
    /* nearest multiple, half-way ties toward negative coordinates */
    auto k = static_cast<std::int64_t>(std::ceil(x[d] / spacing - 0.5));
    if (k < m_kmin[d]) k = m_kmin[d];
    const std::int64_t kmax = m_kmin[d] + m_count[d] - 1;
    if (k > kmax) k = kmax;
    if (std::abs(x[d] - 2.0 * k * m_eta[d]) > m_eta[d] * (1.0 + 1e-9))
      return std::nullopt; /* outside the eta-inflated domain */
    idx += static_cast<std::uint64_t>(k - m_kmin[d]) * m_stride[d];
  }
  return static_cast<grid_index>(idx);
}

std::vector<int> UniformGrid::coords(grid_index idx) const {
  std::vector<int> c(dim());
  std::uint64_t rest = idx;
  for (int d = 0; d < dim(); ++d) {
    c[d] = static_cast<int>(rest / m_stride[d]);
    rest %= m_stride[d];
  }
  return c;
}

grid_index UniformGrid::from_coords(const std::vector<int>& c) const {
  std::uint64_t idx = 0;
  for (int d = 0; d < dim(); ++d) {
    if (c[d] < 0 || c[d] >= m_count[d])
      throw std::out_of_range("UniformGrid::from_coords: coordinate range");
    idx += static_cast<std::uint64_t>(c[d]) * m_stride[d];
  }
  return static_cast<grid_index>(idx);
}

bool UniformGrid::operator==(const UniformGrid& o) const {
  if (dim() != o.dim()) return false;
  for (int d = 0; d < dim(); ++d) {
    if (m_kmin[d] != o.m_kmin[d] || m_count[d] != o.m_count[d]) return false;
    if (m_eta[d] != o.m_eta[d]) return false;
  }
  return true;
}

}  // namespace dibs
