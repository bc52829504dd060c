#include "dibs/abstraction.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dibs {

DisturbanceModel DisturbanceModel::none_model() {
  DisturbanceModel m;
  m.kind = Kind::none;
  return m;
}

DisturbanceModel DisturbanceModel::neighbor_grids_model(
    std::vector<UniformGrid> grids, const Vec& slot_eps) {
  if (static_cast<int>(grids.size()) != slot_eps.size())
    throw std::invalid_argument("neighbor model: eps per slot required");
  for (std::size_t k = 0; k < grids.size(); ++k)
    for (int d = 0; d < grids[k].dim(); ++d)
      if (grids[k].eta()[d] > slot_eps[static_cast<int>(k)] * (1.0 + 1e-12))
        throw std::invalid_argument(
            "neighbor model: eta exceeds eps for neighbor slot " +
            std::to_string(k));
  DisturbanceModel m;
  m.kind = Kind::neighbor_grids;
  for (const auto& g : grids) m.metric.block_dims.push_back(g.dim());
  m.slot_grids = std::move(grids);
  return m;
}

DisturbanceModel DisturbanceModel::points_model(std::vector<Vec> points,
                                                VectorMetric metric) {
  if (points.empty())
    throw std::invalid_argument("points model: empty point list");
  for (const auto& p : points)
    if (p.size() != metric.total_dim())
      throw std::invalid_argument("points model: metric/point dim mismatch");
  DisturbanceModel m;
  m.kind = Kind::points;
  m.explicit_points = std::move(points);
  m.metric = std::move(metric);
  return m;
}

int DisturbanceModel::dim() const {
  switch (kind) {
    case Kind::none:
      return 0;
    case Kind::points:
      return metric.total_dim();
    case Kind::neighbor_grids: {
      int d = 0;
      for (const auto& g : slot_grids) d += g.dim();
      return d;
    }
  }
  return 0;
}

Box DisturbanceModel::hull() const {
  const int n = dim();
  if (n == 0) return Box(Vec::Zero(0), Vec::Zero(0));
  Vec lo(n), hi(n);
  if (kind == Kind::neighbor_grids) {
    /* the hull must cover every continuous neighbor state, not only the
     * lattice, so it is the product of the neighbor domains */
    int off = 0;
    for (const auto& g : slot_grids) {
      for (int d = 0; d < g.dim(); ++d) {
        lo[off + d] = g.domain().lower[d];
        hi[off + d] = g.domain().upper[d];
      }
      off += g.dim();
    }
  } else {
    lo = explicit_points[0];
    hi = explicit_points[0];
    for (const auto& p : explicit_points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  return Box(lo, hi);
}

std::size_t DisturbanceModel::count() const {
  switch (kind) {
    case Kind::none:
      return 1;
    case Kind::points:
      return explicit_points.size();
    case Kind::neighbor_grids: {
      std::size_t c = 1;
      for (const auto& g : slot_grids) c *= g.size();
      return c;
    }
  }
  return 1;
}

std::vector<Vec> DisturbanceModel::enumerate() const {
  std::vector<Vec> out;
  if (kind == Kind::none) {
    out.push_back(Vec::Zero(0));
    return out;
  }
  if (kind == Kind::points) return explicit_points;
  std::vector<std::size_t> idx(slot_grids.size(), 0);
  const int n = dim();
  for (;;) {
    Vec w(n);
    int off = 0;
    for (std::size_t k = 0; k < slot_grids.size(); ++k) {
      const Vec p = slot_grids[k].point(static_cast<grid_index>(idx[k]));
      w.segment(off, p.size()) = p;
      off += static_cast<int>(p.size());
    }
    out.push_back(std::move(w));
    int k = static_cast<int>(idx.size()) - 1;
    while (k >= 0 && ++idx[k] == slot_grids[k].size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

std::size_t DisturbanceModel::index_of(const Vec& w) const {
  if (kind == Kind::none) return 0;
  if (kind == Kind::points) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < explicit_points.size(); ++k) {
      const double d = (explicit_points[k] - w).lpNorm<Eigen::Infinity>();
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    return best;
  }
  std::size_t idx = 0;
  int off = 0;
  for (const auto& g : slot_grids) {
    const auto q = g.quantize(w.segment(off, g.dim()));
    if (!q)
      throw std::runtime_error(
          "DisturbanceModel: value outside the neighbor grid domain");
    idx = idx * g.size() + *q;
    off += g.dim();
  }
  return idx;
}

DisturbanceModel neighbor_disturbance_model(
    const NetworkTopology& topology, const std::string& i,
    const std::map<std::string, UniformGrid>& grids,
    const std::map<std::string, double>& eps_map) {
  const auto nbrs = topology.neighbors(i);
  if (nbrs.empty()) return DisturbanceModel::none_model();
  std::vector<UniformGrid> slot_grids;
  Vec slot_eps(static_cast<int>(nbrs.size()));
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const auto git = grids.find(nbrs[k]);
    const auto eit = eps_map.find(nbrs[k]);
    if (git == grids.end() || eit == eps_map.end())
      throw std::invalid_argument("neighbor_disturbance_model: missing data for " +
                                  nbrs[k]);
    slot_grids.push_back(git->second);
    slot_eps[static_cast<int>(k)] = eit->second;
  }
  return DisturbanceModel::neighbor_grids_model(std::move(slot_grids), slot_eps);
}

bool relation_membership(const LyapunovRelation& rel, const Vec& q,
                         const Vec& q_hat) {
  if (q.size() != q_hat.size())
    throw std::invalid_argument("relation_membership: dimension mismatch");
  return rel.member(q, q_hat);
}

bool AbstractSystem::box_empty(std::size_t rec) const {
  const std::int32_t* b = box_of(rec);
  for (int d = 0; d < state_grid.dim(); ++d)
    if (b[2 * d] > b[2 * d + 1]) return true;
  return false;
}

std::uint64_t AbstractSystem::box_count(std::size_t rec) const {
  if (box_empty(rec)) return 0;
  const std::int32_t* b = box_of(rec);
  std::uint64_t c = 1;
  for (int d = 0; d < state_grid.dim(); ++d)
    c *= static_cast<std::uint64_t>(b[2 * d + 1] - b[2 * d] + 1);
  return c;
}

namespace {

struct BuildContext {
  const UniformGrid* sg = nullptr;
  int dim = 0;
  Vec eta;
  Vec half;   /* eta + rho (box mode) or eta (exact mode) */
  Vec cov_lo; /* effective covered domain */
  Vec cov_hi;
};

/* endpoint ball [z-half, z+half]: index bounds of the covered grid
 * points and the out-of-domain flag */
void emit_record(const BuildContext& c, const double* z, std::int32_t* out,
                 std::uint8_t* flag) {
  std::uint8_t f = 0;
  bool empty = false;
  for (int d = 0; d < c.dim; ++d) {
    const double tol = 1e-9 * c.eta[d];
    const double lo = z[d] - c.half[d];
    const double hi = z[d] + c.half[d];
    if (lo < c.cov_lo[d] - tol || hi > c.cov_hi[d] + tol)
      f |= AbstractSystem::kOutOfDomain;
    const double spacing = 2.0 * c.eta[d];
    auto klo = static_cast<std::int64_t>(std::ceil((lo - tol) / spacing));
    auto khi = static_cast<std::int64_t>(std::floor((hi + tol) / spacing));
    const std::int64_t kmin = c.sg->k_min(d);
    const std::int64_t kmax = kmin + c.sg->points_per_dim(d) - 1;
    klo = std::max(klo, kmin);
    khi = std::min(khi, kmax);
    if (klo > khi) empty = true;
    out[2 * d] = static_cast<std::int32_t>(klo - kmin);
    out[2 * d + 1] = static_cast<std::int32_t>(khi - kmin);
  }
  if (empty) {
    f |= AbstractSystem::kOutOfDomain;
    for (int d = 0; d < c.dim; ++d) {
      out[2 * d] = 0;
      out[2 * d + 1] = -1;
    }
  }
  *flag = f;
}

AbstractSystem build_impl(const VectorField& field,
                          const AbstractionParams& params, const Box& Xp,
                          const Box& Up, const DisturbanceModel& disturbance,
                          AbstractionMode mode, int rk4_substeps,
                          bool parallel) {
  params.validate();
  if (field.dim_x() != Xp.dim())
    throw std::invalid_argument("build_abstraction: state box dimension");
  if (disturbance.dim() != field.dim_w())
    throw std::invalid_argument("build_abstraction: disturbance dimension");
  if (mode == AbstractionMode::box && !field.is_affine())
    throw std::invalid_argument(
        "build_abstraction: box mode requires an affine field");

  AbstractSystem abs;
  abs.state_grid = UniformGrid(Xp, params.eta);
  abs.input_grid = field.dim_u() > 0
                       ? UniformGrid(Up, params.omega)
                       : UniformGrid(Box::scalar(0.0, 0.0), Vec::Ones(1));
  abs.disturbance = disturbance;
  abs.mode = mode;
  abs.params = params;

  BuildContext ctx;
  ctx.sg = &abs.state_grid;
  ctx.dim = abs.state_grid.dim();
  ctx.eta = params.eta;
  ctx.cov_lo = Vec(ctx.dim);
  ctx.cov_hi = Vec(ctx.dim);
  for (int d = 0; d < ctx.dim; ++d) {
    ctx.cov_lo[d] =
        std::max(Xp.lower[d], abs.state_grid.low_point(d) - params.eta[d]);
    ctx.cov_hi[d] =
        std::min(Xp.upper[d], abs.state_grid.high_point(d) + params.eta[d]);
  }

  const std::size_t NS = abs.n_states();
  const std::size_t NU = abs.n_inputs();
  const std::size_t NW = mode == AbstractionMode::exact ? disturbance.count() : 1;
  const std::uint64_t total = static_cast<std::uint64_t>(NS) * NU * NW;
  if (total > 200000000ull) {
    std::ostringstream os;
    os << "build_abstraction: " << total << " records exceed capacity";
    throw std::runtime_error(os.str());
  }
  abs.bounds.assign(total * 2 * ctx.dim, 0);
  abs.flags.assign(total, 0);

  const bool has_u = field.dim_u() > 0;

  if (mode == AbstractionMode::box) {
    const EndpointMaps maps = affine_endpoint_maps(field, params.tau);
    const Box wbox = disturbance.hull();
    const Vec wc = wbox.dim() > 0 ? wbox.center() : Vec::Zero(0);
    const Vec wr = wbox.dim() > 0 ? wbox.radius() : Vec::Zero(0);
    Vec rho = Vec::Zero(ctx.dim);
    if (wbox.dim() > 0) rho = maps.P.cwiseAbs() * wr;
    ctx.half = params.eta + rho;
    /* disturbance-independent part of the endpoint */
    const Vec pw = wbox.dim() > 0 ? Vec(maps.P * wc) : Vec::Zero(ctx.dim);

    /* flat kernel: the input contribution is precomputed per input,
     * the state part runs with stack buffers */
    const int dim = ctx.dim;
    const int du = field.dim_u();
    std::vector<double> nu_table(NU * dim);
    for (std::size_t u = 0; u < NU; ++u) {
      double ubuf[8] = {0};
      if (has_u) abs.input_grid.point(static_cast<grid_index>(u), ubuf);
      for (int r = 0; r < dim; ++r) {
        double acc = pw[r];
        for (int c = 0; c < du; ++c) acc += maps.N(r, c) * ubuf[c];
        nu_table[u * dim + r] = acc;
      }
    }
    std::vector<double> mrow(dim * dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) mrow[r * dim + c] = maps.M(r, c);

    auto state_rows = [&](std::size_t s0, std::size_t s1) {
      double xbuf[8], zbuf[8];
      for (std::size_t s = s0; s < s1; ++s) {
        abs.state_grid.point(static_cast<grid_index>(s), xbuf);
        for (std::size_t u = 0; u < NU; ++u) {
          const double* nu = nu_table.data() + u * dim;
          for (int r = 0; r < dim; ++r) {
            double acc = nu[r];
            const double* mr = mrow.data() + r * dim;
            for (int c = 0; c < dim; ++c) acc += mr[c] * xbuf[c];
            zbuf[r] = acc;
          }
          const std::size_t rec = s * NU + u;
          emit_record(ctx, zbuf, abs.bounds.data() + rec * 2 * dim,
                      &abs.flags[rec]);
        }
      }
    };

    if (parallel) {
#pragma omp parallel for schedule(static)
      for (std::int64_t s = 0; s < static_cast<std::int64_t>(NS); ++s)
        state_rows(static_cast<std::size_t>(s), static_cast<std::size_t>(s) + 1);
    } else {
      state_rows(0, NS);
    }
    return abs;
  }

  /* exact mode */
  ctx.half = params.eta;
  const std::vector<Vec> wvals = disturbance.enumerate();
  const double h = params.tau / rk4_substeps;
  const Vec u_zero = Vec::Zero(field.dim_u());
  const Vec w_zero = Vec::Zero(field.dim_w());

  auto record_for = [&](std::size_t s, std::size_t u, std::size_t w) {
    const Vec x = abs.state_grid.point(static_cast<grid_index>(s));
    const Vec uu = has_u ? abs.input_grid.point(static_cast<grid_index>(u))
                         : u_zero;
    const Vec& ww = field.dim_w() > 0 ? wvals[w] : w_zero;
    const Vec z = integrate_rk4(field, x, uu, ww, params.tau, h);
    const std::size_t rec = (s * NU + u) * NW + w;
    emit_record(ctx, z.data(), abs.bounds.data() + rec * 2 * ctx.dim,
                &abs.flags[rec]);
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(NS); ++s)
      for (std::size_t u = 0; u < NU; ++u)
        for (std::size_t w = 0; w < NW; ++w)
          record_for(static_cast<std::size_t>(s), u, w);
  } else {
    for (std::size_t s = 0; s < NS; ++s)
      for (std::size_t u = 0; u < NU; ++u)
        for (std::size_t w = 0; w < NW; ++w) record_for(s, u, w);
  }
  return abs;
}

}  // namespace

AbstractSystem build_abstraction(const VectorField& field,
                                 const AbstractionParams& params, const Box& Xp,
                                 const Box& Up,
                                 const DisturbanceModel& disturbance,
                                 AbstractionMode mode, int rk4_substeps) {
  return build_impl(field, params, Xp, Up, disturbance, mode, rk4_substeps,
                    true);
}

AbstractSystem build_abstraction_serial(const VectorField& field,
                                        const AbstractionParams& params,
                                        const Box& Xp, const Box& Up,
                                        const DisturbanceModel& disturbance,
                                        AbstractionMode mode,
                                        int rk4_substeps) {
  return build_impl(field, params, Xp, Up, disturbance, mode, rk4_substeps,
                    false);
}

FiniteMetricSystem to_metric_system(const AbstractSystem& abs) {
  FiniteMetricSystem sys;
  sys.tau = abs.params.tau;
  sys.states.reserve(abs.n_states());
  for (std::size_t s = 0; s < abs.n_states(); ++s)
    sys.states.push_back(abs.state_grid.point(static_cast<grid_index>(s)));
  for (std::size_t u = 0; u < abs.n_inputs(); ++u)
    sys.inputs.push_back(abs.input_grid.point(static_cast<grid_index>(u)));
  sys.disturbance_values = abs.disturbance.enumerate();
  const std::size_t NW = abs.n_dist();
  if (abs.mode != AbstractionMode::exact && NW != 1)
    throw std::invalid_argument("to_metric_system: exact mode expected");
  sys.transitions.resize(abs.n_states() * abs.n_inputs() *
                         sys.disturbance_values.size());
  for (std::size_t s = 0; s < abs.n_states(); ++s)
    for (std::size_t u = 0; u < abs.n_inputs(); ++u)
      for (std::size_t w = 0; w < NW; ++w) {
        const std::size_t rec = abs.record(s, u, w);
        if (abs.out_of_domain(rec) || abs.box_empty(rec))
          throw std::runtime_error(
              "to_metric_system: out-of-domain transition; shrink the test "
              "domain so all endpoints stay interior");
        auto& succ = sys.delta(s, u, w);
        abs.for_each_successor(rec,
                               [&](grid_index q) { succ.push_back(q); });
      }
  sys.validate();
  return sys;
}

/* ---------- persistence ----------
 * layout (little endian):
 *   magic "DBSA", u32 version=1, u8 mode, u8 norm, u8 dist kind, u8 pad
 *   f64 tau, f64 eps
 *   u32 dim_x; per dim: f64 lo, hi, eta        (state grid domain)
 *   u32 dim_u; per dim: f64 lo, hi, omega      (input grid domain)
 *   u32 n_eps_tilde; f64 each
 *   dist kind 1: u32 slots; per slot: u32 dim; per dim f64 lo, hi, eta
 *   dist kind 2: u32 blocks; u32 each dim; u32 count; f64 raw points
 *   u64 record count; i32 bounds (2*dim_x each); u8 flags
 */

namespace {

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("abstraction file: truncated");
  return v;
}

void put_grid(std::ostream& os, const UniformGrid& g) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  for (int d = 0; d < g.dim(); ++d) {
    put<double>(os, g.domain().lower[d]);
    put<double>(os, g.domain().upper[d]);
    put<double>(os, g.eta()[d]);
  }
}

UniformGrid get_grid(std::istream& is) {
  const auto dim = get<std::uint32_t>(is);
  Vec lo(dim), hi(dim), eta(dim);
  for (std::uint32_t d = 0; d < dim; ++d) {
    lo[d] = get<double>(is);
    hi[d] = get<double>(is);
    eta[d] = get<double>(is);
  }
  return UniformGrid(Box(lo, hi), eta);
}

void write_header(std::ostream& os, const AbstractSystem& abs) {
  os.write("DBSA", 4);
  put<std::uint32_t>(os, 1u);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(abs.mode));
  put<std::uint8_t>(os,
                    static_cast<std::uint8_t>(abs.params.eps_tilde_norm));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(abs.disturbance.kind));
  put<std::uint8_t>(os, 0u);
  put<double>(os, abs.params.tau);
  put<double>(os, abs.params.eps);
  put_grid(os, abs.state_grid);
  put_grid(os, abs.input_grid);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(abs.params.eps_tilde.size()));
  for (int k = 0; k < abs.params.eps_tilde.size(); ++k)
    put<double>(os, abs.params.eps_tilde[k]);
  const auto& dm = abs.disturbance;
  if (dm.kind == DisturbanceModel::Kind::neighbor_grids) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dm.slot_grids.size()));
    for (const auto& g : dm.slot_grids) put_grid(os, g);
  } else if (dm.kind == DisturbanceModel::Kind::points) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dm.metric.blocks()));
    for (int b : dm.metric.block_dims)
      put<std::uint32_t>(os, static_cast<std::uint32_t>(b));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dm.explicit_points.size()));
    for (const auto& p : dm.explicit_points)
      for (int d = 0; d < p.size(); ++d) put<double>(os, p[d]);
  }
}

}  // namespace

void save_abstraction(const std::string& path, const AbstractSystem& abs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_abstraction: cannot open " + path);
  write_header(os, abs);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(abs.n_records()));
  os.write(reinterpret_cast<const char*>(abs.bounds.data()),
           static_cast<std::streamsize>(abs.bounds.size() * sizeof(std::int32_t)));
  os.write(reinterpret_cast<const char*>(abs.flags.data()),
           static_cast<std::streamsize>(abs.flags.size()));
  if (!os) throw std::runtime_error("save_abstraction: write failed");
}

AbstractSystem load_abstraction(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_abstraction: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DBSA", 4) != 0)
    throw std::runtime_error("load_abstraction: bad magic");
  if (get<std::uint32_t>(is) != 1u)
    throw std::runtime_error("load_abstraction: unsupported version");
  AbstractSystem abs;
  abs.mode = static_cast<AbstractionMode>(get<std::uint8_t>(is));
  abs.params.eps_tilde_norm = static_cast<NormConvention>(get<std::uint8_t>(is));
  const auto dkind = static_cast<DisturbanceModel::Kind>(get<std::uint8_t>(is));
  get<std::uint8_t>(is);
  abs.params.tau = get<double>(is);
  abs.params.eps = get<double>(is);
  abs.state_grid = get_grid(is);
  abs.input_grid = get_grid(is);
  abs.params.eta = abs.state_grid.eta();
  abs.params.omega = abs.input_grid.eta();
  const auto net = get<std::uint32_t>(is);
  abs.params.eps_tilde = Vec(net);
  for (std::uint32_t k = 0; k < net; ++k)
    abs.params.eps_tilde[k] = get<double>(is);
  abs.disturbance.kind = dkind;
  if (dkind == DisturbanceModel::Kind::neighbor_grids) {
    const auto n = get<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < n; ++k) {
      abs.disturbance.slot_grids.push_back(get_grid(is));
      abs.disturbance.metric.block_dims.push_back(
          abs.disturbance.slot_grids.back().dim());
    }
  } else if (dkind == DisturbanceModel::Kind::points) {
    const auto blocks = get<std::uint32_t>(is);
    int total = 0;
    for (std::uint32_t b = 0; b < blocks; ++b) {
      const auto bd = get<std::uint32_t>(is);
      abs.disturbance.metric.block_dims.push_back(static_cast<int>(bd));
      total += static_cast<int>(bd);
    }
    const auto count = get<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < count; ++k) {
      Vec p(total);
      for (int d = 0; d < total; ++d) p[d] = get<double>(is);
      abs.disturbance.explicit_points.push_back(std::move(p));
    }
  }
  const auto records = get<std::uint64_t>(is);
  abs.bounds.resize(records * 2 * abs.state_grid.dim());
  abs.flags.resize(records);
  is.read(reinterpret_cast<char*>(abs.bounds.data()),
          static_cast<std::streamsize>(abs.bounds.size() * sizeof(std::int32_t)));
  is.read(reinterpret_cast<char*>(abs.flags.data()),
          static_cast<std::streamsize>(abs.flags.size()));
  if (!is) throw std::runtime_error("load_abstraction: truncated records");
  return abs;
}

std::uint64_t descriptor_hash(const AbstractSystem& abs) {
  std::ostringstream os(std::ios::binary);
  write_header(os, abs);
  const std::string bytes = os.str();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dibs
