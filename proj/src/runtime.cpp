#include "dibs/runtime.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dibs {

namespace {

/* box successor minimizing V against the new continuous state */
bool best_successor(const AbstractSystem& abs, std::size_t rec,
                    const LyapunovRelation& rel, const Vec& x_new,
                    grid_index* out, double* v_out) {
  if (abs.box_empty(rec)) return false;
  bool found = false;
  double best_v = 0.0;
  grid_index best_q = 0;
  abs.for_each_successor(rec, [&](grid_index q) {
    const double v = rel.value(x_new, abs.state_grid.point(q));
    if (!found || v < best_v) {
      found = true;
      best_v = v;
      best_q = q;
    }
  });
  if (found) {
    *out = best_q;
    *v_out = best_v;
  }
  return found;
}

}  // namespace

RefineStep refine_step(const AbstractSystem& abs, const Controller& ctrl,
                       const LyapunovRelation& rel, const VectorField& field,
                       const ProductState& current, const Vec& nu,
                       const Vec& nu_hat, double tau, double h) {
  if (!ctrl.winning[current.x_hat])
    throw std::runtime_error("refine_step: abstract state " +
                             std::to_string(current.x_hat) + " is not winning");
  const int u_idx = ctrl.choice[current.x_hat];
  if (u_idx < 0)
    throw std::runtime_error("refine_step: no input stored for abstract state " +
                             std::to_string(current.x_hat));
  const Vec u = field.dim_u() > 0 ? abs.input_grid.point(u_idx) : Vec(0);

  RefineStep step;
  step.input_index = u_idx;
  step.next.x = integrate_rk4(field, current.x, u, nu, tau, h);

  const std::size_t w_idx = abs.mode == AbstractionMode::exact
                                ? abs.disturbance.index_of(nu_hat)
                                : 0;
  const std::size_t rec = abs.record(current.x_hat, u_idx, w_idx);
  if (abs.out_of_domain(rec))
    throw std::runtime_error("refine_step: chosen transition leaves the domain");
  grid_index q;
  double v;
  if (!best_successor(abs, rec, rel, step.next.x, &q, &v))
    throw std::runtime_error("refine_step: empty abstract successor set");
  if (!rel.member(step.next.x, abs.state_grid.point(q))) {
    std::ostringstream os;
    os << "refine_step: relation violated, V = " << v << " > "
       << rel.threshold() << " (check the abstraction parameters)";
    throw std::runtime_error(os.str());
  }
  step.next.x_hat = q;
  step.next.v_value = v;
  return step;
}

SimulationResult simulate_network(
    const NetworkSpec& net,
    const std::map<std::string, SubsystemRuntime>& runtimes,
    const std::map<std::string, Vec>& x0, const SimulationOptions& opts) {
  net.validate();
  const std::size_t n = net.instances.size();
  if (n == 0) throw std::invalid_argument("simulate_network: no instances");

  struct Slot {
    int src = -1; /* instance index, -1 for zero source */
    int dim = 0;
  };
  struct Inst {
    const SubsystemInstance* spec = nullptr;
    const SubsystemTemplate* tmpl = nullptr;
    const AbstractSystem* abs = nullptr;
    const Controller* ctrl = nullptr;
    LyapunovRelation rel;
    std::vector<Slot> slots;
    int offset = 0;
    int dim = 0;
    double chi = 0.0;
    grid_index x_hat = 0;
    bool reached = false;
    bool safe = true;
    int input = -1;
  };

  std::vector<Inst> inst(n);
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos[net.instances[i].id] = i;

  int total_dim = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Inst& I = inst[i];
    I.spec = &net.instances[i];
    I.tmpl = &net.templates[I.spec->tmpl];
    const auto rit = runtimes.find(I.spec->id);
    if (rit == runtimes.end() || !rit->second.abs || !rit->second.ctrl)
      throw std::invalid_argument("simulate_network: missing runtime for " +
                                  I.spec->id);
    I.abs = rit->second.abs;
    I.ctrl = rit->second.ctrl;
    I.rel.v_coeffs = I.tmpl->v_coeffs;
    I.rel.alpha_low = I.tmpl->lyap.alpha_low;
    I.rel.eps = I.tmpl->eps;
    I.dim = I.tmpl->field.dim_x();
    I.offset = total_dim;
    total_dim += I.dim;
    I.chi = template_chi(net, I.spec->tmpl);
    for (std::size_t s = 0; s < I.spec->neighbors.size(); ++s) {
      Slot slot;
      slot.dim =
          net.templates[I.tmpl->slots[s].source_template].field.dim_x();
      slot.src = I.spec->neighbors[s].zero
                     ? -1
                     : static_cast<int>(pos.at(I.spec->neighbors[s].id));
      I.slots.push_back(slot);
    }
  }

  /* initial product states */
  Vec X(total_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = x0.find(inst[i].spec->id);
    if (it == x0.end())
      throw std::invalid_argument("simulate_network: missing initial state for " +
                                  inst[i].spec->id);
    X.segment(inst[i].offset, inst[i].dim) = it->second;
    const auto q = inst[i].abs->state_grid.quantize(it->second);
    if (!q)
      throw std::runtime_error("simulate_network: initial state of " +
                               inst[i].spec->id + " is outside the grid");
    if (!inst[i].ctrl->winning[*q])
      throw std::runtime_error("simulate_network: initial state of " +
                               inst[i].spec->id +
                               " does not quantize into the winning set");
    inst[i].x_hat = *q;
  }

  const double tau = net.tau;
  const double h = tau / net.rk4_substeps;

  SimulationResult res;
  res.max_v.assign(n, 0.0);
  res.max_envelope.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) res.log.ids.push_back(inst[i].spec->id);

  auto gather_w = [&](const Inst& I, const Vec& G) {
    Vec w(I.tmpl->field.dim_w());
    int off = 0;
    for (const auto& slot : I.slots) {
      if (slot.src < 0)
        w.segment(off, slot.dim).setZero();
      else
        w.segment(off, slot.dim) =
            G.segment(inst[slot.src].offset, slot.dim);
      off += slot.dim;
    }
    return w;
  };

  auto network_rhs = [&](const Vec& G) {
    Vec dG(total_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const Inst& I = inst[i];
      const Vec xi = G.segment(I.offset, I.dim);
      const Vec ui = I.input >= 0 && I.tmpl->field.dim_u() > 0
                         ? I.abs->input_grid.point(I.input)
                         : Vec::Zero(I.tmpl->field.dim_u());
      dG.segment(I.offset, I.dim) = I.tmpl->field.eval(xi, ui, gather_w(I, G));
    }
    return dG;
  };

  auto update_flags = [&](std::size_t i) {
    const Vec xi = X.segment(inst[i].offset, inst[i].dim);
    if (inst[i].tmpl->target.contains(xi)) inst[i].reached = true;
    bool ok = inst[i].tmpl->state_domain.contains(xi, 1e-12);
    if (ok && inst[i].tmpl->obstacle && inst[i].tmpl->obstacle->contains(xi))
      ok = false;
    if (!ok) {
      inst[i].safe = false;
      res.all_safe = false;
    }
  };

  auto log_instant = [&](int k) {
    for (std::size_t i = 0; i < n; ++i) {
      TrajectoryRow row;
      row.time = k * tau;
      row.subsystem = static_cast<int>(i);
      row.x = X.segment(inst[i].offset, inst[i].dim);
      row.abstract_index = inst[i].x_hat;
      row.input_index = inst[i].input;
      row.reached = inst[i].reached;
      row.safe = inst[i].safe;
      res.log.rows.push_back(std::move(row));
    }
  };

  for (std::size_t i = 0; i < n; ++i) update_flags(i);

  int k = 0;
  for (; k < opts.max_steps; ++k) {
    bool all_reached = true;
    for (const auto& I : inst) all_reached = all_reached && I.reached;
    if (all_reached && opts.stop_when_all_reached) break;

    /* controller lookups at the sampling instant */
    for (std::size_t i = 0; i < n; ++i) {
      Inst& I = inst[i];
      if (!I.ctrl->controllable(I.x_hat))
        throw std::runtime_error("simulate_network: " + I.spec->id +
                                 ": abstract state left the controllable region");
      I.input = I.ctrl->choice[I.x_hat];
      if (I.input < 0)
        throw std::runtime_error("simulate_network: " + I.spec->id +
                                 ": terminal abstract state has no input");
    }
    log_instant(k);

    /* quantized neighbor snapshots for exact-mode abstractions */
    std::vector<std::size_t> w_idx(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      if (inst[i].abs->mode == AbstractionMode::exact)
        w_idx[i] = inst[i].abs->disturbance.index_of(gather_w(inst[i], X));

    /* joint integration of the coupled network over [0,tau] */
    const Vec x_start = X;
    for (int step = 0; step < net.rk4_substeps; ++step) {
      const Vec k1 = network_rhs(X);
      const Vec k2 = network_rhs(X + 0.5 * h * k1);
      const Vec k3 = network_rhs(X + 0.5 * h * k2);
      const Vec k4 = network_rhs(X + h * k3);
      X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!X.allFinite())
        throw std::runtime_error("simulate_network: non-finite network state");
      if (opts.check_envelope) {
        const double dt = (step + 1) * h;
        for (std::size_t i = 0; i < n; ++i) {
          const Vec xi = X.segment(inst[i].offset, inst[i].dim);
          const double dev =
              (xi - x_start.segment(inst[i].offset, inst[i].dim))
                  .lpNorm<Eigen::Infinity>();
          if (inst[i].chi > 0.0)
            res.max_envelope[i] =
                std::max(res.max_envelope[i], dev / (inst[i].chi * dt));
          /* continuous-envelope satisfaction, reported separately from
           * the sampling-instant flags */
          if (!inst[i].tmpl->state_domain.contains(xi, 1e-12) ||
              (inst[i].tmpl->obstacle && inst[i].tmpl->obstacle->contains(xi)))
            res.all_safe_substeps = false;
        }
      }
    }

    /* abstract successors and relation invariance */
    for (std::size_t i = 0; i < n; ++i) {
      Inst& I = inst[i];
      const Vec xi = X.segment(I.offset, I.dim);
      const std::size_t rec = I.abs->record(I.x_hat, I.input, w_idx[i]);
      if (I.abs->out_of_domain(rec))
        throw std::runtime_error("simulate_network: " + I.spec->id +
                                 ": transition leaves the domain");
      grid_index q;
      double v;
      if (!best_successor(*I.abs, rec, I.rel, xi, &q, &v))
        throw std::runtime_error("simulate_network: " + I.spec->id +
                                 ": empty abstract successor set");
      if (!I.rel.member(xi, I.abs->state_grid.point(q))) {
        std::ostringstream os;
        os << "simulate_network: " << I.spec->id << ": relation violated at t="
           << (k + 1) * tau << ", V = " << v << " > " << I.rel.threshold();
        throw std::runtime_error(os.str());
      }
      I.x_hat = q;
      res.max_v[i] = std::max(res.max_v[i], v);
      update_flags(i);
    }
  }

  for (std::size_t i = 0; i < n; ++i) inst[i].input = -1;
  log_instant(k);

  res.steps = k;
  res.all_reached = true;
  for (const auto& I : inst) res.all_reached = res.all_reached && I.reached;
  return res;
}

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  os << "time,subsystem,x,abstract_index,input_index,flag_reached,flag_safe\n";
  char buf[64];
  for (const auto& row : log.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", row.time);
    os << buf << "," << log.ids[row.subsystem];
    for (int d = 0; d < row.x.size(); ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", row.x[d]);
      os << "," << buf;
    }
    os << "," << row.abstract_index << "," << row.input_index << ","
       << (row.reached ? 1 : 0) << "," << (row.safe ? 1 : 0) << "\n";
  }
  if (!os) throw std::runtime_error("write_trajectory_csv: write failed");
}

}  // namespace dibs
