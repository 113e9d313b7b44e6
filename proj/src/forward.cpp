#include "acoustica/forward.hpp"

#include <cmath>
#include <sstream>

#include "acoustica/errors.hpp"

namespace acoustica {

void check_cfl(const HybridSystem& sys, const TimeGrid& tg) {
  const double bound = tg.cfl_safety * sys.h_min() * std::sqrt(sys.c_min());
  if (tg.tau > bound + 1e-12) {
    std::ostringstream os;
    os << "time step " << tg.tau << " exceeds the CFL bound " << bound << " (h_min = " << sys.h_min() << ")";
    throw StabilityError(os.str());
  }
}

StepCoefficients forward_step_coefficients(const TimeGrid& tg, std::size_t n) {
  StepCoefficients k;
  if (n == 0) {
    // u^1 = u^0 + τ²/2 M⁻¹ (F^0 - K u^0), zero initial velocity.
    k.mass_factor = 2.0;
    k.prev_factor = 0.0;
    k.damp_next_top = k.damp_next_bottom = false;
    k.damp_prev_top = k.damp_prev_bottom = false;
    return k;
  }
  // Damping lives on the half steps (t_{n-1}, t_n) and (t_n, t_{n+1}); the top
  // one is active on an interval that ends after t1.
  const bool before = tg.top_absorbing(n), after = tg.top_absorbing(n + 1);
  k.damp_prev_top = before;
  k.damp_next_top = after;
  k.damp_next_bottom = k.damp_prev_bottom = true;
  k.cur_top = static_cast<double>(after) - static_cast<double>(before);
  return k;
}

ObservationTrace make_trace_layout(const HybridSystem& sys, const TimeGrid& tg) {
  ObservationTrace tr;
  tr.tau = tg.tau;
  tr.n_steps = tg.n_steps;
  tr.nodes = sys.observation_nodes();
  tr.weights = sys.observation_weights();
  tr.tags = sys.observation_tags();
  for (int v : tr.nodes) tr.coords.push_back(sys.nodes()[v].x);
  tr.values.assign((tg.n_steps + 1) * tr.nodes.size(), 0.0);
  return tr;
}

ForwardResult forward_solve(const HybridSystem& sys, const TimeGrid& tg, const SourceSpec& src,
                            const ForwardOptions& opt) {
  check_cfl(sys, tg);
  const std::size_t nn = sys.num_nodes();
  if (!opt.f0.empty() && opt.f0.size() != nn) throw ShapeError("initial displacement has the wrong length");

  ForwardResult res;
  res.trace = make_trace_layout(sys, tg);
  res.history.tau = tg.tau;
  res.history.n_steps = tg.n_steps;
  if (opt.full_history) {
    res.history.nodes.resize(nn);
    for (std::size_t k = 0; k < nn; ++k) res.history.nodes[k] = static_cast<int>(k);
  } else {
    res.history.nodes = opt.history_nodes;
  }
  for (int v : res.history.nodes) {
    if (v < 0 || static_cast<std::size_t>(v) >= nn) throw ShapeError("history node out of range");
  }
  res.history.data.assign((tg.n_steps + 1) * res.history.width(), 0.0);
  if (opt.record_energy) res.energy.assign(tg.n_steps + 1, 0.0);

  SubdomainState prev = sys.make_state(), cur = sys.make_state(), next = sys.make_state();
  if (!opt.f0.empty()) sys.scatter(opt.f0, cur);

  const FdGrid& g = sys.grid();
  std::span<const double> top = sys.fd_top_weight();
  std::vector<double> load(g.num_nodes(), 0.0);
  const bool need_union = opt.record_energy || static_cast<bool>(opt.observer);
  std::vector<double> u(need_union ? nn : 0), u_prev(need_union ? nn : 0);

  auto record = [&](std::size_t n, const SubdomainState& s) {
    const auto& nodes = sys.nodes();
    auto value = [&](int idx) {
      const UnionNode& q = nodes[idx];
      return q.owner == Owner::Fd ? s.fd[q.fd] : s.fe[q.fe];
    };
    double* tr = res.trace.values.data() + n * res.trace.width();
    for (std::size_t k = 0; k < res.trace.width(); ++k) tr[k] = value(res.trace.nodes[k]);
    double* h = res.history.data.data() + n * res.history.width();
    for (std::size_t k = 0; k < res.history.width(); ++k) h[k] = value(res.history.nodes[k]);
    if (need_union) {
      std::swap(u, u_prev);
      sys.gather(s, u);
      if (opt.record_energy && n >= 1) res.energy[n] = discrete_energy(sys, u, u_prev, tg.tau);
      if (opt.observer) opt.observer(n, u);
    }
  };

  record(0, cur);
  for (std::size_t n = 0; n < tg.n_steps; ++n) {
    StepCoefficients k = forward_step_coefficients(tg, n);
    const double p = plane_wave_source(tg.time(n), src);
    if (p != 0.0) {
      for (std::size_t f = 0; f < load.size(); ++f) load[f] = p * top[f];
      k.fd_source = load;
    }
    if (!sys.step(k, tg.tau, cur, prev, next)) {
      std::ostringstream os;
      os << "forward solution became non-finite at step " << n + 1;
      throw DivergenceError(os.str(), n + 1);
    }
    std::swap(prev, cur);
    std::swap(cur, next);
    record(n + 1, cur);
  }
  return res;
}

double discrete_energy(const HybridSystem& sys, std::span<const double> u, std::span<const double> u_prev,
                       double tau) {
  const std::size_t nn = sys.num_nodes();
  if (u.size() != nn || u_prev.size() != nn) throw ShapeError("energy needs full union vectors");
  std::vector<double> ku(nn);
  sys.apply_stiffness(u_prev, ku);
  std::span<const double> m = sys.mass();
  double kin = 0.0, pot = 0.0;
  for (std::size_t k = 0; k < nn; ++k) {
    const double d = u[k] - u_prev[k];
    kin += m[k] * d * d;
    pot += u[k] * ku[k];
  }
  return kin / (tau * tau) + pot;
}

double discrete_energy(const HybridSystem& sys, const TimeSeriesField& field, std::size_t n) {
  if (n < 1 || n > field.n_steps) throw ParameterError("discrete_energy needs 1 <= n <= n_steps");
  if (field.width() != sys.num_nodes()) throw ShapeError("discrete_energy needs a full history");
  return discrete_energy(sys, field.step(n), field.step(n - 1), field.tau);
}

}  // namespace acoustica
