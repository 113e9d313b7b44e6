#include "acoustica/adjoint.hpp"

#include <cmath>
#include <sstream>

#include "acoustica/errors.hpp"

namespace acoustica {

double compatibility_weight(double t, double T, double delta) {
  if (!(delta > 0.0) || !(delta < T)) throw ParameterError("compatibility width must lie in (0, T)");
  const double a = T - delta, b = T - 0.5 * delta;
  if (t <= a) return 1.0;
  if (t >= b) return 0.0;
  const double s = (t - a) / (b - a);
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

ResidualSource make_residual(const ObservationTrace& u, const ObservationTrace& target, double T, double delta) {
  check_compatible(u, target);
  ResidualSource r;
  r.tau = u.tau;
  r.n_steps = u.n_steps;
  r.nodes = u.nodes;
  r.weights = u.weights;
  r.values.resize(u.values.size());
  for (std::size_t n = 0; n <= u.n_steps; ++n) {
    const double z = compatibility_weight(u.time(n), T, delta);
    for (std::size_t k = 0; k < u.width(); ++k) {
      const std::size_t i = n * u.width() + k;
      r.values[i] = (u.values[i] - target.values[i]) * z;
    }
  }
  return r;
}

std::vector<double> boundary_damping(const HybridSystem& sys, bool top, bool bottom) {
  std::vector<double> b(sys.num_nodes(), 0.0);
  std::span<const double> wt = sys.fd_top_weight(), wb = sys.fd_bottom_weight();
  for (std::size_t k = 0; k < b.size(); ++k) {
    const UnionNode& q = sys.nodes()[k];
    if (q.owner != Owner::Fd) continue;
    b[k] = (top ? wt[q.fd] : 0.0) + (bottom ? wb[q.fd] : 0.0);
  }
  return b;
}

AdjointResult adjoint_solve(const HybridSystem& sys, const TimeGrid& tg, const ResidualSource& residual,
                            const AdjointOptions& opt) {
  check_cfl(sys, tg);
  if (residual.n_steps != tg.n_steps || residual.tau != tg.tau || residual.nodes != sys.observation_nodes()) {
    throw ShapeError("residual does not match the system and time grid");
  }
  const std::size_t nn = sys.num_nodes();
  const std::size_t N = tg.n_steps;
  AdjointResult res;
  res.history.tau = tg.tau;
  res.history.n_steps = N;
  if (opt.full_history) {
    res.history.nodes.resize(nn);
    for (std::size_t k = 0; k < nn; ++k) res.history.nodes[k] = static_cast<int>(k);
  } else {
    res.history.nodes = opt.history_nodes;
  }
  res.history.data.assign((N + 1) * res.history.width(), 0.0);
  if (opt.record_energy) res.energy.assign(N + 1, 0.0);

  std::vector<int> obs_fd;
  for (int v : residual.nodes) obs_fd.push_back(sys.nodes()[v].fd);

  SubdomainState later = sys.make_state(), cur = sys.make_state(), next = sys.make_state();
  std::vector<double> load(sys.grid().num_nodes(), 0.0);
  std::vector<double> lam, lam_later;
  if (opt.record_energy) {
    lam.assign(nn, 0.0);
    lam_later.assign(nn, 0.0);
  }

  for (std::size_t k = N; k >= 1; --k) {
    // Transpose of the forward recursion: A^{k-1}, the level-k diagonal and C^{k+1}.
    StepCoefficients c;
    const std::size_t lo = k - 1;
    if (lo == 0) {
      c.mass_factor = 2.0;
      c.damp_next_top = c.damp_next_bottom = false;
    } else {
      c.damp_next_top = tg.top_absorbing(k);
      c.damp_next_bottom = true;
    }
    c.prev_factor = 1.0;
    c.damp_prev_top = tg.top_absorbing(k + 1);
    c.damp_prev_bottom = true;
    c.cur_top = static_cast<double>(tg.top_absorbing(k + 1)) - static_cast<double>(tg.top_absorbing(k));

    const double wk = (k == N) ? 0.5 : 1.0;
    bool any = false;
    for (std::size_t q = 0; q < obs_fd.size(); ++q) {
      const double r = wk * residual.weights[q] * residual.at(k, q);
      load[obs_fd[q]] = -r;
      any = any || r != 0.0;
    }
    if (any) c.fd_source = load;

    if (!sys.step(c, tg.tau, cur, later, next)) {
      std::ostringstream os;
      os << "adjoint solution became non-finite at step " << lo;
      throw DivergenceError(os.str(), lo);
    }
    std::swap(later, cur);
    std::swap(cur, next);

    const auto& nodes = sys.nodes();
    double* h = res.history.data.data() + lo * res.history.width();
    for (std::size_t q = 0; q < res.history.width(); ++q) {
      const UnionNode& u = nodes[res.history.nodes[q]];
      h[q] = u.owner == Owner::Fd ? cur.fd[u.fd] : cur.fe[u.fe];
    }
    if (opt.record_energy) {
      std::swap(lam, lam_later);
      sys.gather(cur, lam);
      res.energy[lo] = discrete_energy(sys, lam, lam_later, tg.tau);
    }
  }
  return res;
}

StepOperator::StepOperator(const HybridSystem& sys, double tau, bool top_before, bool top_after)
    : sys_(sys), tau_(tau), top_before_(top_before), top_after_(top_after), n_(sys.num_nodes()) {
  const std::vector<double> bm = boundary_damping(sys, top_before, true);
  const std::vector<double> bp = boundary_damping(sys, top_after, true);
  std::span<const double> m = sys.mass();
  a_.resize(n_);
  c_.resize(n_);
  d_.resize(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    a_[k] = m[k] + 0.5 * tau * bp[k];
    c_[k] = m[k] - 0.5 * tau * bm[k];
    d_[k] = 2.0 * m[k] - 0.5 * tau * (bp[k] - bm[k]);
  }
}

void StepOperator::apply(std::span<const double> a1, std::span<const double> a2, std::span<double> out1,
                         std::span<double> out2) const {
  SubdomainState cur = sys_.make_state(), prev = sys_.make_state(), next = sys_.make_state();
  sys_.scatter(a1, cur);
  sys_.scatter(a2, prev);
  StepCoefficients k;
  k.damp_prev_top = top_before_;
  k.damp_next_top = top_after_;
  k.cur_top = static_cast<double>(top_after_) - static_cast<double>(top_before_);
  sys_.step(k, tau_, cur, prev, next);
  sys_.gather(next, out1);
  for (std::size_t i = 0; i < n_; ++i) out2[i] = sys_.active(i) ? a1[i] : 0.0;
}

void StepOperator::apply_adjoint(std::span<const double> p, std::span<const double> q, std::span<double> out1,
                                 std::span<double> out2) const {
  std::vector<double> y(n_), ky(n_);
  for (std::size_t i = 0; i < n_; ++i) y[i] = sys_.active(i) ? p[i] / a_[i] : 0.0;
  sys_.apply_stiffness(y, ky);
  for (std::size_t i = 0; i < n_; ++i) {
    out1[i] = sys_.active(i) ? d_[i] * y[i] - tau_ * tau_ * ky[i] + q[i] : 0.0;
    out2[i] = -c_[i] * y[i];
  }
}

}  // namespace acoustica
