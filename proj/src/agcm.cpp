#include "acoustica/agcm.hpp"

#include <cmath>
#include <sstream>

#include "acoustica/errors.hpp"

namespace acoustica {

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::Tolerance: return "tolerance";
    case StopReason::Stabilized: return "stabilized";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::ZeroDirection: return "zero_direction";
  }
  return "?";
}

void AGCMConfig::validate() const {
  if (!(gamma0 > 0.0)) throw ParameterError("gamma0 must be positive");
  if (!(p_exponent > 0.0 && p_exponent < 1.0)) throw ParameterError("p_exponent must lie in (0, 1)");
  if (!(theta > 0.0)) throw ParameterError("theta must be positive");
  if (max_inner_iters < 1) throw ParameterError("max_inner_iters must be >= 1");
  if (max_refinements < 0) throw ParameterError("max_refinements must be >= 0");
  if (stabilization_window < 1) throw ParameterError("stabilization_window must be >= 1");
  if (!(stabilization_rel_change > 0.0)) throw ParameterError("stabilization_rel_change must be positive");
}

double gamma_schedule(double gamma0, double p, int m) { return gamma0 / std::pow(static_cast<double>(m + 1), p); }

GradientField cg_direction(const GradientField& g, const GradientField* g_prev, const GradientField* d_prev,
                           double* beta) {
  GradientField d = g;
  for (double& v : d.values) v = -v;
  double b = 0.0;
  if (g_prev && d_prev) {
    if (g_prev->mesh != g.mesh || d_prev->mesh != g.mesh) throw ShapeError("CG fields live on different meshes");
    const double prev = inner_g1(*g_prev, *g_prev);
    if (prev > 0.0) {
      b = inner_g1(g, g) / prev;
      for (std::size_t t = 0; t < d.values.size(); ++t) d.values[t] += b * d_prev->values[t];
    }
  }
  if (beta) *beta = b;
  return d;
}

std::optional<double> step_size(const GradientField& g, const GradientField& d, double gamma) {
  if (gamma == 0.0) throw ParameterError("step size needs gamma != 0");
  const double dd = inner_g1(d, d);
  if (dd == 0.0) return std::nullopt;
  return -inner_g1(g, d) / (gamma * dd);
}

CoefficientField update_coefficient(const CoefficientField& c, const GradientField& d, double alpha) {
  if (d.mesh != c.mesh) throw ShapeError("direction and coefficient live on different meshes");
  CoefficientField out = c;
  const TriMesh& m = *c.mesh;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    if (m.region[t] == Region::G1) out.values[t] = std::clamp(c.values[t] + alpha * d.values[t], c.lower, c.upper);
  }
  return out;
}

namespace {

// Relative change of ‖g‖ below `rel` over each of the last `window` iterations.
bool stabilized(const std::vector<IterationRecord>& h, double latest, int window, double rel) {
  const auto n = static_cast<int>(h.size());
  if (n < window) return false;
  for (int i = n - window; i < n; ++i) {
    const double a = h[i].grad_norm;
    const double b = i + 1 < n ? h[i + 1].grad_norm : latest;
    if (a == 0.0 || std::abs(b - a) / a >= rel) return false;
  }
  return true;
}

}  // namespace

LevelResult run_inner_loop(const LevelProblem& pb, const AGCMConfig& cfg, int level, const IterationObserver& observer) {
  cfg.validate();
  LevelResult res;
  res.level = level;
  res.tg = pb.tg;
  res.c = pb.c0;
  res.state.level = level;

  TikhonovConfig tk;
  tk.gamma0 = cfg.gamma0;
  tk.c_ref = pb.c0;
  tk.delta = pb.delta;
  tk.T = pb.tg.T;

  OptimizerState& st = res.state;
  st.m = 0;
  while (true) {
    st.gamma_m = gamma_schedule(cfg.gamma0, cfg.p_exponent, st.m);
    tk.gamma = st.gamma_m;

    HybridSystem sys(pb.mesh, pb.grid, res.c, pb.obstacle);
    const std::vector<int> nodes = g1_history_nodes(sys);
    ForwardOptions fo;
    fo.history_nodes = nodes;
    ForwardResult fwd;
    AdjointResult adj;
    try {
      fwd = forward_solve(sys, pb.tg, pb.src, fo);
      const ResidualSource r = make_residual(fwd.trace, pb.target, pb.tg.T, pb.delta);
      AdjointOptions ao;
      ao.history_nodes = nodes;
      adj = adjoint_solve(sys, pb.tg, r, ao);
    } catch (const DivergenceError& e) {
      std::ostringstream os;
      os << "level " << level << ", iteration " << st.m << ": " << e.what();
      throw DivergenceError(os.str(), e.step());
    }
    const GradientField g = assemble_gradient(fwd.history, adj.history, sys, res.c, tk);
    fwd.history = {};
    adj.history = {};

    IterationRecord rec;
    rec.level = level;
    rec.m = st.m;
    rec.gamma = st.gamma_m;
    rec.grad_norm = norm_g1(g);
    rec.functional = evaluate_functional(fwd.trace, pb.target, res.c, tk);
    res.final_grad_norm = rec.grad_norm;
    res.last_gradient = g;

    StopReason why = StopReason::None;
    if (rec.grad_norm <= cfg.theta) {
      why = StopReason::Tolerance;
    } else if (stabilized(st.history, rec.grad_norm, cfg.stabilization_window, cfg.stabilization_rel_change)) {
      why = StopReason::Stabilized;
    } else {
      const GradientField d =
          cg_direction(g, st.g_prev ? &*st.g_prev : nullptr, st.d_prev ? &*st.d_prev : nullptr);
      const std::optional<double> alpha = step_size(g, d, st.gamma_m);
      if (!alpha) {
        why = StopReason::ZeroDirection;
      } else {
        rec.alpha = *alpha;
        res.c = update_coefficient(res.c, d, *alpha);
        st.g_prev = g;
        st.d_prev = d;
      }
    }
    st.history.push_back(rec);
    if (observer) observer(rec);
    if (why != StopReason::None) {
      st.stop_reason = why;
      break;
    }
    if (++st.m >= cfg.max_inner_iters) {
      st.stop_reason = StopReason::MaxIter;
      break;
    }
  }
  return res;
}

TimeGrid level_time_grid(double T, double tau0, double t1, double cfl_safety, double h_min) {
  double tau = tau0;
  const double bound = cfl_safety * h_min;
  for (int k = 0; tau > bound + 1e-12; ++k) {
    if (k > 30) throw StabilityError("no admissible time step for this mesh");
    tau *= 0.5;
  }
  return TimeGrid::make(T, tau, t1, cfl_safety);
}

namespace {

LevelProblem make_level(const AgcmProblem& pb, std::shared_ptr<const TriMesh> mesh, CoefficientField c0) {
  LevelProblem lp;
  lp.mesh = mesh;
  lp.grid = pb.grid;
  const double h_min = std::min(pb.grid->h, mesh->min_edge_length());
  lp.tg = level_time_grid(pb.T, pb.tau0, pb.t1, pb.cfl_safety, h_min);
  lp.src = pb.src;
  lp.target = pb.target(mesh, lp.tg);
  lp.c0 = std::move(c0);
  lp.delta = pb.delta;
  lp.obstacle = pb.obstacle;
  return lp;
}

std::shared_ptr<const TriMesh> refine_level(const std::shared_ptr<const TriMesh>& mesh, const AGCMConfig& cfg,
                                            int level) {
  try {
    return refine_symmetric(mesh, Region::G1, cfg.min_angle_deg);
  } catch (const RefinementError& e) {
    std::ostringstream os;
    os << "refining level " << level << ": " << e.what();
    throw RefinementError(os.str());
  }
}

}  // namespace

std::vector<LevelResult> run_agcm(const AgcmProblem& pb, const AGCMConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  if (!pb.target) throw ParameterError("run_agcm needs a target provider");
  std::vector<LevelResult> out;
  std::shared_ptr<const TriMesh> mesh = pb.mesh;
  CoefficientField c0 = CoefficientField::uniform(mesh, pb.c0_value);

  out.push_back(run_inner_loop(make_level(pb, mesh, c0), cfg, 0, observer));

  if (cfg.mode == AgcmMode::InterpThenOptimize) {
    if (cfg.max_refinements == 0) return out;
    CoefficientField c = out.back().c;
    for (int j = 1; j <= cfg.max_refinements; ++j) {
      mesh = refine_level(mesh, cfg, j);
      c = interpolate_coefficient(c, mesh);
    }
    out.push_back(run_inner_loop(make_level(pb, mesh, c), cfg, cfg.max_refinements, observer));
    return out;
  }

  for (int j = 1; j <= cfg.max_refinements; ++j) {
    mesh = refine_level(mesh, cfg, j);
    CoefficientField c = interpolate_coefficient(out.back().c, mesh);
    LevelResult r = run_inner_loop(make_level(pb, mesh, c), cfg, j, observer);
    const double prev = out.back().final_grad_norm;
    const double now = r.final_grad_norm;
    out.push_back(std::move(r));
    if (cfg.level_stop && prev > 0.0 && (now > prev || std::abs(now - prev) / prev < cfg.stabilization_rel_change)) {
      break;
    }
  }
  return out;
}

}  // namespace acoustica
