#include "acoustica/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "acoustica/forward.hpp"
#include "acoustica/vtk.hpp"
#include "json.hpp"

namespace acoustica {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string_view to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::Forward:
      return "forward";
    case ExperimentMode::GenerateTarget:
      return "generate_target";
    case ExperimentMode::Optimize:
      return "optimize";
    case ExperimentMode::OptimizeInterpThenRefine:
      return "optimize_interp_then_refine";
  }
  return "?";
}

ExperimentMode parse_mode(std::string_view s) {
  for (ExperimentMode m : {ExperimentMode::Forward, ExperimentMode::GenerateTarget, ExperimentMode::Optimize,
                           ExperimentMode::OptimizeInterpThenRefine}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown mode '" + std::string(s) + "'", "mode");
}

// ---------------------------------------------------------------- config

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Line numbers of "section.key" entries, for diagnostics only; the parsing
/// itself is done by property_tree.
std::map<std::string, std::size_t> key_lines(const std::string& text) {
  std::map<std::string, std::size_t> out;
  std::istringstream is(text);
  std::string line;
  std::string section;
  for (std::size_t no = 1; std::getline(is, line); ++no) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      out.emplace(section, no);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(std::string_view(t).substr(0, eq));
    out.emplace(section.empty() ? key : section + "." + key, no);
  }
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::map<std::string, std::size_t> lines, std::string source)
      : tree_(tree), lines_(std::move(lines)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    const auto it = lines_.find(field);
    const std::size_t line = it == lines_.end() ? 0 : it->second;
    std::ostringstream os;
    os << source_;
    if (line > 0) os << ':' << line;
    os << ": " << field << ": " << msg;
    throw ConfigError(os.str(), field, line);
  }

  std::optional<std::string> raw(const std::string& field) {
    seen_.insert(field);
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(field, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  void number(const std::string& field, double& out) {
    const auto s = raw(field);
    if (!s) return;
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || p != s->data() + s->size() || !std::isfinite(v)) fail(field, "not a number: '" + *s + "'");
    out = v;
  }

  void integer(const std::string& field, int& out) {
    const auto s = raw(field);
    if (!s) return;
    int v = 0;
    const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || p != s->data() + s->size()) fail(field, "not an integer: '" + *s + "'");
    out = v;
  }

  void boolean(const std::string& field, bool& out) {
    const auto s = raw(field);
    if (!s) return;
    if (*s == "true" || *s == "yes" || *s == "1") {
      out = true;
    } else if (*s == "false" || *s == "no" || *s == "0") {
      out = false;
    } else {
      fail(field, "not a boolean: '" + *s + "'");
    }
  }

  void rect(const std::string& field, Rect& out) {
    const auto s = raw(field);
    if (!s) return;
    std::string text = *s;
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream is(text);
    std::array<double, 4> v{};
    std::string tok;
    std::size_t k = 0;
    while (is >> tok) {
      if (k == 4) fail(field, "expected four numbers x0 x1 y0 y1");
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v[k]);
      if (ec != std::errc() || p != tok.data() + tok.size()) fail(field, "not a number: '" + tok + "'");
      ++k;
    }
    if (k != 4) fail(field, "expected four numbers x0 x1 y0 y1");
    out = {v[0], v[1], v[2], v[3]};
  }

  /// Every key in the file must have been asked for.
  void reject_unknown() const {
    for (const auto& [top_key, top] : tree_) {
      if (top.empty()) {
        if (!seen_.count(top_key)) fail(top_key, "unknown key");
        continue;
      }
      for (const auto& [key, node] : top) {
        const std::string field = top_key + "." + key;
        if (!seen_.count(field)) fail(field, "unknown key");
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::map<std::string, std::size_t> lines_;
  std::string source_;
  std::set<std::string> seen_;
};

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& source_name, const fs::path& base_dir) {
  const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << source_name << ':' << e.line() << ": " << e.message();
    throw ConfigError(os.str(), "", e.line());
  }

  ExperimentConfig cfg;
  Reader r(tree, key_lines(text), source_name);
  if (const auto m = r.raw("mode"); m && !m->empty()) {
    try {
      cfg.mode = parse_mode(*m);
    } catch (const ConfigError&) {
      r.fail("mode", "unknown mode '" + *m + "'");
    }
  }
  if (const auto out = r.raw("output_dir"); out && !out->empty()) cfg.output_dir = base_dir / *out;
  r.integer("snapshot_stride", cfg.snapshot_stride);

  r.number("geometry.h", cfg.geometry.h);
  r.rect("geometry.d", cfg.geometry.d);
  r.rect("geometry.dfem", cfg.geometry.dfem);
  r.rect("geometry.g1", cfg.geometry.g1);
  r.rect("geometry.g0", cfg.geometry.g0);
  r.boolean("geometry.obstacle", cfg.obstacle);
  r.boolean("geometry.target_obstacle", cfg.target_obstacle);

  r.number("time.T", cfg.T);
  r.number("time.tau", cfg.tau);
  r.number("time.cfl_safety", cfg.cfl_safety);

  r.number("source.omega", cfg.source.omega);
  r.number("source.amplitude", cfg.source.amplitude);

  r.number("design.c0", cfg.c0);
  r.number("design.delta", cfg.delta);
  if (const auto t = r.raw("design.target_file"); t && !t->empty()) cfg.target_file = base_dir / *t;

  r.number("agcm.gamma0", cfg.agcm.gamma0);
  r.number("agcm.p", cfg.agcm.p_exponent);
  r.number("agcm.theta", cfg.agcm.theta);
  r.integer("agcm.max_inner_iters", cfg.agcm.max_inner_iters);
  r.integer("agcm.max_refinements", cfg.agcm.max_refinements);
  r.integer("agcm.stabilization_window", cfg.agcm.stabilization_window);
  r.number("agcm.stabilization_rel_change", cfg.agcm.stabilization_rel_change);
  r.boolean("agcm.level_stop", cfg.agcm.level_stop);
  r.number("agcm.min_angle_deg", cfg.agcm.min_angle_deg);
  r.reject_unknown();

  // Semantic checks are reported against the line of the field involved.
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    if (e.line() == 0) r.fail(e.field(), e.what());
    throw;
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string(), "config");
  return parse_config(is, path.string(), path.parent_path());
}

void ExperimentConfig::validate() const {
  const auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ConfigError(std::string("must be positive"), field);
  };
  positive(geometry.h, "geometry.h");
  positive(T, "time.T");
  positive(cfl_safety, "time.cfl_safety");
  if (tau < 0.0) throw ConfigError("must be positive (or 0 to derive it)", "time.tau");
  positive(source.omega, "source.omega");
  if (source.amplitude < 0.0) throw ConfigError("must not be negative", "source.amplitude");
  if (!(c0 >= 1.0)) throw ConfigError("initial guess must be >= 1", "design.c0");
  if (delta < 0.0 || delta_value() >= T) throw ConfigError("needs 0 < delta < T", "design.delta");
  if (!(source.duration() < T)) throw ConfigError("source pulse 2π/ω must end before T", "source.omega");
  if (snapshot_stride < 0) throw ConfigError("must be >= 0", "snapshot_stride");
  try {
    agcm.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what(), "agcm");
  }
  try {
    build_geometry(geometry);
  } catch (const GeometryError& e) {
    throw ConfigError(e.what(), "geometry");
  } catch (const DiscretizationError& e) {
    throw ConfigError(e.what(), "geometry.h");
  }
}

// ---------------------------------------------------------------- Fourier, metric

FourierSnapshot fourier_snapshot(const TimeSeriesField& field, double omega) {
  FourierAccumulator acc(field.width(), omega, field.tau);
  for (std::size_t n = 0; n <= field.n_steps; ++n) acc.add(n, field.step(n));
  return acc.snapshot(field.nodes);
}

FourierAccumulator::FourierAccumulator(std::size_t width, double omega, double tau)
    : omega_(omega), tau_(tau), sum_(width) {}

void FourierAccumulator::add(std::size_t n, std::span<const double> u) {
  if (u.size() != sum_.size()) throw ShapeError("Fourier accumulator: field width changed");
  const double t = static_cast<double>(n) * tau_;
  const std::complex<double> w = std::polar(tau_, -omega_ * t);
  for (std::size_t k = 0; k < u.size(); ++k) sum_[k] += u[k] * w;
}

FourierSnapshot FourierAccumulator::snapshot(std::vector<int> nodes) const {
  if (nodes.size() != sum_.size()) throw ShapeError("Fourier snapshot: node list does not match");
  return {omega_, std::move(nodes), sum_};
}

double reflection_metric(const ObservationTrace& trace, double t1) {
  double r = 0.0;
  for (std::size_t n = 0; n <= trace.n_steps; ++n) {
    if (!(trace.time(n) > t1)) continue;
    double s = 0.0;
    for (std::size_t k = 0; k < trace.width(); ++k) {
      if (trace.tags[k] != BoundaryTag::S1Top) continue;
      const double u = trace.at(n, k);
      s += trace.weights[k] * u * u;
    }
    r += trace.tau * s;
  }
  return r;
}

// ---------------------------------------------------------------- setup

namespace {

template <class F>
decltype(auto) stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ExperimentError&) {
    throw;
  } catch (const Error& e) {
    throw ExperimentError(name, e.what());
  }
}

double coarse_tau(const ExperimentConfig& cfg) {
  if (cfg.tau > 0.0) return cfg.tau;
  // Largest T/N not above the CFL bound of the base grid.
  const double n = std::ceil(cfg.T / (cfg.cfl_safety * cfg.geometry.h) - 1e-9);
  return cfg.T / n;
}

}  // namespace

ExperimentSetup make_setup(const ExperimentConfig& cfg) {
  ExperimentSetup s;
  s.disc = build_geometry(cfg.geometry);
  const double h_min = std::min(s.disc.grid->h, s.disc.mesh->min_edge_length());
  s.tg = level_time_grid(cfg.T, coarse_tau(cfg), cfg.source.duration(), cfg.cfl_safety, h_min);
  return s;
}

ObservationTrace generate_target(const ExperimentConfig& cfg, const std::shared_ptr<const TriMesh>& mesh,
                                 const std::shared_ptr<const FdGrid>& grid, const TimeGrid& tg) {
  const HybridSystem sys(mesh, grid, CoefficientField::uniform(mesh, 1.0), cfg.target_obstacle);
  return forward_solve(sys, tg, cfg.source).trace;
}

// ---------------------------------------------------------------- outputs

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount())) != 1) {
      throw Error("sha256 update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("sha256 final failed");
  std::string hex;
  char b[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(b, sizeof b, "%02x", md[k]);
    hex += b;
  }
  return hex;
}

namespace {

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  /// Absolute path for a relative output name; the file is recorded for the manifest.
  std::string file(const std::string& rel) {
    const fs::path p = dir_ / rel;
    fs::create_directories(p.parent_path());
    files_.insert(rel);
    return p.string();
  }

  std::vector<ManifestEntry> write_manifest() const {
    std::vector<ManifestEntry> entries;
    for (const std::string& rel : files_) {
      const fs::path p = dir_ / rel;
      entries.push_back({rel, fs::file_size(p), sha256_file(p)});
    }
    std::ofstream os(dir_ / "manifest.jsonl");
    if (!os) throw Error("cannot write manifest");
    for (const ManifestEntry& e : entries) {
      nlohmann::json j;
      j["path"] = e.path;
      j["bytes"] = e.bytes;
      j["sha256"] = e.sha256;
      os << j.dump() << '\n';
    }
    if (!os) throw Error("manifest write failed");
    return entries;
  }

 private:
  fs::path dir_;
  std::set<std::string> files_;
};

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << j.dump(2) << '\n';
}

std::string numbered(const char* prefix, std::size_t n, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%06zu%s", prefix, n, suffix);
  return buf;
}

struct Simulation {
  ObservationTrace trace;
  FourierSnapshot fourier;
};

/// Forward solve that streams the Fourier sum and optional snapshots instead of storing the history.
Simulation simulate(const HybridSystem& sys, const TimeGrid& tg, const SourceSpec& src, int stride, Outputs& out,
                    const std::string& snapshot_prefix) {
  FourierAccumulator acc(sys.num_nodes(), src.omega, tg.tau);
  ForwardOptions fo;
  fo.observer = [&](std::size_t n, std::span<const double> u) {
    acc.add(n, u);
    if (stride > 0 && n % static_cast<std::size_t>(stride) == 0) {
      write_union_vtk(out.file(numbered(snapshot_prefix.c_str(), n, ".vtk")), sys, {{"u", u}}, "u");
    }
  };
  Simulation s;
  s.trace = forward_solve(sys, tg, src, fo).trace;
  std::vector<int> nodes(sys.num_nodes());
  for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k] = static_cast<int>(k);
  s.fourier = acc.snapshot(std::move(nodes));
  return s;
}

void write_fourier_vtk(const std::string& path, const HybridSystem& sys, const FourierSnapshot& f) {
  std::vector<double> re(f.values.size()), im(f.values.size());
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    re[k] = f.values[k].real();
    im[k] = f.values[k].imag();
  }
  write_union_vtk(path, sys, {{"fourier_re", re}, {"fourier_im", im}}, "fourier");
}

/// Copies trace values onto the layout of another level. The time grid of
/// the layout must refine the source grid by an integer factor; values in
/// between are interpolated linearly.
ObservationTrace resample_trace(const ObservationTrace& src, ObservationTrace layout) {
  if (src.width() != layout.width()) throw ShapeError("target trace and level layout differ in width");
  for (std::size_t k = 0; k < src.width(); ++k) {
    if (!(src.coords[k] == layout.coords[k])) throw ShapeError("target trace and level layout differ in nodes");
  }
  const double ratio = src.tau / layout.tau;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (factor == 0 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 ||
      src.n_steps * factor != layout.n_steps) {
    throw ShapeError("target time grid does not nest in the level time grid");
  }
  for (std::size_t n = 0; n <= layout.n_steps; ++n) {
    const std::size_t a = n / factor;
    const std::size_t r = n % factor;
    const double w = static_cast<double>(r) / static_cast<double>(factor);
    for (std::size_t k = 0; k < layout.width(); ++k) {
      const double va = src.at(a, k);
      const double vb = r == 0 ? va : src.at(a + 1, k);
      layout.values[n * layout.width() + k] = (1.0 - w) * va + w * vb;
    }
  }
  return layout;
}

nlohmann::json common_summary(const ExperimentConfig& cfg, ExperimentMode mode) {
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["h"] = cfg.geometry.h;
  j["T"] = cfg.T;
  j["omega"] = cfg.source.omega;
  j["amplitude"] = cfg.source.amplitude;
  j["c0"] = cfg.c0;
  j["obstacle"] = cfg.obstacle;
  return j;
}

void run_forward(const ExperimentConfig& cfg, ExperimentMode mode, Outputs& out, std::ostream* log) {
  const ExperimentSetup setup = stage("setup", [&] { return make_setup(cfg); });
  const auto& mesh = setup.disc.mesh;
  const bool target = mode == ExperimentMode::GenerateTarget;
  const CoefficientField c = CoefficientField::uniform(mesh, target ? 1.0 : cfg.c0);
  const HybridSystem sys = stage("assembly", [&] {
    return HybridSystem(mesh, setup.disc.grid, c, target ? cfg.target_obstacle : cfg.obstacle);
  });
  if (log) *log << to_string(mode) << ": " << sys.num_nodes() << " nodes, " << setup.tg.n_steps << " steps\n";
  const Simulation sim =
      stage("forward solve", [&] { return simulate(sys, setup.tg, cfg.source, cfg.snapshot_stride, out, "snapshots/u_"); });

  write_trace_csv(out.file(target ? "target.csv" : "trace.csv"), sim.trace);
  write_fourier_vtk(out.file("fourier.vtk"), sys, sim.fourier);
  write_mesh_vtk(out.file("mesh.vtk"), *mesh, {{"coefficient", c.values}});

  nlohmann::json j = common_summary(cfg, mode);
  j["tau"] = setup.tg.tau;
  j["n_steps"] = setup.tg.n_steps;
  j["nodes"] = sys.num_nodes();
  j["reflection"] = reflection_metric(sim.trace, setup.tg.t1);
  write_json(out.file("summary.json"), j);
}

void run_optimize(const ExperimentConfig& cfg, ExperimentMode mode, Outputs& out, std::ostream* log) {
  const ExperimentSetup setup = stage("setup", [&] { return make_setup(cfg); });

  std::optional<ObservationTrace> file_target;
  if (!cfg.target_file.empty()) {
    file_target = stage("target", [&] {
      const HybridSystem sys(setup.disc.mesh, setup.disc.grid, CoefficientField::uniform(setup.disc.mesh, 1.0), false);
      return read_trace_csv(cfg.target_file.string(), make_trace_layout(sys, setup.tg));
    });
  }

  AgcmProblem pb;
  pb.mesh = setup.disc.mesh;
  pb.grid = setup.disc.grid;
  pb.src = cfg.source;
  pb.T = cfg.T;
  pb.tau0 = setup.tg.tau;
  pb.t1 = setup.tg.t1;
  pb.cfl_safety = cfg.cfl_safety;
  pb.delta = cfg.delta_value();
  pb.c0_value = cfg.c0;
  pb.obstacle = cfg.obstacle;
  pb.target = [&](const std::shared_ptr<const TriMesh>& mesh, const TimeGrid& tg) {
    if (!file_target) return generate_target(cfg, mesh, setup.disc.grid, tg);
    const HybridSystem sys(mesh, setup.disc.grid, CoefficientField::uniform(mesh, 1.0), false);
    return resample_trace(*file_target, make_trace_layout(sys, tg));
  };

  AGCMConfig acfg = cfg.agcm;
  acfg.mode = mode == ExperimentMode::OptimizeInterpThenRefine ? AgcmMode::InterpThenOptimize
                                                               : AgcmMode::RefineEachLevel;
  std::vector<IterationRecord> records;
  const std::vector<LevelResult> levels = stage("optimizer", [&] {
    return run_agcm(pb, acfg, [&](const IterationRecord& r) {
      records.push_back(r);
      if (log) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "level %d m %d gamma %.4g alpha %.4g |g| %.6g F %.6g\n", r.level, r.m, r.gamma,
                      r.alpha, r.grad_norm, r.functional);
        *log << buf << std::flush;
      }
    });
  });

  {
    std::ofstream os(out.file("iterations.csv"));
    os << "level,m,gamma,alpha,grad_norm,functional\n";
    char buf[200];
    for (const IterationRecord& r : records) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", r.level, r.m, r.gamma, r.alpha, r.grad_norm,
                    r.functional);
      os << buf;
    }
    if (!os) throw ExperimentError("output", "cannot write iterations.csv");
  }

  nlohmann::json jl = nlohmann::json::array();
  for (const LevelResult& lr : levels) {
    std::vector<VtkScalar> cells{{"coefficient", lr.c.values}};
    if (lr.last_gradient) cells.push_back({"gradient", lr.last_gradient->values});
    char name[64];
    std::snprintf(name, sizeof name, "coefficient_level%d.vtk", lr.level);
    write_mesh_vtk(out.file(name), *lr.c.mesh, cells, "coefficient");
    nlohmann::json e;
    e["level"] = lr.level;
    e["triangles"] = lr.c.mesh->num_triangles();
    e["tau"] = lr.tg.tau;
    e["n_steps"] = lr.tg.n_steps;
    e["iterations"] = lr.state.history.size();
    e["stop_reason"] = to_string(lr.state.stop_reason);
    e["final_grad_norm"] = lr.final_grad_norm;
    e["final_functional"] = lr.state.history.empty() ? 0.0 : lr.state.history.back().functional;
    jl.push_back(e);
  }

  // Before/after comparison on the finest discretization.
  const LevelResult& last = levels.back();
  const auto& mesh = last.c.mesh;
  const CoefficientField c_init = CoefficientField::uniform(mesh, cfg.c0);
  const HybridSystem sys_init = stage("assembly", [&] { return HybridSystem(mesh, pb.grid, c_init, cfg.obstacle); });
  const HybridSystem sys_final = stage("assembly", [&] { return HybridSystem(mesh, pb.grid, last.c, cfg.obstacle); });
  const Simulation before =
      stage("forward solve", [&] { return simulate(sys_init, last.tg, cfg.source, 0, out, ""); });
  const Simulation after = stage("forward solve", [&] {
    return simulate(sys_final, last.tg, cfg.source, cfg.snapshot_stride, out, "snapshots/u_final_");
  });
  write_trace_csv(out.file("trace_initial.csv"), before.trace);
  write_trace_csv(out.file("trace_final.csv"), after.trace);
  write_fourier_vtk(out.file("fourier_initial.vtk"), sys_init, before.fourier);
  write_fourier_vtk(out.file("fourier_final.vtk"), sys_final, after.fourier);

  const double r0 = reflection_metric(before.trace, last.tg.t1);
  const double r1 = reflection_metric(after.trace, last.tg.t1);
  nlohmann::json j = common_summary(cfg, mode);
  j["levels"] = jl;
  j["reflection_initial"] = r0;
  j["reflection_final"] = r1;
  j["reflection_ratio"] = r0 > 0.0 ? r1 / r0 : 0.0;
  j["admissible"] = last.c.admissible();
  j["coefficient_min"] = last.c.min();
  j["coefficient_max"] = last.c.max();
  j["mirror_asymmetry"] = mirror_asymmetry(last.c);
  write_json(out.file("summary.json"), j);
  if (log) *log << "reflection " << r0 << " -> " << r1 << '\n';
}

}  // namespace

std::vector<ManifestEntry> run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  if (!cfg.mode) throw ConfigError("no mode given", "mode");
  cfg.validate();
  Outputs out(cfg.output_dir);
  const ExperimentMode mode = *cfg.mode;
  if (mode == ExperimentMode::Forward || mode == ExperimentMode::GenerateTarget) {
    run_forward(cfg, mode, out, log);
  } else {
    run_optimize(cfg, mode, out, log);
  }
  return stage("output", [&] { return out.write_manifest(); });
}

}  // namespace acoustica
