#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "acoustica/experiment.hpp"
#include "acoustica/forward.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace acoustica;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "acoustica_tests" / name;
  fs::remove_all(p);
  return p;
}

TimeSeriesField one_node_field(double tau, std::size_t n_steps, double (*f)(double)) {
  TimeSeriesField u;
  u.tau = tau;
  u.n_steps = n_steps;
  u.nodes = {0};
  u.data.resize(n_steps + 1);
  for (std::size_t n = 0; n <= n_steps; ++n) u.data[n] = f(static_cast<double>(n) * tau);
  return u;
}

/// Small optimizer run on the h = 0.1 layout.
ExperimentConfig coarse_config(ExperimentMode mode, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.geometry = testing::coarse_geometry();
  cfg.T = 1.0;
  cfg.tau = 0.01;
  cfg.source = {40.0, 1.0};
  cfg.c0 = 1.5;
  cfg.agcm.max_inner_iters = 2;
  cfg.agcm.max_refinements = 1;
  cfg.agcm.theta = 1e-12;
  cfg.output_dir = out;
  return cfg;
}

const char* kConfig = R"(mode = optimize
output_dir = runs/a

[geometry]
h = 0.04
d = -1.12, 1.12, -0.64, 0.64
dfem = -1.0 1.0 -0.52 0.52
g1 = -0.6, 0.6, -0.32, 0.32
g0 = -0.4, 0.4, -0.12, 0.12
obstacle = true

[time]
T = 2.0
tau = 0.002

[source]
omega = 60
amplitude = 2

[design]
c0 = 2.0
delta = 0.3

[agcm]
gamma0 = 0.02
p = 0.5
max_refinements = 2
level_stop = no
)";

}  // namespace

TEST_CASE("sha256 of a known string") {
  const fs::path dir = scratch("sha");
  fs::create_directories(dir);
  std::ofstream(dir / "abc.txt") << "abc";
  CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("Fourier snapshot of the zero field is zero") {
  TimeSeriesField u;
  u.tau = 0.01;
  u.n_steps = 50;
  u.nodes = {0, 1, 2};
  u.data.assign(51 * 3, 0.0);
  const FourierSnapshot f = fourier_snapshot(u, 40.0);
  REQUIRE(f.values.size() == 3);
  for (const auto& v : f.values) CHECK(v == std::complex<double>(0.0, 0.0));
}

TEST_CASE("Fourier snapshot of sin(wt) over whole periods") {
  const double omega = 40.0;
  const double period = 2.0 * std::numbers::pi / omega;
  const double T = 5.0 * period;
  for (std::size_t n_steps : {100u, 400u}) {
    const double tau = T / static_cast<double>(n_steps);
    static double w;
    w = omega;
    const TimeSeriesField u = one_node_field(tau, n_steps, [](double t) { return std::sin(w * t); });
    const FourierSnapshot f = fourier_snapshot(u, omega);
    CHECK(std::abs(f.values[0].imag() + T / 2.0) <= 2.0 * tau);
    CHECK(std::abs(f.values[0].real()) <= 2.0 * tau);
  }
}

TEST_CASE("Fourier snapshot is linear") {
  std::mt19937_64 rng(7);
  TimeSeriesField u, v, w;
  for (TimeSeriesField* f : {&u, &v, &w}) {
    f->tau = 0.005;
    f->n_steps = 80;
    f->nodes = {3, 4, 5, 6};
  }
  u.data = testing::random_vector(81 * 4, rng);
  v.data = testing::random_vector(81 * 4, rng);
  const double a = 0.7, b = -2.3;
  w.data.resize(u.data.size());
  for (std::size_t k = 0; k < w.data.size(); ++k) w.data[k] = a * u.data[k] + b * v.data[k];
  const auto fu = fourier_snapshot(u, 60.0), fv = fourier_snapshot(v, 60.0), fw = fourier_snapshot(w, 60.0);
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(fw.values[k] - (a * fu.values[k] + b * fv.values[k])) <= 1e-12);
  CHECK(fw.nodes == u.nodes);
}

TEST_CASE("reflection metric by hand") {
  ObservationTrace tr;
  tr.tau = 0.5;
  tr.n_steps = 3;
  tr.nodes = {0, 1, 2};
  tr.coords = {{0, 0}, {0, 1}, {1, 1}};
  tr.weights = {1.0, 0.5, 2.0};
  tr.tags = {BoundaryTag::S2Bottom, BoundaryTag::S1Top, BoundaryTag::S1Top};
  // rows: t = 0, 0.5, 1, 1.5
  tr.values = {9, 1, 1, 9, 2, 3, 9, 1, -1, 9, 0, 2};
  // t1 = 0.5: levels t = 1 and 1.5 count; bottom ignored.
  // t = 1:   0.5*1 + 2*1 = 2.5;  t = 1.5: 0 + 2*4 = 8
  CHECK(reflection_metric(tr, 0.5) == doctest::Approx(0.5 * (2.5 + 8.0)).epsilon(1e-15));
  CHECK(reflection_metric(tr, 2.0) == 0.0);
}

TEST_CASE("config file parsing") {
  std::istringstream is(kConfig);
  const ExperimentConfig cfg = parse_config(is, "test.ini", "base");
  REQUIRE(cfg.mode);
  CHECK(*cfg.mode == ExperimentMode::Optimize);
  CHECK(cfg.output_dir == fs::path("base/runs/a"));
  CHECK(cfg.geometry.h == 0.04);
  CHECK(cfg.geometry.dfem == Rect{-1.0, 1.0, -0.52, 0.52});
  CHECK(cfg.geometry.d == Rect{-1.12, 1.12, -0.64, 0.64});
  CHECK(cfg.obstacle);
  CHECK_FALSE(cfg.target_obstacle);
  CHECK(cfg.T == 2.0);
  CHECK(cfg.tau == 0.002);
  CHECK(cfg.source.omega == 60.0);
  CHECK(cfg.source.amplitude == 2.0);
  CHECK(cfg.c0 == 2.0);
  CHECK(cfg.delta_value() == 0.3);
  CHECK(cfg.agcm.gamma0 == 0.02);
  CHECK(cfg.agcm.p_exponent == 0.5);
  CHECK(cfg.agcm.max_refinements == 2);
  CHECK_FALSE(cfg.agcm.level_stop);
  CHECK(cfg.agcm.max_inner_iters == AGCMConfig{}.max_inner_iters);
}

TEST_CASE("config errors name the line and field") {
  const auto error_of = [](const std::string& text) -> std::pair<std::string, std::size_t> {
    std::istringstream is(text);
    try {
      parse_config(is, "x.ini");
    } catch (const ConfigError& e) {
      return {e.field(), e.line()};
    }
    return {"<none>", 0};
  };
  CHECK(error_of("[time]\nT = 2\ntau = fast\n") == std::pair<std::string, std::size_t>{"time.tau", 3});
  CHECK(error_of("\n[source]\nomgea = 3\n") == std::pair<std::string, std::size_t>{"source.omgea", 3});
  CHECK(error_of("[design]\nc0 = 0.5\n") == std::pair<std::string, std::size_t>{"design.c0", 2});
  CHECK(error_of("mode = sideways\n") == std::pair<std::string, std::size_t>{"mode", 1});
  CHECK(error_of("[geometry]\ng1 = 1, 2, 3\n") == std::pair<std::string, std::size_t>{"geometry.g1", 2});
  CHECK(error_of("[geometry]\nh = 0.03\n") == std::pair<std::string, std::size_t>{"geometry.h", 2});
  CHECK(error_of("[source]\nomega = -1\n").first == "source.omega");
  CHECK(error_of("[agcm]\np = 1.5\n").first == "agcm");
  CHECK(error_of("[time\nT = 1\n").second == 1);
  CHECK_THROWS_AS(parse_mode("sideways"), ConfigError);
  CHECK(parse_mode("optimize_interp_then_refine") == ExperimentMode::OptimizeInterpThenRefine);
}

TEST_CASE("default time step follows the CFL bound") {
  ExperimentConfig cfg = coarse_config(ExperimentMode::Forward, "unused");
  cfg.tau = 0.0;
  const ExperimentSetup s = make_setup(cfg);
  CHECK(s.tg.tau <= cfg.cfl_safety * cfg.geometry.h + 1e-15);
  CHECK(s.tg.n_steps == 100);
}

TEST_CASE("target is quiet on the top boundary after the pulse has passed") {
  ExperimentConfig cfg;
  cfg.source = {60.0, 1.0};
  cfg.tau = 0.002;
  const ExperimentSetup s = make_setup(cfg);
  const ObservationTrace tr = generate_target(cfg, s.disc.mesh, s.disc.grid, s.tg);
  const double transit = cfg.geometry.d.height();
  double worst = 0.0, peak = 0.0;
  for (std::size_t n = 0; n <= tr.n_steps; ++n) {
    for (std::size_t k = 0; k < tr.width(); ++k) {
      if (tr.tags[k] != BoundaryTag::S1Top) continue;
      peak = std::max(peak, std::abs(tr.at(n, k)));
      if (tr.time(n) > transit + s.tg.t1) worst = std::max(worst, std::abs(tr.at(n, k)));
    }
  }
  MESSAGE("late top amplitude " << worst << " (peak " << peak << ")");
  CHECK(peak > 0.01);
  CHECK(worst <= 1e-3);
}

TEST_CASE("zero amplitude gives a zero target") {
  ExperimentConfig cfg = coarse_config(ExperimentMode::GenerateTarget, "unused");
  cfg.source.amplitude = 0.0;
  const ExperimentSetup s = make_setup(cfg);
  const ObservationTrace tr = generate_target(cfg, s.disc.mesh, s.disc.grid, s.tg);
  for (double v : tr.values) REQUIRE(v == 0.0);
}

TEST_CASE("forward run writes trace, snapshots and a consistent manifest") {
  const fs::path dir = scratch("forward");
  ExperimentConfig cfg = coarse_config(ExperimentMode::Forward, dir);
  cfg.c0 = 1.0;
  cfg.snapshot_stride = 25;
  const std::vector<ManifestEntry> m = run_experiment(cfg);

  std::set<std::string> listed;
  for (const ManifestEntry& e : m) {
    listed.insert(e.path);
    CHECK(e.sha256 == sha256_file(dir / e.path));
    CHECK(e.bytes == fs::file_size(dir / e.path));
  }
  std::set<std::string> on_disk;
  for (const auto& f : fs::recursive_directory_iterator(dir)) {
    if (f.is_regular_file()) on_disk.insert(fs::relative(f.path(), dir).generic_string());
  }
  on_disk.erase("manifest.jsonl");
  CHECK(listed == on_disk);
  CHECK(listed.count("trace.csv"));
  CHECK(listed.count("fourier.vtk"));
  CHECK(listed.count("snapshots/u_000100.vtk"));
  CHECK(listed.size() == 4 + 5);

  std::istringstream lines(read_file(dir / "manifest.jsonl"));
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("sha256").get<std::string>().size() == 64);
    ++count;
  }
  CHECK(count == m.size());
}

TEST_CASE("generate_target twice gives bit-identical CSV") {
  const fs::path a = scratch("target_a"), b = scratch("target_b");
  run_experiment(coarse_config(ExperimentMode::GenerateTarget, a));
  run_experiment(coarse_config(ExperimentMode::GenerateTarget, b));
  CHECK(read_file(a / "target.csv") == read_file(b / "target.csv"));
  CHECK(read_file(a / "manifest.jsonl") == read_file(b / "manifest.jsonl"));
}

TEST_CASE("optimize consumes a generated target and reports per-level output") {
  const fs::path gen = scratch("pipe_target"), opt = scratch("pipe_opt");
  run_experiment(coarse_config(ExperimentMode::GenerateTarget, gen));
  ExperimentConfig cfg = coarse_config(ExperimentMode::Optimize, opt);
  cfg.target_file = gen / "target.csv";
  const auto m = run_experiment(cfg);
  std::set<std::string> listed;
  for (const auto& e : m) listed.insert(e.path);
  CHECK(listed.count("iterations.csv"));
  CHECK(listed.count("coefficient_level0.vtk"));
  CHECK(listed.count("coefficient_level1.vtk"));
  CHECK(listed.count("summary.json"));

  const std::string csv = read_file(opt / "iterations.csv");
  CHECK(csv.rfind("level,m,gamma,alpha,grad_norm,functional\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2);

  const auto summary = nlohmann::json::parse(read_file(opt / "summary.json"));
  CHECK(summary.at("levels").size() == 2);
  CHECK(summary.at("admissible").get<bool>());
  CHECK(summary.at("mirror_asymmetry").get<double>() <= 1e-12);

  // Level 0 sees exactly the file data, so it matches a run that generates the target itself.
  const fs::path own = scratch("pipe_own");
  ExperimentConfig self = coarse_config(ExperimentMode::Optimize, own);
  self.agcm.max_refinements = 0;
  ExperimentConfig file = cfg;
  file.agcm.max_refinements = 0;
  file.output_dir = scratch("pipe_file");
  run_experiment(self);
  run_experiment(file);
  CHECK(read_file(own / "iterations.csv") == read_file(file.output_dir / "iterations.csv"));
}

TEST_CASE("a target file on the wrong time grid is rejected") {
  const fs::path gen = scratch("bad_target");
  ExperimentConfig g = coarse_config(ExperimentMode::GenerateTarget, gen);
  g.tau = 0.005;
  run_experiment(g);
  ExperimentConfig cfg = coarse_config(ExperimentMode::Optimize, scratch("bad_target_opt"));
  cfg.target_file = gen / "target.csv";
  CHECK_THROWS_AS(run_experiment(cfg), ExperimentError);
}

TEST_CASE("interpolate-then-optimize mode runs two levels") {
  const fs::path dir = scratch("interp");
  ExperimentConfig cfg = coarse_config(ExperimentMode::OptimizeInterpThenRefine, dir);
  cfg.agcm.max_refinements = 2;
  run_experiment(cfg);
  const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  REQUIRE(summary.at("levels").size() == 2);
  CHECK(summary.at("levels")[1].at("level").get<int>() == 2);
}

TEST_CASE("run_experiment without a mode is a config error") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}
