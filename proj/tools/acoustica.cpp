// acoustica: run forward simulations, target generation and coefficient optimization.
//
//   acoustica <mode> --config <file> [--out <dir>] [--stride N]
//   acoustica batch <config>... [--out-root <dir>]
//
// Exit codes: 0 success, 1 runtime failure, 2 bad command line or config.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "acoustica/experiment.hpp"

namespace {

using acoustica::ConfigError;
using acoustica::ExperimentConfig;

constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

int run_one(ExperimentConfig cfg, std::ostream& log, std::ostream& err) {
  try {
    const auto manifest = acoustica::run_experiment(cfg, &log);
    log << "wrote " << manifest.size() << " files to " << cfg.output_dir.string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const acoustica::ExperimentError& e) {
    err << "error in " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

unsigned max_workers() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ACOUSTICA_MAX_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) n = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      std::cerr << "ignoring ACOUSTICA_MAX_WORKERS=" << env << '\n';
    }
  }
  return n;
}

int batch_main(int argc, char** argv) {
  CLI::App app{"Run several experiment configs, each into its own output directory"};
  app.name("acoustica batch");
  std::vector<std::string> configs;
  std::string out_root;
  app.add_option("configs", configs, "Config files; each must set `mode`")->required()->check(CLI::ExistingFile);
  app.add_option("--out-root", out_root, "Write each run to <out-root>/<config stem>");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  std::vector<ExperimentConfig> cfgs;
  for (const std::string& path : configs) {
    try {
      ExperimentConfig cfg = acoustica::load_config(path);
      if (!cfg.mode) throw ConfigError(path + ": batch configs must set mode", "mode");
      if (!out_root.empty()) cfg.output_dir = std::filesystem::path(out_root) / std::filesystem::path(path).stem();
      cfgs.push_back(std::move(cfg));
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kUsage;
    }
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& c : cfgs) dirs.push_back(std::filesystem::weakly_canonical(c.output_dir));
  std::sort(dirs.begin(), dirs.end());
  if (std::adjacent_find(dirs.begin(), dirs.end()) != dirs.end()) {
    std::cerr << "config error: two batch entries share an output directory\n";
    return kUsage;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  std::mutex print;
  const auto worker = [&] {
    for (std::size_t k = next++; k < cfgs.size(); k = next++) {
      std::ostringstream log, err;
      const int rc = run_one(cfgs[k], log, err);
      std::lock_guard lock(print);
      std::cout << "[" << configs[k] << "]\n" << log.str();
      std::cerr << err.str();
      int w = worst.load();
      while (rc > w && !worst.compare_exchange_weak(w, rc)) {
      }
    }
  };
  const unsigned n = std::min<unsigned>(max_workers(), static_cast<unsigned>(cfgs.size()));
  std::vector<std::jthread> pool;
  for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  pool.clear();
  return worst.load();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::string(argv[1]) == "batch") return batch_main(argc - 1, argv + 1);

  CLI::App app{"2D acoustic inverse design: forward runs, target data, coefficient optimization"};
  app.name("acoustica");
  std::string mode_name;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> stride;
  app.add_option("mode", mode_name, "forward | generate_target | optimize | optimize_interp_then_refine | batch")
      ->required();
  app.add_option("--config", config_path, "Experiment config (INI)")->required();
  app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_option("--stride", stride, "Write a field snapshot every N steps (0 = none)")->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  ExperimentConfig cfg;
  try {
    const acoustica::ExperimentMode mode = acoustica::parse_mode(mode_name);
    cfg = acoustica::load_config(config_path);
    cfg.mode = mode;
    if (out_dir) cfg.output_dir = *out_dir;
    if (stride) cfg.snapshot_stride = *stride;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }
  return run_one(std::move(cfg), std::cout, std::cerr);
}
