#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acoustica/agcm.hpp"
#include "acoustica/errors.hpp"
#include "acoustica/fields.hpp"
#include "acoustica/mesh.hpp"

namespace acoustica {

enum class ExperimentMode { Forward, GenerateTarget, Optimize, OptimizeInterpThenRefine };

std::string_view to_string(ExperimentMode m);
/// Throws ConfigError for anything but the four mode names.
ExperimentMode parse_mode(std::string_view s);

struct ExperimentConfig {
  std::optional<ExperimentMode> mode;
  GeometryConfig geometry;
  /// G0 acts as a rigid hole in the simulated medium.
  bool obstacle = true;
  /// Same for the medium that produces the target data (c̃ ≡ 1).
  bool target_obstacle = false;
  double T = 2.0;
  /// Coarse-level time step; 0 derives it from cfl_safety.
  double tau = 0.0;
  double cfl_safety = 0.1;
  SourceSpec source{60.0, 1.0};
  /// Initial guess c̃0 in G1, also the coefficient used by `forward`.
  double c0 = 1.5;
  /// Width of z_δ; 0 means 0.1 T.
  double delta = 0.0;
  /// Observed data for the optimizer. Empty means: generate with c̃ ≡ 1.
  std::filesystem::path target_file;
  AGCMConfig agcm;
  std::filesystem::path output_dir = "out";
  /// Write a time snapshot every `stride` steps; 0 disables them.
  int snapshot_stride = 0;

  double delta_value() const { return delta > 0.0 ? delta : 0.1 * T; }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Reads the INI-style config. Relative paths inside it are taken relative to
/// the file's directory. Errors carry the line and field.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& is, const std::string& source_name = "<config>",
                              const std::filesystem::path& base_dir = {});

/// Σ_k u(x, t_k) e^{-iω t_k} τ over every stored level, per stored node.
struct FourierSnapshot {
  double omega = 0.0;
  std::vector<int> nodes;
  std::vector<std::complex<double>> values;
};

FourierSnapshot fourier_snapshot(const TimeSeriesField& field, double omega);

/// Streaming form of fourier_snapshot for solves that do not keep the history.
class FourierAccumulator {
 public:
  FourierAccumulator(std::size_t width, double omega, double tau);
  void add(std::size_t n, std::span<const double> u);
  FourierSnapshot snapshot(std::vector<int> nodes) const;

 private:
  double omega_;
  double tau_;
  std::vector<std::complex<double>> sum_;
};

/// R = Σ_{t_n > t1} τ Σ_{x ∈ S_T} W_x u(x, t_n)².
double reflection_metric(const ObservationTrace& trace, double t1);

/// Discretization of the configured geometry and its coarse time grid.
struct ExperimentSetup {
  Discretization disc;
  TimeGrid tg;
};
ExperimentSetup make_setup(const ExperimentConfig& cfg);

/// Forward solve with c̃ ≡ 1 on the given level.
ObservationTrace generate_target(const ExperimentConfig& cfg, const std::shared_ptr<const TriMesh>& mesh,
                                 const std::shared_ptr<const FdGrid>& grid, const TimeGrid& tg);

struct ManifestEntry {
  std::string path;
  std::uintmax_t bytes = 0;
  std::string sha256;
};

std::string sha256_file(const std::filesystem::path& path);

/// Runtime failure tagged with the stage that raised it.
class ExperimentError : public Error {
 public:
  ExperimentError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Runs one experiment into cfg.output_dir and writes `manifest.jsonl` there,
/// one JSON object per produced file, sorted by path.
std::vector<ManifestEntry> run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

}  // namespace acoustica
