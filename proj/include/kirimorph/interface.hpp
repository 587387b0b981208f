#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kirimorph/analysis.hpp"

namespace kirimorph {

struct LayerConfig {
  std::string name;
  double thickness_mm = 0.0;
  std::string material;
  int subdivisions = 1;
};

struct OutputConfig {
  std::filesystem::path directory = "out";
  bool svg = true;
  bool polygons = true;
  bool stl = false;
  bool vtk = true;
  bool metrics = true;
  bool convergence = true;
};

/// Whole-run configuration. JSON keys carry their unit (`_mm`, `_K`, `_MPa`).
struct RunConfig {
  std::string name = "run";
  PatternSpec pattern = LotusSpec{};
  ArcOptions arc;
  MeshOptions mesh;
  std::vector<LayerConfig> layers = {{"substrate", 0.1, "shrinky_dink", 1}, {"kirigami", 1.8, "abs_kirigami", 1}};
  /// User materials; names not listed here resolve to the built-in presets.
  std::map<std::string, MaterialModel> materials;
  ThermalLoad load;
  SolveConfig solve;
  MidlineOptions midline;
  std::vector<double> sweep_gammas;
  unsigned sweep_parallel = 1;
  OutputConfig output;

  /// Throws ConfigError naming the field path.
  void validate() const;
  CaseSetup case_setup() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical form: every field written, keys sorted, two-space indent.
std::string serialize_run_config(const RunConfig& cfg);
std::uint64_t fnv1a64(const std::string& bytes);
std::string config_hash(const RunConfig& cfg);  // 16 hex digits

/// write-temp-then-rename
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Relative paths resolve against $KIRIMORPH_OUTPUT_ROOT when set, else the cwd.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,     // bad flags, config or parameter values
  kExitIo = 2,        // unreadable/unwritable or malformed input files
  kExitGeometry = 3,  // pattern or mesh construction failed
  kExitSolver = 4,    // singular system, inverted element
  kExitStall = 5,     // continuation stopped short of lambda = 1
  kExitInternal = 6,
};

int exit_code_for(const std::exception_ptr& e);

struct Metrics {
  std::string name;
  double lambda = 0;
  double H = 0, H_over_2R = 0;
  double curvature = 0, timoshenko = 0;  // strips only
  bool has_curvature = false;
  std::size_t elements = 0, nodes = 0;
  std::string status;  // ok | partial
};

std::string format_metrics_csv(const Metrics& m);

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::pair<std::string, double>> timings_s;
  std::vector<std::string> outputs;
  std::string status;
  double lambda = 0;
  std::string config;  // canonical config text, enough to reproduce the run
};

std::string format_manifest(const RunManifest& m);

struct PatternRun {
  PlanarLayout layout;
  double removed_fraction = 0;
  std::vector<std::string> outputs;
};

/// Layout exports (SVG, polygon text, optional STL of the Kirigami layer).
PatternRun run_pattern(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct MeshRun {
  LayeredMesh mesh;
  MeshAudit audit;
  std::vector<std::string> layered_violations;
  std::vector<std::string> outputs;
};

MeshRun run_mesh(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct SimulateRun {
  CaseOutcome outcome;
  Metrics metrics;
  RunManifest manifest;
};

/// Full pipeline; files are written even when the continuation stalls.
SimulateRun run_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct SweepRun {
  SweepResult sweep;
  RunManifest manifest;
};

SweepRun run_sweep(const RunConfig& cfg, const std::vector<double>& gammas, const std::filesystem::path& out_dir,
                   bool record_runtime = false);

const char* version_string();

}  // namespace kirimorph
