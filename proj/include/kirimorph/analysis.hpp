#pragma once

#include <array>
#include <string>
#include <vector>

#include "kirimorph/fem.hpp"
#include "kirimorph/geometry.hpp"
#include "kirimorph/materials.hpp"
#include "kirimorph/meshing.hpp"
#include "kirimorph/pattern.hpp"

namespace kirimorph {

struct Height {
  double H = 0.0;  // mm
  double H_over_2R = 0.0;
};

/// Highest point of a cloud above the plane z = 0.
Height measure_height(const std::vector<std::array<double, 3>>& points, double R);

/// Height of the substrate bottom surface (reference level 0) of a solved mesh;
/// the pinned perimeter stays at z = 0, so this reads 0 for the flat state.
Height measure_height(const LayeredMesh& mesh, const MorphResult& result, double R);
double bottom_height(const LayeredMesh& mesh, const std::vector<std::array<double, 3>>& reference,
                     const Eigen::VectorXd& u);

/// Bimorph curvature for a mismatch strain between two bonded layers.
double timoshenko_curvature(double E1, double t1, double E2, double t2, double mismatch_strain);

/// Signed curvature of the least-squares circle through planar points
/// (positive when the centre lies on the +y side of the point cloud).
double fit_circle_curvature(const std::vector<Point2>& pts);

struct MidlineOptions {
  int axis = 0;              // 0: strip along x, 1: along y
  double band = 0.75;        // mm half-width around the centreline
  double trim = -1.0;        // mm cut at each end; negative = total stack thickness
  std::string substrate = "substrate";
};

/// Circle fit to the deformed substrate mid-surface along the strip centreline,
/// in the plane spanned by the strip axis and z.
double fit_midline_curvature(const LayeredMesh& mesh, const MorphResult& result, const MidlineOptions& opts = {});

/// Everything needed to run pattern -> mesh -> solve.
struct CaseSetup {
  PatternSpec pattern = LotusSpec{};
  ArcOptions arc;
  MeshOptions mesh;
  std::vector<StackLayer> stack;
  std::vector<MaterialModel> materials;
  ThermalLoad load;
  SolveConfig solve;
};

/// Default bilayer: 0.1 mm shrink film under 1.8 mm ABS, both presets.
CaseSetup default_bilayer_case(const PatternSpec& pattern);

struct CaseOutcome {
  PlanarLayout layout;
  LayeredMesh mesh;
  MorphResult result;
  bool stalled = false;
  double pattern_s = 0, mesh_s = 0, solve_s = 0;
};

/// Continuation stalls are captured in the outcome; other errors propagate.
CaseOutcome run_case(const CaseSetup& setup, const StepCallback& on_step = {});

/// Bottom-surface height after linear interpolation between accepted steps.
double height_at_lambda(const LayeredMesh& mesh, const MorphResult& result, double lambda);

struct SweepRow {
  double gamma = 0, alpha = 0;
  double H = 0, H_over_2R = 0;  // at the common lambda
  double lambda = 0;            // comparison load factor
  double converged_lambda = 0;  // this case on its own
  double runtime_s = 0;
  std::string status;           // ok | partial | error: ...
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double common_lambda = 0.0;
};

/// `base.pattern` must be a LotusSpec; only gamma changes between cases.
SweepResult sweep_gamma(const CaseSetup& base, const std::vector<double>& gammas, unsigned parallel_cases = 1);

/// `gamma,alpha,H_mm,H_over_2R,lambda,runtime_s,converged_lambda,status`;
/// runtime is written as `-` unless requested, so reruns compare byte for byte.
std::string format_sweep_csv(const SweepResult& sweep, bool record_runtime = false);
/// Two columns: radius ratio, normalized height.
std::string format_sweep_plot(const SweepResult& sweep);

}  // namespace kirimorph
