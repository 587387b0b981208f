#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "kirimorph/error.hpp"
#include "kirimorph/materials.hpp"
#include "kirimorph/meshing.hpp"

namespace kirimorph {

using Vec18 = Eigen::Matrix<double, 18, 1>;
using Mat18 = Eigen::Matrix<double, 18, 18>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using SparseMat = Eigen::SparseMatrix<double>;

/// Wedge in reference position X (rows = nodes, bottom a b c then top a' b' c')
/// with displacement u ordered node-major (ux, uy, uz).
struct ElementState {
  std::size_t id = 0;
  Mat63 X = Mat63::Zero();
  Vec18 u = Vec18::Zero();
  int material = 0;
  Eigen::Matrix3d eigenstrain = Eigen::Matrix3d::Zero();
};

struct ElementFormulation {
  /// The lambda (volumetric) part of the energy is sampled at the in-plane
  /// centroid when nu reaches this value.
  double reduced_volumetric_nu = 0.45;
  /// One enhanced thickness-strain mode (E_zz linear in the thickness
  /// coordinate), condensed inside the element.
  bool enhanced_thickness_strain = true;
};

struct ElementResult {
  Vec18 f = Vec18::Zero();  // N
  Mat18 K = Mat18::Zero();  // N/mm
  double energy = 0.0;      // mJ
};

ElementResult element_force_tangent(const ElementState& state, const MaterialModel& mat,
                                    const ElementFormulation& form = {}, bool want_tangent = true);
double element_energy(const ElementState& state, const MaterialModel& mat, const ElementFormulation& form = {});
/// Cauchy stress at the element centroid.
Eigen::Matrix3d element_cauchy_stress(const ElementState& state, const MaterialModel& mat,
                                      const ElementFormulation& form = {});
double von_mises(const Eigen::Matrix3d& sigma);

struct Constraint {
  int node = 0;
  int dof = 0;  // 0 x, 1 y, 2 z
  double value = 0.0;
};

struct ConstraintSet {
  std::vector<Constraint> items;

  /// Throws ParameterError on a duplicate (node, dof).
  void add(int node, int dof, double value = 0.0);
  bool contains(int node, int dof) const;
  std::size_t size() const { return items.size(); }
};

enum class BoundaryMode {
  perimeter,  // z = 0 on the substrate footprint boundary + in-plane anchor
  free        // statically determinate 6-dof anchor only
};

/// `substrate` names the layer whose boundary is pinned; falls back to layer 0.
ConstraintSet build_constraints(const LayeredMesh& mesh, BoundaryMode mode = BoundaryMode::perimeter,
                                const std::string& substrate = "substrate");

enum class LinearSolverKind { direct, iterative };

struct SolveConfig {
  double newton_tol = 1e-8;
  int max_newton_iters = 30;
  int n_load_steps = 20;
  int max_halving_depth = 6;
  double imperfection_amplitude = -1.0;  // mm; negative = 1e-3 * substrate thickness
  std::uint64_t imperfection_seed = 1;
  int imperfection_bias = +1;  // +1 = +z, -1 = -z
  LinearSolverKind linear_solver = LinearSolverKind::direct;
  BoundaryMode boundary = BoundaryMode::perimeter;
  std::string substrate_layer = "substrate";
  unsigned threads = 1;
  bool line_search = true;
  bool keep_steps = true;
  ElementFormulation formulation;

  void validate() const;
};

struct ConvergenceRecord {
  int step = 0;
  double lambda = 0;
  int iter = 0;
  double residual = 0;  // relative to the full-load reference force
  bool accepted = false;
};

struct StepSnapshot {
  int step = 0;
  double lambda = 0;
  Eigen::VectorXd u;
};

struct MorphResult {
  std::vector<std::array<double, 3>> reference;  // with the imperfection applied
  std::vector<std::array<double, 3>> deformed;
  Eigen::VectorXd u;
  double lambda = 0.0;
  std::vector<double> element_stress;  // von Mises of the centroid Cauchy stress, MPa
  std::vector<ConvergenceRecord> history;
  std::vector<StepSnapshot> steps;  // accepted steps, lambda > 0
  double energy = 0.0;              // mJ
  double imperfection_amplitude = 0.0;
  double reference_force = 0.0;  // N
  std::size_t constraints = 0;
  std::vector<std::string> warnings;

  bool complete() const { return lambda >= 1.0; }
  std::vector<std::array<double, 3>> displacement() const;
};

/// Continuation made no progress at the smallest step; carries the partial result.
class ContinuationStall : public Error {
 public:
  explicit ContinuationStall(MorphResult partial)
      : Error("continuation stalled at lambda = " + std::to_string(partial.lambda)), result_(std::move(partial)) {}
  const MorphResult& result() const noexcept { return result_; }

 private:
  MorphResult result_;
};

struct AssembledSystem {
  Eigen::VectorXd residual;  // 3 * n_nodes
  SparseMat tangent;         // full symmetric storage
};

AssembledSystem assemble(const LayeredMesh& mesh, const Eigen::VectorXd& u, double lambda, const ThermalLoad& load,
                         const std::vector<MaterialModel>& materials, const ElementFormulation& form = {});
double strain_energy(const LayeredMesh& mesh, const Eigen::VectorXd& u, double lambda, const ThermalLoad& load,
                     const std::vector<MaterialModel>& materials, const ElementFormulation& form = {});

/// Solves K du = rhs on the free dofs; constrained entries of the result are 0.
Eigen::VectorXd linear_solve(const SparseMat& tangent, const Eigen::VectorXd& rhs, const ConstraintSet& constraints,
                             LinearSolverKind kind = LinearSolverKind::direct);

/// Reference geometry with the seeded imperfection added to interior substrate columns.
LayeredMesh apply_imperfection(const LayeredMesh& mesh, double amplitude, std::uint64_t seed, int bias,
                               const std::string& substrate = "substrate");
double default_imperfection_amplitude(const LayeredMesh& mesh, const std::string& substrate = "substrate");

using StepCallback = std::function<void(const LayeredMesh& reference, const StepSnapshot&)>;

/// Throws ContinuationStall when the smallest step fails before lambda = 1.
MorphResult solve_static(const LayeredMesh& mesh, const std::vector<MaterialModel>& materials, const ThermalLoad& load,
                         const SolveConfig& cfg = {}, const StepCallback& on_step = {});

/// `step,lambda,iter,residual`
std::string format_convergence_csv(const MorphResult& result);

}  // namespace kirimorph
