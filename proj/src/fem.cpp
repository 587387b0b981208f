#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "kirimorph/fem.hpp"

namespace kirimorph {

// ---------------------------------------------------------------- constraints

void ConstraintSet::add(int node, int dof, double value) {
  if (dof < 0 || dof > 2) throw ParameterError("constraint dof must be 0, 1 or 2");
  if (contains(node, dof))
    throw ParameterError("duplicate constraint on node " + std::to_string(node) + " dof " + std::to_string(dof));
  items.push_back({node, dof, value});
}

bool ConstraintSet::contains(int node, int dof) const {
  return std::any_of(items.begin(), items.end(), [&](const Constraint& c) { return c.node == node && c.dof == dof; });
}

namespace {

int substrate_index(const LayeredMesh& mesh, const std::string& name) {
  if (mesh.layer_names.empty()) throw ParameterError("mesh has no layers");
  const int i = mesh.layer_index(name);
  return i < 0 ? 0 : i;
}

std::vector<char> nodes_of_layer(const LayeredMesh& mesh, int layer) {
  std::vector<char> in(mesh.nodes.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    if (mesh.element_layer[e] == layer)
      for (int v : mesh.elements[e]) in[v] = 1;
  return in;
}

}  // namespace

ConstraintSet build_constraints(const LayeredMesh& mesh, BoundaryMode mode, const std::string& substrate) {
  const int sub = substrate_index(mesh, substrate);
  const auto in_sub = nodes_of_layer(mesh, sub);
  int bottom = std::numeric_limits<int>::max();
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (in_sub[n]) bottom = std::min(bottom, mesh.node_level[n]);

  std::vector<int> ring;  // boundary substrate nodes on the bottom level
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (in_sub[n] && mesh.node_on_boundary[mesh.node_2d[n]] && mesh.node_level[n] == bottom)
      ring.push_back(static_cast<int>(n));
  if (ring.size() < 2) throw DegenerateGeometryError("substrate has fewer than 2 boundary nodes");

  auto xy = [&](int n) { return Point2{mesh.nodes[n][0], mesh.nodes[n][1]}; };
  int A = ring[0];
  for (int n : ring) {
    const auto p = xy(n), q = xy(A);
    if (p.x < q.x || (p.x == q.x && p.y < q.y)) A = n;
  }
  int B = -1;
  double best = -1.0;
  for (int n : ring)
    if (const double d = distance(xy(n), xy(A)); d > best) best = d, B = n;
  if (best <= 0.0) throw DegenerateGeometryError("anchor nodes coincide");
  const Point2 ab = xy(B) - xy(A);
  const int perp = std::abs(ab.x) >= std::abs(ab.y) ? 1 : 0;

  ConstraintSet cs;
  if (mode == BoundaryMode::perimeter) {
    for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
      if (in_sub[n] && mesh.node_on_boundary[mesh.node_2d[n]]) cs.add(static_cast<int>(n), 2);
    cs.add(A, 0);
    cs.add(A, 1);
    cs.add(B, perp);
    return cs;
  }
  int C = -1;
  best = 0.0;
  for (int n : ring)
    if (const double d = std::abs(cross(ab, xy(n) - xy(A))); d > best) best = d, C = n;
  if (C < 0 || best <= 1e-12 * dot(ab, ab)) throw DegenerateGeometryError("substrate boundary is collinear");
  cs.add(A, 0);
  cs.add(A, 1);
  cs.add(A, 2);
  cs.add(B, perp);
  cs.add(B, 2);
  cs.add(C, 2);
  return cs;
}

// ------------------------------------------------------------------ assembly

namespace {

class Model {
 public:
  Model(const LayeredMesh& mesh, const std::vector<MaterialModel>& mats, const ThermalLoad& load,
        const ElementFormulation& form, unsigned threads)
      : mesh_(mesh), mats_(mats), form_(form), threads_(std::max(1u, threads)) {
    for (std::size_t l = 0; l < mesh.layer_names.size(); ++l) {
      const int m = mesh.layer_materials[l];
      if (m < 0 || static_cast<std::size_t>(m) >= mats.size())
        throw ParameterError("layer '" + mesh.layer_names[l] + "' references missing material " + std::to_string(m));
      mats[m].validate();
      eigen_.push_back(thermal_eigenstrain(mats[m], load.delta_T, load.mode));
    }
  }

  std::size_t n_dofs() const { return 3 * mesh_.nodes.size(); }
  std::size_t n_elements() const { return mesh_.elements.size(); }
  const LayeredMesh& mesh() const { return mesh_; }

  ElementState state(std::size_t e, const Eigen::VectorXd& u, double lambda) const {
    ElementState s;
    s.id = e;
    const auto& E = mesh_.elements[e];
    for (int a = 0; a < 6; ++a)
      for (int k = 0; k < 3; ++k) {
        s.X(a, k) = mesh_.nodes[E[a]][k];
        s.u(3 * a + k) = u(3 * E[a] + k);
      }
    const int layer = mesh_.element_layer[e];
    s.material = mesh_.layer_materials[layer];
    s.eigenstrain = lambda * eigen_[layer];
    return s;
  }

  const MaterialModel& material(std::size_t e) const { return mats_[mesh_.layer_materials[mesh_.element_layer[e]]]; }

  /// Evaluates all elements, handing results to `sink` in element order.
  template <class Sink>
  void evaluate(const Eigen::VectorXd& u, double lambda, bool tangent, Sink&& sink) const {
    constexpr std::size_t kChunk = 2048;
    std::vector<ElementResult> buf(std::min(kChunk, n_elements()));
    for (std::size_t b = 0; b < n_elements(); b += kChunk) {
      const std::size_t n = std::min(kChunk, n_elements() - b);
      auto work = [&](std::size_t lo, std::size_t hi, std::exception_ptr& err) {
        try {
          for (std::size_t i = lo; i < hi; ++i)
            buf[i] = element_force_tangent(state(b + i, u, lambda), material(b + i), form_, tangent);
        } catch (...) {
          err = std::current_exception();
        }
      };
      const unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads_, (n + 63) / 64));
      std::vector<std::exception_ptr> errs(t);
      if (t <= 1) {
        work(0, n, errs[0]);
      } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < t; ++k)
          pool.emplace_back(work, n * k / t, n * (k + 1) / t, std::ref(errs[k]));
        for (auto& th : pool) th.join();
      }
      for (auto& e : errs)
        if (e) std::rethrow_exception(e);  // lowest chunk first: deterministic
      for (std::size_t i = 0; i < n; ++i) sink(b + i, buf[i]);
    }
  }

  double energy(const Eigen::VectorXd& u, double lambda) const {
    double U = 0.0;
    for (std::size_t e = 0; e < n_elements(); ++e) U += element_energy(state(e, u, lambda), material(e), form_);
    return U;
  }

 private:
  const LayeredMesh& mesh_;
  const std::vector<MaterialModel>& mats_;
  ElementFormulation form_;
  unsigned threads_;
  std::vector<Eigen::Matrix3d> eigen_;
};

std::array<int, 18> element_dofs(const LayeredMesh& mesh, std::size_t e) {
  std::array<int, 18> d{};
  for (int a = 0; a < 6; ++a)
    for (int k = 0; k < 3; ++k) d[3 * a + k] = 3 * mesh.elements[e][a] + k;
  return d;
}

/// Constraint-reduced system with a fixed lower-triangular sparsity pattern.
class ReducedSystem {
 public:
  ReducedSystem(const Model& model, const ConstraintSet& cs) : model_(model) {
    const std::size_t nd = model.n_dofs();
    free_.assign(nd, 0);
    for (const auto& c : cs.items) {
      if (c.node < 0 || static_cast<std::size_t>(c.node) >= model.mesh().nodes.size())
        throw ParameterError("constraint on missing node " + std::to_string(c.node));
      free_[3 * c.node + c.dof] = -1;
    }
    n_free_ = 0;
    for (auto& f : free_) f = f < 0 ? -1 : n_free_++;

    const std::size_t ne = model.n_elements();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(ne * 171);
    for (std::size_t e = 0; e < ne; ++e) {
      const auto d = element_dofs(model.mesh(), e);
      for (int i = 0; i < 18; ++i)
        for (int j = 0; j < 18; ++j) {
          const int fi = free_[d[i]], fj = free_[d[j]];
          if (fi >= 0 && fj >= 0 && fi >= fj) trip.emplace_back(fi, fj, 0.0);
        }
    }
    K_.resize(n_free_, n_free_);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();
    slot_.assign(ne * 324, -1);
    const int* outer = K_.outerIndexPtr();
    const int* inner = K_.innerIndexPtr();
    for (std::size_t e = 0; e < ne; ++e) {
      const auto d = element_dofs(model.mesh(), e);
      for (int i = 0; i < 18; ++i)
        for (int j = 0; j < 18; ++j) {
          const int fi = free_[d[i]], fj = free_[d[j]];
          if (fi < 0 || fj < 0 || fi < fj) continue;
          const int* p = std::lower_bound(inner + outer[fj], inner + outer[fj + 1], fi);
          slot_[e * 324 + i * 18 + j] = static_cast<int>(p - inner);
        }
    }
  }

  int n_free() const { return n_free_; }
  const std::vector<int>& free_index() const { return free_; }
  const SparseMat& tangent() const { return K_; }

  /// Returns the total energy; fills the free residual and (optionally) the tangent.
  double assemble(const Eigen::VectorXd& u, double lambda, Eigen::VectorXd& r, bool tangent) {
    r.setZero(n_free_);
    if (tangent) std::fill(K_.valuePtr(), K_.valuePtr() + K_.nonZeros(), 0.0);
    double U = 0.0;
    double* val = K_.valuePtr();
    model_.evaluate(u, lambda, tangent, [&](std::size_t e, const ElementResult& er) {
      U += er.energy;
      const auto d = element_dofs(model_.mesh(), e);
      for (int i = 0; i < 18; ++i)
        if (const int fi = free_[d[i]]; fi >= 0) r(fi) += er.f(i);
      if (!tangent) return;
      const int* sl = &slot_[e * 324];
      for (int i = 0; i < 18; ++i)
        for (int j = 0; j < 18; ++j)
          if (const int s = sl[i * 18 + j]; s >= 0) val[s] += er.K(i, j);
    });
    return U;
  }

 private:
  const Model& model_;
  std::vector<int> free_;
  int n_free_ = 0;
  SparseMat K_;
  std::vector<int> slot_;
};

class LinearSolver {
 public:
  explicit LinearSolver(LinearSolverKind kind) : kind_(kind) {}

  Eigen::VectorXd solve(const SparseMat& K, const Eigen::VectorXd& b) {
    if (K.rows() == 0) return Eigen::VectorXd();
    Eigen::VectorXd x;
    if (kind_ == LinearSolverKind::direct) {
      if (!analyzed_) {
        ldlt_.analyzePattern(K);
        analyzed_ = true;
      }
      ldlt_.factorize(K);
      if (ldlt_.info() != Eigen::Success) throw SingularSystemError("sparse LDL^T factorization failed");
      const auto& D = ldlt_.vectorD();
      const double dmax = D.cwiseAbs().maxCoeff();
      if (!(dmax > 0.0) || D.cwiseAbs().minCoeff() <= 1e-14 * dmax)
        throw SingularSystemError("tangent is singular to working precision");
      x = ldlt_.solve(b);
    } else {
      Eigen::ConjugateGradient<SparseMat, Eigen::Lower, Eigen::DiagonalPreconditioner<double>> cg;
      cg.setTolerance(1e-10);
      cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * K.rows()));
      cg.compute(K);
      x = cg.solve(b);
      if (cg.info() != Eigen::Success) throw SingularSystemError("conjugate gradients did not converge");
    }
    if (!x.allFinite()) throw SingularSystemError("non-finite solution");
    return x;
  }

 private:
  LinearSolverKind kind_;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SparseMat, Eigen::Lower> ldlt_;
};

}  // namespace

AssembledSystem assemble(const LayeredMesh& mesh, const Eigen::VectorXd& u, double lambda, const ThermalLoad& load,
                         const std::vector<MaterialModel>& materials, const ElementFormulation& form) {
  const Model model(mesh, materials, load, form, 1);
  if (static_cast<std::size_t>(u.size()) != model.n_dofs()) throw ParameterError("displacement vector has wrong size");
  AssembledSystem out;
  out.residual.setZero(model.n_dofs());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(model.n_elements() * 324);
  model.evaluate(u, lambda, true, [&](std::size_t e, const ElementResult& er) {
    const auto d = element_dofs(mesh, e);
    for (int i = 0; i < 18; ++i) {
      out.residual(d[i]) += er.f(i);
      for (int j = 0; j < 18; ++j) trip.emplace_back(d[i], d[j], er.K(i, j));
    }
  });
  out.tangent.resize(model.n_dofs(), model.n_dofs());
  out.tangent.setFromTriplets(trip.begin(), trip.end());
  return out;
}

double strain_energy(const LayeredMesh& mesh, const Eigen::VectorXd& u, double lambda, const ThermalLoad& load,
                     const std::vector<MaterialModel>& materials, const ElementFormulation& form) {
  const Model model(mesh, materials, load, form, 1);
  if (static_cast<std::size_t>(u.size()) != model.n_dofs()) throw ParameterError("displacement vector has wrong size");
  return model.energy(u, lambda);
}

Eigen::VectorXd linear_solve(const SparseMat& K, const Eigen::VectorXd& rhs, const ConstraintSet& cs,
                             LinearSolverKind kind) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n || rhs.size() != n) throw ParameterError("linear_solve: size mismatch");
  std::vector<int> idx(n, 0);
  for (const auto& c : cs.items) {
    const Eigen::Index d = 3 * static_cast<Eigen::Index>(c.node) + c.dof;
    if (d < 0 || d >= n) throw ParameterError("constraint outside the system");
    idx[d] = -1;
  }
  int nf = 0;
  for (auto& i : idx) i = i < 0 ? -1 : nf++;
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index c = 0; c < K.outerSize(); ++c)
    for (SparseMat::InnerIterator it(K, c); it; ++it) {
      const int fi = idx[it.row()], fj = idx[it.col()];
      if (fi >= 0 && fj >= 0 && fi >= fj) trip.emplace_back(fi, fj, it.value());
    }
  SparseMat Kf(nf, nf);
  Kf.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd bf(nf);
  for (Eigen::Index i = 0; i < n; ++i)
    if (idx[i] >= 0) bf(idx[i]) = rhs(i);
  LinearSolver solver(kind);
  const Eigen::VectorXd xf = solver.solve(Kf, bf);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (idx[i] >= 0) x(i) = xf(idx[i]);
  return x;
}

// ---------------------------------------------------------------- imperfection

double default_imperfection_amplitude(const LayeredMesh& mesh, const std::string& substrate) {
  return 1e-3 * mesh.layer_thickness[substrate_index(mesh, substrate)];
}

LayeredMesh apply_imperfection(const LayeredMesh& mesh, double amplitude, std::uint64_t seed, int bias,
                               const std::string& substrate) {
  if (amplitude < 0.0) throw ParameterError("imperfection amplitude must be >= 0");
  const int sub = substrate_index(mesh, substrate);
  std::vector<char> column(mesh.base.nodes.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    if (mesh.element_layer[e] == sub)
      for (int v : mesh.base.triangles[mesh.element_triangle[e]]) column[v] = 1;
  std::mt19937_64 rng(seed);
  const double sign = bias < 0 ? -1.0 : 1.0;
  std::vector<double> dz(column.size(), 0.0);
  for (std::size_t v = 0; v < column.size(); ++v) {
    if (!column[v] || mesh.node_on_boundary[v]) continue;
    const double r = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    dz[v] = sign * amplitude * (0.5 + 0.5 * r);
  }
  LayeredMesh out = mesh;
  for (std::size_t n = 0; n < out.nodes.size(); ++n) out.nodes[n][2] += dz[out.node_2d[n]];
  return out;
}

// ------------------------------------------------------------------- solver

void SolveConfig::validate() const {
  if (!(newton_tol > 0.0)) throw ParameterError("newton_tol must be > 0");
  if (max_newton_iters < 1) throw ParameterError("max_newton_iters must be >= 1");
  if (n_load_steps < 1) throw ParameterError("n_load_steps must be >= 1");
  if (max_halving_depth < 0 || max_halving_depth > 20) throw ParameterError("max_halving_depth must lie in [0, 20]");
  if (imperfection_bias != 1 && imperfection_bias != -1) throw ParameterError("imperfection_bias must be +1 or -1");
}

std::vector<std::array<double, 3>> MorphResult::displacement() const {
  std::vector<std::array<double, 3>> d(reference.size());
  for (std::size_t n = 0; n < d.size(); ++n) d[n] = {u(3 * n), u(3 * n + 1), u(3 * n + 2)};
  return d;
}

namespace {

enum class Outcome { converged, failed };

struct NewtonStats {
  Outcome outcome = Outcome::failed;
  int iterations = 0;
  std::string reason;
};

}  // namespace

MorphResult solve_static(const LayeredMesh& mesh0, const std::vector<MaterialModel>& materials,
                         const ThermalLoad& load, const SolveConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  if (load.delta_T < 0.0) throw ParameterError("delta_T must be >= 0");
  if (mesh0.elements.empty()) throw ParameterError("mesh has no elements");

  MorphResult res;
  res.imperfection_amplitude =
      cfg.imperfection_amplitude < 0.0 ? default_imperfection_amplitude(mesh0, cfg.substrate_layer) : cfg.imperfection_amplitude;
  const LayeredMesh mesh =
      apply_imperfection(mesh0, res.imperfection_amplitude, cfg.imperfection_seed, cfg.imperfection_bias, cfg.substrate_layer);
  const ConstraintSet cs = build_constraints(mesh, cfg.boundary, cfg.substrate_layer);
  res.constraints = cs.size();

  const Model model(mesh, materials, load, cfg.formulation, cfg.threads);
  ReducedSystem sys(model, cs);
  LinearSolver solver(cfg.linear_solver);
  const auto& free = sys.free_index();
  const std::size_t nd = model.n_dofs();

  Eigen::VectorXd u = Eigen::VectorXd::Zero(nd);
  for (const auto& c : cs.items) u(3 * c.node + c.dof) = c.value;

  Eigen::VectorXd r;
  sys.assemble(u, 1.0, r, false);
  res.reference_force = r.norm();
  const double fref = res.reference_force > 0.0 ? res.reference_force : 1.0;

  auto add_free = [&](Eigen::VectorXd& x, const Eigen::VectorXd& df, double s) {
    for (std::size_t d = 0; d < nd; ++d)
      if (free[d] >= 0) x(d) += s * df(free[d]);
  };
  auto energy_at = [&](const Eigen::VectorXd& x, double lam) {
    try {
      return model.energy(x, lam);
    } catch (const InvertedElementError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const long base = 1L << cfg.max_halving_depth;
  const long total = base * cfg.n_load_steps;
  long cur = 0, step_units = base, prev_units = 0;
  int successes = 0, step_no = 0;
  Eigen::VectorXd u_prev = u;
  bool stalled = false;

  auto newton = [&](Eigen::VectorXd& x, double lam) {
    NewtonStats st;
    double best = std::numeric_limits<double>::infinity();
    int best_it = 0;
    for (int it = 0;; ++it) {
      double U;
      try {
        U = sys.assemble(x, lam, r, true);
      } catch (const InvertedElementError& e) {
        st.reason = e.what();
        return st;
      }
      const double rel = r.norm() / fref;
      res.history.push_back({step_no + 1, lam, it, rel, false});
      st.iterations = it;
      if (!std::isfinite(rel)) {
        st.reason = "non-finite residual";
        return st;
      }
      if (rel <= cfg.newton_tol) {
        st.outcome = Outcome::converged;
        res.history.back().accepted = true;
        return st;
      }
      if (rel < best) best = rel, best_it = it;
      if (it >= cfg.max_newton_iters || it - best_it >= 6 || rel > 1e8) {
        st.reason = "no convergence";
        return st;
      }
      Eigen::VectorXd du;
      try {
        du = solver.solve(sys.tangent(), -r);
      } catch (const SingularSystemError& e) {
        st.reason = e.what();
        return st;
      }
      double s = 1.0;
      if (cfg.line_search && rel > 1e-4) {
        const double tol = 1e-10 * std::max(std::abs(U), 1e-300);
        for (int k = 0; k < 6; ++k, s *= 0.5) {
          Eigen::VectorXd trial = x;
          add_free(trial, du, s);
          if (energy_at(trial, lam) <= U + tol) break;
        }
      }
      add_free(x, du, s);
    }
  };

  while (cur < total) {
    step_units = std::min(step_units, total - cur);
    const double lam = static_cast<double>(cur + step_units) / static_cast<double>(total);
    Eigen::VectorXd x = u;
    if (prev_units > 0) x += (static_cast<double>(step_units) / prev_units) * (u - u_prev);
    for (const auto& c : cs.items) x(3 * c.node + c.dof) = c.value;
    const auto st = newton(x, lam);
    if (st.outcome == Outcome::converged) {
      u_prev = u;
      u = x;
      prev_units = step_units;
      cur += step_units;
      ++step_no;
      res.lambda = static_cast<double>(cur) / static_cast<double>(total);
      if (cfg.keep_steps || on_step) {
        StepSnapshot snap{step_no, res.lambda, u};
        if (on_step) on_step(mesh, snap);
        if (cfg.keep_steps) res.steps.push_back(std::move(snap));
      }
      if (++successes >= 2 && step_units < base) {
        step_units *= 2;
        successes = 0;
      }
    } else {
      successes = 0;
      char msg[160];
      std::snprintf(msg, sizeof msg, "lambda %.6g: %s", lam, st.reason.c_str());
      res.warnings.push_back(msg);
      if (step_units == 1) {
        stalled = true;
        break;
      }
      step_units /= 2;
    }
  }
  if (cur == total) res.lambda = 1.0;

  res.u = u;
  res.reference = mesh.nodes;
  res.deformed.resize(mesh.nodes.size());
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    for (int k = 0; k < 3; ++k) res.deformed[n][k] = mesh.nodes[n][k] + u(3 * n + k);
  res.element_stress.resize(mesh.elements.size());
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    res.element_stress[e] =
        von_mises(element_cauchy_stress(model.state(e, u, res.lambda), model.material(e), cfg.formulation));
  res.energy = model.energy(u, res.lambda);
  if (stalled) throw ContinuationStall(std::move(res));
  return res;
}

std::string format_convergence_csv(const MorphResult& result) {
  std::ostringstream os;
  os << "step,lambda,iter,residual\n";
  char buf[128];
  for (const auto& h : result.history) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%d,%.6e\n", h.step, h.lambda, h.iter, h.residual);
    os << buf;
  }
  return os.str();
}

}  // namespace kirimorph
