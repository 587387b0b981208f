#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "kirimorph/fem.hpp"
#include "kirimorph/pattern.hpp"

using namespace kirimorph;

namespace {

Mat63 unit_wedge(double t = 1.0) {
  Mat63 X;
  X << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, t, 1, 0, t, 0, 1, t;
  return X;
}

// A skewed wedge with tilted top and bottom faces, still valid.
Mat63 skew_wedge() {
  Mat63 X;
  X << 0.1, -0.2, 0.05, 1.7, 0.3, -0.1, 0.4, 1.3, 0.2,  //
      0.1, -0.2, 0.95, 1.7, 0.3, 0.7, 0.4, 1.3, 1.1;
  return X;
}

MaterialModel soft(double nu = 0.49) { return {"soft", 404.2082, nu, -0.01}; }

double volume(const Mat63& X, const MaterialModel& m) {
  // energy of a unit isotropic strain field E = I gives V * (3*mu + 4.5*lambda)
  ElementState s;
  s.X = X;
  s.eigenstrain = -Eigen::Matrix3d::Identity();
  ElementFormulation f;
  f.reduced_volumetric_nu = 1.0;
  f.enhanced_thickness_strain = false;
  return element_energy(s, m, f) / (3.0 * m.shear_modulus() + 4.5 * m.lame_lambda());
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

TriMesh2D one_triangle(int layers) {
  TriMesh2D t;
  t.nodes = {{0, 0}, {2, 0}, {0.5, 1.5}};
  t.triangles = {{0, 1, 2}};
  t.layer_names = {"substrate", "kirigami"};
  t.coverage = {layers == 1 ? 1u : 3u};
  t.boundary_edges = {{0, 1}, {1, 2}, {0, 2}};
  return t;
}

LayeredMesh small_disk(double h = 3.0, double R = 10.0) {
  PlanarLayout l;
  Polygon disk;
  for (int i = 0; i < 48; ++i) {
    const double a = 2 * M_PI * i / 48;
    disk.outer.push_back({R * std::cos(a), R * std::sin(a)});
  }
  l.layers.push_back({"substrate", {disk}});
  l.layers.push_back({"kirigami", {disk}});
  l.footprint = {disk};
  MeshOptions o;
  o.h_target = h;
  return extrude(triangulate(l, o), {{"substrate", 0.1, 0}, {"kirigami", 1.8, 1}});
}

std::vector<MaterialModel> bilayer() { return {material_preset("shrinky_dink"), material_preset("abs_kirigami")}; }

}  // namespace

TEST(Element, ReferenceStateHasSixRigidModes) {
  for (const auto& X : {unit_wedge(), skew_wedge()}) {
    ElementState s;
    s.X = X;
    const auto r = element_force_tangent(s, soft());
    EXPECT_LT(r.f.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(max_abs(r.K - r.K.transpose()), 1e-10 * max_abs(r.K));
    Eigen::SelfAdjointEigenSolver<Mat18> es(r.K);
    const auto ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    int null = 0;
    for (int i = 0; i < 18; ++i) {
      EXPECT_GT(ev(i), -1e-10 * top);
      if (ev(i) < 1e-9 * top) ++null;
    }
    EXPECT_EQ(null, 6);
  }
}

TEST(Element, IsotropicEigenstrainPatch) {
  const double e = 1e-2;
  for (const auto& X : {unit_wedge(0.7), skew_wedge()}) {
    ElementState s;
    s.X = X;
    s.eigenstrain = e * Eigen::Matrix3d::Identity();
    const double k = std::sqrt(1 + 2 * e) - 1;
    for (int a = 0; a < 6; ++a)
      for (int c = 0; c < 3; ++c) s.u(3 * a + c) = k * X(a, c);
    const auto m = soft();
    const auto r = element_force_tangent(s, m);
    const double V = volume(X, m);
    EXPECT_LE(r.f.norm(), 1e-10 * m.E * std::pow(V, 2.0 / 3.0));
    EXPECT_NEAR(r.energy, 0.0, 1e-20);
  }
}

TEST(Element, VolumeOracle) {
  EXPECT_NEAR(volume(unit_wedge(1.0), soft()), 0.5, 1e-13);
  EXPECT_NEAR(volume(unit_wedge(0.3), soft()), 0.15, 1e-13);
}

class ElementFD : public ::testing::TestWithParam<std::tuple<double, bool>> {};

TEST_P(ElementFD, TangentAndForceMatchFiniteDifferences) {
  const auto [nu, enhanced] = GetParam();
  ElementFormulation form;
  form.enhanced_thickness_strain = enhanced;
  const MaterialModel m{"m", 500.0, nu, -0.01};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-0.05, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    ElementState s;
    s.X = skew_wedge();
    for (int i = 0; i < 18; ++i) s.u(i) = U(rng);
    s.eigenstrain = thermal_eigenstrain(m, 20.0 * (1 + U(rng)), EigenstrainMode::in_plane);
    const auto r = element_force_tangent(s, m, form);
    Mat18 Kfd;
    Vec18 ffd;
    const double h = 1e-6;
    for (int j = 0; j < 18; ++j) {
      auto sp = s, sm = s;
      sp.u(j) += h;
      sm.u(j) -= h;
      Kfd.col(j) = (element_force_tangent(sp, m, form, false).f - element_force_tangent(sm, m, form, false).f) / (2 * h);
      ffd(j) = (element_energy(sp, m, form) - element_energy(sm, m, form)) / (2 * h);
    }
    EXPECT_LE(max_abs(Kfd - r.K) / max_abs(r.K), 1e-6);
    EXPECT_LE((ffd - r.f).cwiseAbs().maxCoeff() / r.f.cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(max_abs(r.K - r.K.transpose()), 1e-9 * max_abs(r.K));
  }
}

INSTANTIATE_TEST_SUITE_P(Formulations, ElementFD,
                         ::testing::Values(std::make_tuple(0.49, true), std::make_tuple(0.49, false),
                                           std::make_tuple(0.3, true), std::make_tuple(0.3, false)));

TEST(Element, EnergyIsObjective) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-0.1, 0.1);
  const auto m = soft();
  for (int trial = 0; trial < 10; ++trial) {
    ElementState s;
    s.X = skew_wedge();
    for (int i = 0; i < 18; ++i) s.u(i) = U(rng);
    s.eigenstrain = 0.02 * Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d Q =
        Eigen::Quaterniond(Eigen::Vector4d(U(rng), U(rng), U(rng), 1.0).normalized()).toRotationMatrix();
    ElementState t = s;
    for (int a = 0; a < 6; ++a) {
      const Eigen::Vector3d X = s.X.row(a).transpose();
      const Eigen::Vector3d x = X + s.u.segment<3>(3 * a);
      t.X.row(a) = (Q * X).transpose();
      t.u.segment<3>(3 * a) = Q * x - Q * X;
    }
    const double e0 = element_energy(s, m), e1 = element_energy(t, m);
    EXPECT_NEAR(e1, e0, 1e-10 * e0);
  }
}

TEST(Element, InvertedElementIsReported) {
  ElementState s;
  s.id = 42;
  s.X = unit_wedge();
  s.X.row(3).swap(s.X.row(0));
  s.X.row(4).swap(s.X.row(1));
  s.X.row(5).swap(s.X.row(2));
  try {
    element_force_tangent(s, soft());
    FAIL();
  } catch (const InvertedElementError& e) {
    EXPECT_EQ(e.element(), 42u);
  }
  s.X = unit_wedge();
  s.u(11) = -2.0;  // top-face node pushed through the bottom
  s.u(14) = -2.0;
  s.u(17) = -2.0;
  EXPECT_THROW(element_force_tangent(s, soft()), InvertedElementError);
}

TEST(Element, UnrelaxedEnhancementIsNoStiffer) {
  // Pure bending about y: the enhanced mode can only lower the energy.
  ElementState s;
  s.X = unit_wedge(0.5);
  for (int a = 0; a < 6; ++a) s.u(3 * a) = 0.01 * s.X(a, 0) * (s.X(a, 2) - 0.25);
  ElementFormulation plain;
  plain.enhanced_thickness_strain = false;
  EXPECT_LT(element_energy(s, soft()), element_energy(s, soft(), plain));
}

TEST(Assembly, SingleWedgeEqualsElement) {
  const auto mesh = extrude(one_triangle(1), {{"substrate", 0.4, 0}});
  ASSERT_EQ(mesh.elements.size(), 1u);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-0.02, 0.02);
  Eigen::VectorXd u(18);
  for (int i = 0; i < 18; ++i) u(i) = U(rng);
  const ThermalLoad load{50.0, EigenstrainMode::in_plane};
  const auto sys = assemble(mesh, u, 0.7, load, {soft()});
  ElementState s;
  for (int a = 0; a < 6; ++a)
    for (int k = 0; k < 3; ++k) {
      s.X(a, k) = mesh.nodes[mesh.elements[0][a]][k];
      s.u(3 * a + k) = u(3 * mesh.elements[0][a] + k);
    }
  s.eigenstrain = 0.7 * thermal_eigenstrain(soft(), 50.0, EigenstrainMode::in_plane);
  const auto r = element_force_tangent(s, soft());
  const Eigen::MatrixXd K = Eigen::MatrixXd(sys.tangent);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      for (int i = 0; i < 3; ++i) {
        const int ga = mesh.elements[0][a], gb = mesh.elements[0][b];
        EXPECT_DOUBLE_EQ(sys.residual(3 * ga + i), r.f(3 * a + i));
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(K(3 * ga + i, 3 * gb + j), r.K(3 * a + i, 3 * b + j));
      }
}

TEST(Assembly, StackedWedgesMatchDenseOracle) {
  const auto mesh = extrude(one_triangle(2), {{"substrate", 0.1, 0}, {"kirigami", 1.8, 1}});
  ASSERT_EQ(mesh.elements.size(), 2u);
  ASSERT_EQ(mesh.nodes.size(), 9u);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-0.01, 0.01);
  Eigen::VectorXd u(27);
  for (int i = 0; i < 27; ++i) u(i) = U(rng);
  const ThermalLoad load{110.0, EigenstrainMode::in_plane};
  const auto mats = bilayer();
  const auto sys = assemble(mesh, u, 0.1, load, mats);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(27, 27);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(27);
  for (std::size_t e = 0; e < 2; ++e) {
    ElementState s;
    const auto& m = mats[mesh.layer_materials[mesh.element_layer[e]]];
    for (int a = 0; a < 6; ++a)
      for (int k = 0; k < 3; ++k) {
        s.X(a, k) = mesh.nodes[mesh.elements[e][a]][k];
        s.u(3 * a + k) = u(3 * mesh.elements[e][a] + k);
      }
    s.eigenstrain = 0.1 * thermal_eigenstrain(m, 110.0, EigenstrainMode::in_plane);
    const auto r = element_force_tangent(s, m);
    for (int a = 0; a < 18; ++a) {
      const int ga = 3 * mesh.elements[e][a / 3] + a % 3;
      f(ga) += r.f(a);
      for (int b = 0; b < 18; ++b) K(ga, 3 * mesh.elements[e][b / 3] + b % 3) += r.K(a, b);
    }
  }
  EXPECT_LT(max_abs(Eigen::MatrixXd(sys.tangent) - K), 1e-12 * max_abs(K));
  EXPECT_LT((sys.residual - f).cwiseAbs().maxCoeff(), 1e-12 * f.cwiseAbs().maxCoeff());
}

TEST(Assembly, ZeroLoadZeroResidual) {
  const auto mesh = small_disk();
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(3 * mesh.nodes.size());
  const auto sys = assemble(mesh, u, 0.0, {110.0, EigenstrainMode::in_plane}, bilayer());
  EXPECT_EQ(sys.residual.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(strain_energy(mesh, u, 0.0, {}, bilayer()), 0.0);
}

TEST(Assembly, GradientAndTangentConsistency) {
  const auto mesh = small_disk(4.0, 6.0);
  const auto mats = bilayer();
  const ThermalLoad load{110.0, EigenstrainMode::in_plane};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-0.01, 0.01);
  const Eigen::Index n = 3 * static_cast<Eigen::Index>(mesh.nodes.size());
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd u(n), d(n);
    for (Eigen::Index i = 0; i < n; ++i) u(i) = U(rng), d(i) = U(rng);
    const auto sys = assemble(mesh, u, 0.05, load, mats);
    const double h = 1e-5;
    const double dU = (strain_energy(mesh, u + h * d, 0.05, load, mats) - strain_energy(mesh, u - h * d, 0.05, load, mats)) / (2 * h);
    EXPECT_NEAR(dU / sys.residual.dot(d), 1.0, 1e-6);
    const Eigen::VectorXd df = (assemble(mesh, u + h * d, 0.05, load, mats).residual -
                                assemble(mesh, u - h * d, 0.05, load, mats).residual) / (2 * h);
    const Eigen::VectorXd Kd = sys.tangent * d;
    EXPECT_LE((df - Kd).norm() / Kd.norm(), 1e-6);
  }
}

TEST(Constraints, PerimeterCountsBoundaryNodes) {
  const auto mesh = small_disk();
  const auto cs = build_constraints(mesh);
  std::size_t ring = 0;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (mesh.node_on_boundary[mesh.node_2d[n]] && mesh.node_level[n] <= 1) ++ring;
  EXPECT_EQ(cs.size(), ring + 3);
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (mesh.node_on_boundary[mesh.node_2d[n]] && mesh.node_level[n] <= 1) EXPECT_TRUE(cs.contains(n, 2));
  // the kirigami top surface stays free
  for (const auto& c : cs.items) EXPECT_LE(mesh.node_level[c.node], 1);
}

TEST(Constraints, StripAnchorsAreDistinctBoundaryNodes) {
  const auto layout = build_strip({60.0, 10.0});
  MeshOptions o;
  o.h_target = 2.5;
  const auto mesh = extrude(triangulate(layout, o), {{"substrate", 0.1, 0}, {"kirigami", 1.8, 1}});
  for (const auto mode : {BoundaryMode::perimeter, BoundaryMode::free}) {
    const auto cs = build_constraints(mesh, mode);
    std::vector<int> anchors;
    for (const auto& c : cs.items)
      if (c.dof != 2) anchors.push_back(c.node);
    ASSERT_EQ(anchors.size(), 3u);
    EXPECT_EQ(anchors[0], anchors[1]);
    EXPECT_NE(anchors[0], anchors[2]);
    for (int a : anchors) EXPECT_TRUE(mesh.node_on_boundary[mesh.node_2d[a]]);
  }
  EXPECT_EQ(build_constraints(mesh, BoundaryMode::free).size(), 6u);
  ConstraintSet cs;
  cs.add(1, 2);
  EXPECT_THROW(cs.add(1, 2), ParameterError);
}

TEST(LinearSolve, IdentityAndConstrainedDofs) {
  SparseMat I(9, 9);
  I.setIdentity();
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(9, 1, 9);
  EXPECT_LT((linear_solve(I, b, {}) - b).norm(), 1e-15);
  ConstraintSet cs;
  cs.add(1, 0);
  cs.add(2, 2);
  const auto x = linear_solve(I, b, cs);
  EXPECT_EQ(x(3), 0.0);
  EXPECT_EQ(x(8), 0.0);
  EXPECT_EQ(x(0), 1.0);
}

TEST(LinearSolve, RandomSpdMatchesDenseOracle) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N;
  Eigen::MatrixXd A(51, 51);
  for (auto i = 0; i < A.size(); ++i) A.data()[i] = N(rng);
  Eigen::MatrixXd M = A * A.transpose() + 51 * Eigen::MatrixXd::Identity(51, 51);
  Eigen::VectorXd b(51);
  for (auto i = 0; i < 51; ++i) b(i) = N(rng);
  // constrain the last dof so 50 remain free
  ConstraintSet cs;
  cs.add(16, 2);
  const Eigen::VectorXd ref = M.topLeftCorner(50, 50).ldlt().solve(b.head(50));
  const SparseMat S = M.sparseView();
  const auto xd = linear_solve(S, b, cs, LinearSolverKind::direct);
  const auto xi = linear_solve(S, b, cs, LinearSolverKind::iterative);
  EXPECT_LT((xd.head(50) - ref).cwiseAbs().maxCoeff(), 1e-9 * ref.cwiseAbs().maxCoeff());
  EXPECT_LT((xi.head(50) - xd.head(50)).cwiseAbs().maxCoeff(), 1e-8 * ref.cwiseAbs().maxCoeff());
  EXPECT_EQ(xd(50), 0.0);
  SparseMat Z(3, 3);
  EXPECT_THROW(linear_solve(Z, Eigen::VectorXd::Ones(3), {}), SingularSystemError);
}

TEST(Imperfection, SeededBiasedInterior) {
  const auto mesh = small_disk();
  const double A = 1e-4;
  const auto p = apply_imperfection(mesh, A, 3, +1);
  const auto q = apply_imperfection(mesh, A, 3, +1);
  const auto m = apply_imperfection(mesh, A, 3, -1);
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    const double dz = p.nodes[n][2] - mesh.nodes[n][2];
    EXPECT_EQ(p.nodes[n][2], q.nodes[n][2]);
    EXPECT_EQ(m.nodes[n][2] - mesh.nodes[n][2], -dz);
    if (mesh.node_on_boundary[mesh.node_2d[n]]) {
      EXPECT_EQ(dz, 0.0);
    } else {
      EXPECT_GE(dz, 0.5 * A * (1 - 1e-12));
      EXPECT_LE(dz, A * (1 + 1e-12));
    }
  }
  EXPECT_DOUBLE_EQ(default_imperfection_amplitude(mesh), 1e-4);
}

TEST(Solver, NoLoadStaysWithinImperfection) {
  const auto mesh = small_disk();
  SolveConfig cfg;
  cfg.n_load_steps = 2;
  const auto r = solve_static(mesh, bilayer(), {0.0, EigenstrainMode::in_plane}, cfg);
  EXPECT_EQ(r.lambda, 1.0);
  double H = 0.0;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (mesh.node_level[n] == 0) H = std::max(H, r.deformed[n][2]);
  EXPECT_LE(H, 2 * r.imperfection_amplitude);
  EXPECT_LE(r.u.cwiseAbs().maxCoeff(), r.imperfection_amplitude);
}

TEST(Solver, ConvergesDeterministicallyWithQuadraticTail) {
  const auto mesh = small_disk(3.0);
  SolveConfig cfg;
  cfg.n_load_steps = 4;
  const ThermalLoad load{2.0, EigenstrainMode::in_plane};
  const auto a = solve_static(mesh, bilayer(), load, cfg);
  const auto b = solve_static(mesh, bilayer(), load, cfg);
  EXPECT_EQ(a.lambda, 1.0);
  ASSERT_EQ(a.u.size(), b.u.size());
  EXPECT_EQ(std::memcmp(a.u.data(), b.u.data(), sizeof(double) * a.u.size()), 0);
  EXPECT_EQ(a.steps.size(), 4u);
  // substrate shrinks, composite rises in the middle
  double H = 0.0;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (mesh.node_level[n] == 0) H = std::max(H, a.deformed[n][2]);
  EXPECT_GT(H, 10 * a.imperfection_amplitude);

  for (std::size_t i = 0; i < a.history.size(); ++i) {
    const auto& h = a.history[i];
    if (!h.accepted) continue;
    EXPECT_LE(h.residual, cfg.newton_tol);
    if (h.iter >= 3) {
      const double r1 = a.history[i - 1].residual, r2 = a.history[i - 2].residual;
      if (r2 < 1e-2) EXPECT_LE(r1, 1e3 * r2 * r2);
    }
  }
  const auto csv = format_convergence_csv(a);
  EXPECT_EQ(csv.rfind("step,lambda,iter,residual\n", 0), 0u);
}

TEST(Solver, ThreadCountDoesNotChangeResult) {
  const auto mesh = small_disk(3.0);
  SolveConfig c1, c4;
  c1.n_load_steps = c4.n_load_steps = 2;
  c4.threads = 4;
  const ThermalLoad load{1.0, EigenstrainMode::in_plane};
  const auto a = solve_static(mesh, bilayer(), load, c1);
  const auto b = solve_static(mesh, bilayer(), load, c4);
  EXPECT_EQ(std::memcmp(a.u.data(), b.u.data(), sizeof(double) * a.u.size()), 0);
}

TEST(Solver, BadConfig) {
  SolveConfig c;
  c.n_load_steps = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.newton_tol = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  EXPECT_THROW(solve_static(small_disk(), {material_preset("shrinky_dink")}, {}, {}), ParameterError);
}

// Film held in-plane with a shrinking eigenstrain e, thickness free:
// SVK equilibrium needs E_zz = 2 nu / (1 - nu) * e, so the thickness
// collapses once that drops below -1/2.
TEST(Element, HeldFilmThicknessLimit) {
  const MaterialModel m = soft(0.49);
  auto energy = [&](double e, double s) {
    ElementState st;
    st.X = unit_wedge(0.1);
    st.eigenstrain.diagonal() << e, e, 0.0;
    for (int a = 3; a < 6; ++a) st.u(3 * a + 2) = (s - 1.0) * 0.1;
    return element_energy(st, m);
  };
  const double c = 2 * m.nu / (1 - m.nu);
  const double s_exact = std::sqrt(1 + 2 * c * -0.1);
  double best = 1.0, e_best = energy(-0.1, 1.0);
  for (double s = 0.3; s < 1.0; s += 1e-4)
    if (energy(-0.1, s) < e_best) e_best = energy(-0.1, s), best = s;
  EXPECT_NEAR(best, s_exact, 2e-4);

  const double e_crit = -0.5 / c;
  EXPECT_NEAR(e_crit, -0.2602, 1e-4);
  double prev = energy(-0.27, 1.0);
  for (double s = 0.98; s > 0.01; s -= 0.02) {
    const double cur = energy(-0.27, s);
    EXPECT_LT(cur, prev) << "s = " << s;
    prev = cur;
  }
}
