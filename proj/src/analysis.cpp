#include "kirimorph/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

namespace kirimorph {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Height measure_height(const std::vector<std::array<double, 3>>& points, double R) {
  if (!(R > 0.0)) throw ParameterError("R must be > 0");
  double H = 0.0;
  for (const auto& p : points) H = std::max(H, p[2]);
  return {H, H / (2.0 * R)};
}

double bottom_height(const LayeredMesh& mesh, const std::vector<std::array<double, 3>>& reference,
                     const Eigen::VectorXd& u) {
  double H = 0.0;
  for (std::size_t n = 0; n < reference.size(); ++n)
    if (mesh.node_level[n] == 0) H = std::max(H, reference[n][2] + u(3 * n + 2));
  return H;
}

Height measure_height(const LayeredMesh& mesh, const MorphResult& result, double R) {
  if (!(R > 0.0)) throw ParameterError("R must be > 0");
  const double H = bottom_height(mesh, result.reference, result.u);
  return {H, H / (2.0 * R)};
}

double timoshenko_curvature(double E1, double t1, double E2, double t2, double eps) {
  if (!(E1 > 0 && E2 > 0 && t1 > 0 && t2 > 0)) throw ParameterError("moduli and thicknesses must be > 0");
  const double m = t1 / t2, n = E1 / E2, h = t1 + t2;
  return 6.0 * eps * (1 + m) * (1 + m) / (h * (3 * (1 + m) * (1 + m) + (1 + m * n) * (m * m + 1 / (m * n))));
}

double fit_circle_curvature(const std::vector<Point2>& pts) {
  if (pts.size() < 3) throw DegenerateGeometryError("circle fit needs at least 3 points");
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += Eigen::Vector2d(p.x, p.y);
  c /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector2d d = Eigen::Vector2d(p.x, p.y) - c;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const Eigen::Vector2d t = es.eigenvectors().col(1);
  Eigen::Vector2d nrm(-t.y(), t.x());
  if (nrm.y() < 0 || (nrm.y() == 0 && nrm.x() < 0)) nrm = -nrm;

  // Local frame: a along the cloud, b across it. The circle
  // A (a^2 + b^2) + B a - b + D = 0 degenerates smoothly to a line at A = 0.
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd M(n, 3);
  Eigen::VectorXd rhs(n);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d d = Eigen::Vector2d(pts[i].x, pts[i].y) - c;
    scale = std::max(scale, d.norm());
  }
  if (!(scale > 0.0)) throw DegenerateGeometryError("circle fit on coincident points");
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d d = (Eigen::Vector2d(pts[i].x, pts[i].y) - c) / scale;
    const double a = d.dot(t), b = d.dot(nrm);
    M.row(i) << a * a + b * b, a, 1.0;
    rhs(i) = b;
  }
  const Eigen::Vector3d x = M.colPivHouseholderQr().solve(rhs);
  const double A = x(0), B = x(1), D = x(2);
  const double disc = B * B + 1.0 - 4.0 * A * D;
  if (!(disc > 0.0)) throw DegenerateGeometryError("circle fit failed");
  return 2.0 * A / std::sqrt(disc) / scale;
}

double fit_midline_curvature(const LayeredMesh& mesh, const MorphResult& result, const MidlineOptions& opts) {
  if (opts.axis != 0 && opts.axis != 1) throw ParameterError("strip axis must be 0 (x) or 1 (y)");
  int sub = mesh.layer_index(opts.substrate);
  if (sub < 0) sub = 0;
  int lo = std::numeric_limits<int>::max(), hi = -1;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    if (mesh.element_layer[e] == sub)
      for (int v : mesh.elements[e]) lo = std::min(lo, mesh.node_level[v]), hi = std::max(hi, mesh.node_level[v]);
  if (hi < 0) throw DegenerateGeometryError("substrate layer has no elements");

  std::map<std::pair<int, int>, int> at;  // (2D node, level) -> node
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) at[{mesh.node_2d[n], mesh.node_level[n]}] = static_cast<int>(n);

  const int ax = opts.axis, cr = 1 - opts.axis;
  double smin = 1e300, smax = -1e300, cmin = 1e300, cmax = -1e300;
  for (const auto& p : mesh.base.nodes) {
    const double s = ax == 0 ? p.x : p.y, c = cr == 0 ? p.x : p.y;
    smin = std::min(smin, s), smax = std::max(smax, s), cmin = std::min(cmin, c), cmax = std::max(cmax, c);
  }
  double trim = opts.trim;
  if (trim < 0.0) {
    trim = 0.0;
    for (double t : mesh.layer_thickness) trim += t;
  }
  const double cmid = 0.5 * (cmin + cmax);
  std::vector<Point2> pts;
  for (std::size_t v = 0; v < mesh.base.nodes.size(); ++v) {
    const auto& p = mesh.base.nodes[v];
    const double s = ax == 0 ? p.x : p.y, c = cr == 0 ? p.x : p.y;
    if (std::abs(c - cmid) > opts.band || s < smin + trim || s > smax - trim) continue;
    const auto b = at.find({static_cast<int>(v), lo}), t = at.find({static_cast<int>(v), hi});
    if (b == at.end() || t == at.end()) continue;
    const auto& xb = result.deformed[b->second];
    const auto& xt = result.deformed[t->second];
    pts.push_back({0.5 * (xb[ax] + xt[ax]), 0.5 * (xb[2] + xt[2])});
  }
  if (pts.size() < 5)
    throw DegenerateGeometryError("only " + std::to_string(pts.size()) + " centreline nodes (need 5)");
  return fit_circle_curvature(pts);
}

CaseSetup default_bilayer_case(const PatternSpec& pattern) {
  CaseSetup c;
  c.pattern = pattern;
  c.materials = {material_preset("shrinky_dink"), material_preset("abs_kirigami")};
  c.stack = {{"substrate", 0.1, 0, 1}, {"kirigami", 1.8, 1, 1}};
  return c;
}

CaseOutcome run_case(const CaseSetup& setup, const StepCallback& on_step) {
  CaseOutcome out;
  auto t0 = std::chrono::steady_clock::now();
  out.layout = build_pattern(setup.pattern, setup.arc);
  out.pattern_s = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  out.mesh = extrude(triangulate(out.layout, setup.mesh), setup.stack);
  out.mesh_s = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  try {
    out.result = solve_static(out.mesh, setup.materials, setup.load, setup.solve, on_step);
  } catch (const ContinuationStall& s) {
    out.result = s.result();
    out.stalled = true;
  }
  out.solve_s = seconds_since(t0);
  return out;
}

double height_at_lambda(const LayeredMesh& mesh, const MorphResult& r, double lambda) {
  double l0 = 0.0;
  double h0 = bottom_height(mesh, r.reference, Eigen::VectorXd::Zero(3 * r.reference.size()));
  if (lambda <= 0.0) return h0;
  for (const auto& s : r.steps) {
    const double h1 = bottom_height(mesh, r.reference, s.u);
    if (s.lambda >= lambda) return s.lambda == l0 ? h1 : h0 + (h1 - h0) * (lambda - l0) / (s.lambda - l0);
    l0 = s.lambda;
    h0 = h1;
  }
  if (lambda <= r.lambda) return bottom_height(mesh, r.reference, r.u);
  throw RangeError("lambda " + std::to_string(lambda) + " beyond the converged range");
}

SweepResult sweep_gamma(const CaseSetup& base, const std::vector<double>& gammas, unsigned parallel_cases) {
  if (!std::holds_alternative<LotusSpec>(base.pattern)) throw ParameterError("sweep_gamma needs a lotus pattern");
  for (double g : gammas)
    if (!(g > 0.0 && g <= 1.0)) throw ParameterError("gamma values must lie in (0, 1]");
  const double R = std::get<LotusSpec>(base.pattern).R;

  struct Slot {
    CaseOutcome out;
    bool ok = false;
    std::string error;
    double runtime = 0;
    double alpha = 0;
  };
  std::vector<Slot> slots(gammas.size());
  auto run = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    CaseSetup c = base;
    std::get<LotusSpec>(c.pattern).gamma = gammas[i];
    try {
      slots[i].out = run_case(c);
      slots[i].alpha = removed_fraction(slots[i].out.layout);
      slots[i].ok = true;
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
    slots[i].runtime = seconds_since(t0);
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(parallel_cases, static_cast<unsigned>(gammas.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < gammas.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < gammas.size(); i += workers) run(i);
      });
    for (auto& t : pool) t.join();
  }

  SweepResult res;
  res.common_lambda = 1.0;
  bool any = false;
  for (const auto& s : slots)
    if (s.ok) res.common_lambda = std::min(res.common_lambda, s.out.result.lambda), any = true;
  if (!any) res.common_lambda = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const auto& s = slots[i];
    SweepRow row;
    row.gamma = gammas[i];
    row.runtime_s = s.runtime;
    if (!s.ok) {
      row.alpha = 0.5 * (1.0 - gammas[i] * gammas[i]);
      row.H = row.H_over_2R = std::numeric_limits<double>::quiet_NaN();
      row.status = "error: " + s.error;
    } else {
      row.alpha = s.alpha;
      row.converged_lambda = s.out.result.lambda;
      row.lambda = res.common_lambda;
      row.H = height_at_lambda(s.out.mesh, s.out.result, res.common_lambda);
      row.H_over_2R = row.H / (2.0 * R);
      row.status = s.out.stalled ? "partial" : "ok";
    }
    res.rows.push_back(row);
  }
  return res;
}

namespace {

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
  return q + "\"";
}

}  // namespace

std::string format_sweep_csv(const SweepResult& sweep, bool record_runtime) {
  std::ostringstream os;
  os << "gamma,alpha,H_mm,H_over_2R,lambda,runtime_s,converged_lambda,status\n";
  char buf[256];
  for (const auto& r : sweep.rows) {
    char rt[32] = "-";
    if (record_runtime) std::snprintf(rt, sizeof rt, "%.3f", r.runtime_s);
    std::snprintf(buf, sizeof buf, "%.6g,%.6f,%.9g,%.9g,%.9g,%s,%.9g,", r.gamma, r.alpha, r.H, r.H_over_2R, r.lambda, rt,
                  r.converged_lambda);
    os << buf << csv_field(r.status) << "\n";
  }
  return os.str();
}

std::string format_sweep_plot(const SweepResult& sweep) {
  std::ostringstream os;
  os << "# radius_ratio normalized_height (lambda = " << sweep.common_lambda << ")\n";
  char buf[96];
  for (const auto& r : sweep.rows) {
    if (r.status.rfind("error", 0) == 0) continue;
    std::snprintf(buf, sizeof buf, "%.6g %.9g\n", r.gamma, r.H_over_2R);
    os << buf;
  }
  return os.str();
}

}  // namespace kirimorph
