#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "kirimorph/error.hpp"
#include "kirimorph/interface.hpp"

namespace kirimorph {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double characteristic_radius(const PatternSpec& p, const PlanarLayout& layout) {
  if (auto* s = std::get_if<LotusSpec>(&p)) return s->R;
  if (auto* s = std::get_if<SpoonSpec>(&p)) return s->R;
  if (auto* s = std::get_if<PyramidCrossSpec>(&p)) return s->R;
  if (auto* s = std::get_if<AnnulusRimSpec>(&p)) return s->R;
  if (auto* s = std::get_if<StripSpec>(&p)) return 0.5 * s->length;
  // custom: farthest footprint vertex from the area centroid
  double A = 0, cx = 0, cy = 0;
  for (const auto& poly : layout.footprint) {
    const double a = geom::signed_area(poly.outer);
    const Point2 c = geom::centroid(poly.outer);
    A += a, cx += a * c.x, cy += a * c.y;
  }
  if (A <= 0) return 1.0;
  const Point2 c{cx / A, cy / A};
  double r = 0;
  for (const auto& poly : layout.footprint)
    for (const auto& q : poly.outer) r = std::max(r, kirimorph::distance(q, c));
  return r;
}

std::string stl_layer_name(const RunConfig& cfg) {
  for (const auto& l : cfg.layers)
    if (l.name == "kirigami") return l.name;
  return cfg.layers.back().name;
}

void write_stl_file(const LayeredMesh& mesh, const std::string& layer, const std::filesystem::path& path) {
  const int idx = mesh.layer_index(layer);
  if (idx < 0) throw ConfigError("output.stl: layer '" + layer + "' has no elements");
  std::ostringstream os(std::ios::binary);
  write_stl(os, mesh, layer_surface(mesh, idx), "kirimorph " + layer + " mm");
  write_file_atomic(path, os.str());
}

LayeredMesh build_mesh(const CaseSetup& s, const PlanarLayout& layout, TriMesh2D* tri_out = nullptr) {
  TriMesh2D tri = triangulate(layout, s.mesh);
  LayeredMesh m = extrude(tri, s.stack);
  if (tri_out) *tri_out = std::move(tri);
  return m;
}

}  // namespace

std::string format_metrics_csv(const Metrics& m) {
  std::string s = "name,lambda,H_mm,H_over_2R,curvature_per_mm,timoshenko_per_mm,elements,nodes,status\n";
  s += m.name + "," + num(m.lambda) + "," + num(m.H) + "," + num(m.H_over_2R) + ",";
  s += m.has_curvature ? num(m.curvature) + "," + num(m.timoshenko) : std::string("-,-");
  s += "," + std::to_string(m.elements) + "," + std::to_string(m.nodes) + "," + m.status + "\n";
  return s;
}

std::string format_manifest(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["status"] = m.status;
  j["lambda"] = m.lambda;
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.timings_s) t[k] = v;
  j["timings_s"] = t;
  j["outputs"] = m.outputs;
  j["config"] = nlohmann::ordered_json::parse(m.config);
  return j.dump(2) + "\n";
}

PatternRun run_pattern(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const CaseSetup s = cfg.case_setup();
  PatternRun r;
  r.layout = build_pattern(s.pattern, s.arc);
  r.removed_fraction = removed_fraction(r.layout);
  if (cfg.output.svg) {
    write_file_atomic(out_dir / (cfg.name + ".svg"), format_svg(r.layout));
    r.outputs.push_back(cfg.name + ".svg");
  }
  if (cfg.output.polygons) {
    write_file_atomic(out_dir / (cfg.name + ".poly"), format_polygons(r.layout));
    r.outputs.push_back(cfg.name + ".poly");
  }
  if (cfg.output.stl) {
    const auto layer = stl_layer_name(cfg);
    write_stl_file(build_mesh(s, r.layout), layer, out_dir / (cfg.name + "_" + layer + ".stl"));
    r.outputs.push_back(cfg.name + "_" + layer + ".stl");
  }
  return r;
}

MeshRun run_mesh(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const CaseSetup s = cfg.case_setup();
  MeshRun r;
  const PlanarLayout layout = build_pattern(s.pattern, s.arc);
  TriMesh2D tri;
  r.mesh = build_mesh(s, layout, &tri);
  r.audit = audit_mesh(tri, s.mesh, &layout);
  r.layered_violations = audit_layered(r.mesh);
  write_file_atomic(out_dir / (cfg.name + ".mesh2d"), format_mesh2d(tri));
  r.outputs.push_back(cfg.name + ".mesh2d");
  if (cfg.output.vtk) {
    std::ostringstream os;
    write_vtk(os, r.mesh);
    write_file_atomic(out_dir / (cfg.name + "_mesh.vtk"), os.str());
    r.outputs.push_back(cfg.name + "_mesh.vtk");
  }
  if (cfg.output.stl) {
    const auto layer = stl_layer_name(cfg);
    write_stl_file(r.mesh, layer, out_dir / (cfg.name + "_" + layer + ".stl"));
    r.outputs.push_back(cfg.name + "_" + layer + ".stl");
  }
  return r;
}

SimulateRun run_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const auto t_all = std::chrono::steady_clock::now();
  const CaseSetup s = cfg.case_setup();
  SimulateRun r;
  r.outcome = run_case(s);
  const auto& o = r.outcome;
  const auto t_an = std::chrono::steady_clock::now();

  Metrics& m = r.metrics;
  m.name = cfg.name;
  m.lambda = o.result.lambda;
  const Height h = measure_height(o.mesh, o.result, characteristic_radius(s.pattern, o.layout));
  m.H = h.H;
  m.H_over_2R = h.H_over_2R;
  m.elements = o.mesh.elements.size();
  m.nodes = o.mesh.nodes.size();
  m.status = o.stalled ? "partial" : "ok";
  if (std::holds_alternative<StripSpec>(s.pattern) && s.stack.size() >= 2) {
    MidlineOptions mo = cfg.midline;
    mo.substrate = s.solve.substrate_layer;
    m.curvature = fit_midline_curvature(o.mesh, o.result, mo);
    const auto& m0 = s.materials[s.stack[0].material];
    const auto& m1 = s.materials[s.stack[1].material];
    m.timoshenko = timoshenko_curvature(m0.E, s.stack[0].thickness, m1.E, s.stack[1].thickness,
                                        std::abs(m0.alpha - m1.alpha) * s.load.delta_T * o.result.lambda);
    m.has_curvature = true;
  }
  const double analysis_s = seconds_since(t_an);

  RunManifest& man = r.manifest;
  if (cfg.output.metrics) {
    write_file_atomic(out_dir / "metrics.csv", format_metrics_csv(m));
    man.outputs.push_back("metrics.csv");
  }
  if (cfg.output.convergence) {
    write_file_atomic(out_dir / "convergence.csv", format_convergence_csv(o.result));
    man.outputs.push_back("convergence.csv");
  }
  if (cfg.output.vtk) {
    std::vector<std::array<double, 3>> disp(o.mesh.nodes.size());
    for (std::size_t n = 0; n < disp.size(); ++n)
      for (int d = 0; d < 3; ++d) disp[n][d] = o.result.deformed[n][d] - o.mesh.nodes[n][d];
    VtkFields f;
    f.displacement = &disp;
    f.cell_scalars.push_back({"von_mises_MPa", &o.result.element_stress});
    std::ostringstream os;
    write_vtk(os, o.mesh, f);
    write_file_atomic(out_dir / (cfg.name + "_deformed.vtk"), os.str());
    man.outputs.push_back(cfg.name + "_deformed.vtk");
  }
  if (cfg.output.svg) {
    write_file_atomic(out_dir / (cfg.name + ".svg"), format_svg(o.layout));
    man.outputs.push_back(cfg.name + ".svg");
  }
  if (cfg.output.polygons) {
    write_file_atomic(out_dir / (cfg.name + ".poly"), format_polygons(o.layout));
    man.outputs.push_back(cfg.name + ".poly");
  }
  if (cfg.output.stl) {
    const auto layer = stl_layer_name(cfg);
    write_stl_file(o.mesh, layer, out_dir / (cfg.name + "_" + layer + ".stl"));
    man.outputs.push_back(cfg.name + "_" + layer + ".stl");
  }

  man.config = serialize_run_config(cfg);
  man.config_hash = config_hash(cfg);
  man.seed = cfg.solve.imperfection_seed;
  man.version = version_string();
  man.status = m.status;
  man.lambda = m.lambda;
  man.timings_s = {{"pattern", o.pattern_s}, {"mesh", o.mesh_s}, {"solve", o.solve_s},
                   {"analysis", analysis_s}, {"total", seconds_since(t_all)}};
  man.outputs.push_back("manifest.json");
  write_file_atomic(out_dir / "manifest.json", format_manifest(man));
  return r;
}

SweepRun run_sweep(const RunConfig& cfg, const std::vector<double>& gammas_in, const std::filesystem::path& out_dir,
                   bool record_runtime) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto gammas = gammas_in.empty() ? cfg.sweep_gammas : gammas_in;
  if (gammas.empty()) throw ConfigError("sweep.gammas: no gamma values given");
  if (!std::holds_alternative<LotusSpec>(cfg.pattern)) throw ConfigError("pattern.type: sweep needs a lotus pattern");
  SweepRun r;
  r.sweep = sweep_gamma(cfg.case_setup(), gammas, cfg.sweep_parallel);
  write_file_atomic(out_dir / "sweep.csv", format_sweep_csv(r.sweep, record_runtime));
  write_file_atomic(out_dir / "sweep_plot.dat", format_sweep_plot(r.sweep));
  auto& man = r.manifest;
  man.outputs = {"sweep.csv", "sweep_plot.dat", "manifest.json"};
  RunConfig rec = cfg;
  rec.sweep_gammas = gammas;
  man.config = serialize_run_config(rec);
  man.config_hash = config_hash(rec);
  man.seed = cfg.solve.imperfection_seed;
  man.version = version_string();
  bool all_ok = true;
  for (const auto& row : r.sweep.rows) all_ok = all_ok && row.status == "ok";
  man.status = all_ok ? "ok" : "partial";
  man.lambda = r.sweep.common_lambda;
  man.timings_s = {{"total", seconds_since(t0)}};
  write_file_atomic(out_dir / "manifest.json", format_manifest(man));
  return r;
}

}  // namespace kirimorph
