// kirimorph command line: pattern, mesh, simulate, sweep, fit-material, ingest-templog.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kirimorph/error.hpp"
#include "kirimorph/interface.hpp"

using namespace kirimorph;

namespace {

struct PresetFlags {
  std::string config;
  std::string preset;
  std::optional<double> R, gamma, length, width, r_inner, h;
  std::optional<int> n_petals;
  std::string input;
  std::string name;
  bool stl = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "run configuration (JSON)");
    app->add_option("--preset", preset, "lotus | strip | pyramid_cross | annulus_rim | spoon | custom")
        ->check(CLI::IsMember({"lotus", "strip", "pyramid_cross", "annulus_rim", "spoon", "custom"}));
    app->add_option("--R", R, "outer radius, mm");
    app->add_option("--gamma", gamma, "inner radius ratio");
    app->add_option("--n-petals", n_petals);
    app->add_option("--length", length, "strip length, mm");
    app->add_option("--width", width, "strip width, mm");
    app->add_option("--r-inner", r_inner, "annulus inner radius, mm");
    app->add_option("--input", input, "polygon file for --preset custom");
    app->add_option("--h-target", h, "target element size, mm");
    app->add_option("--name", name, "output file stem");
    app->add_flag("--stl", stl, "also write the Kirigami layer as binary STL");
  }

  RunConfig build() const {
    RunConfig c;
    if (!config.empty()) {
      if (!preset.empty()) throw ConfigError("--config and --preset are mutually exclusive");
      c = load_run_config(config);
    } else {
      if (preset.empty()) throw ConfigError("one of --config or --preset is required");
      auto need = [](const std::optional<double>& v, const char* flag) {
        if (!v) throw ConfigError(std::string(flag) + ": missing (required by this preset)");
        return *v;
      };
      c.name = preset;
      if (preset == "lotus") {
        LotusSpec s;
        s.R = need(R, "--R");
        s.gamma = need(gamma, "--gamma");
        if (n_petals) s.n_petals = *n_petals;
        c.pattern = s;
      } else if (preset == "spoon") {
        SpoonSpec s;
        s.R = need(R, "--R");
        s.gamma = need(gamma, "--gamma");
        if (n_petals) s.n_petals = *n_petals;
        c.pattern = s;
        c.layers.push_back({"substrate_handle", 0.1, "shrinky_dink", 1});
      } else if (preset == "strip") {
        c.pattern = StripSpec{need(length, "--length"), need(width, "--width")};
      } else if (preset == "pyramid_cross") {
        PyramidCrossSpec s;
        s.R = need(R, "--R");
        c.pattern = s;
      } else if (preset == "annulus_rim") {
        AnnulusRimSpec s;
        s.R = need(R, "--R");
        s.r_inner = need(r_inner, "--r-inner");
        if (n_petals) s.n_petals = *n_petals;
        c.pattern = s;
      } else {
        if (input.empty()) throw ConfigError("--input: missing (required by --preset custom)");
        c.pattern = CustomSpec{input};
      }
    }
    if (h) c.mesh.h_target = *h;
    if (!name.empty()) c.name = name;
    if (stl) c.output.stl = true;
    c.validate();
    return c;
  }
};

std::filesystem::path out_dir_for(const RunConfig& c, const std::string& flag) {
  return resolve_output_dir(flag.empty() ? c.output.directory : std::filesystem::path(flag));
}

void print_outputs(const std::filesystem::path& dir, const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << "wrote " << (dir / f).string() << "\n";
}

int cmd_pattern(const PresetFlags& pf, const std::string& out) {
  const RunConfig c = pf.build();
  const auto dir = out_dir_for(c, out);
  const auto r = run_pattern(c, dir);
  for (const auto& w : r.layout.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("removed_fraction %.6f\n", r.removed_fraction);
  print_outputs(dir, r.outputs);
  return kExitOk;
}

int cmd_mesh(const PresetFlags& pf, const std::string& out) {
  const RunConfig c = pf.build();
  const auto dir = out_dir_for(c, out);
  const auto r = run_mesh(c, dir);
  const auto rep = mesh_report(r.mesh);
  std::printf("elements %zu nodes %zu min_angle_deg %.3f min_volume_mm3 %.6g\n", rep.elements, rep.nodes,
              r.audit.min_angle_deg, rep.min_volume);
  for (const auto& l : rep.layers)
    std::printf("layer %s elements %zu area_mm2 %.6g volume_mm3 %.6g\n", l.name.c_str(), l.elements,
                l.footprint_area, l.volume);
  print_outputs(dir, r.outputs);
  bool ok = true;
  for (const auto& v : r.audit.violations) std::cerr << "audit: " << v << "\n", ok = false;
  for (const auto& v : r.layered_violations) std::cerr << "audit: " << v << "\n", ok = false;
  return ok ? kExitOk : kExitGeometry;
}

int cmd_simulate(const std::string& config, const std::string& out, int threads) {
  RunConfig c = load_run_config(config);
  if (threads > 0) c.solve.threads = static_cast<unsigned>(threads);
  const auto dir = out_dir_for(c, out);
  const auto r = run_simulate(c, dir);
  const auto& m = r.metrics;
  std::printf("lambda %.6g H_mm %.6g H_over_2R %.6g elements %zu\n", m.lambda, m.H, m.H_over_2R, m.elements);
  if (m.has_curvature)
    std::printf("curvature_per_mm %.6e timoshenko_per_mm %.6e ratio %.4f\n", m.curvature, m.timoshenko,
                std::abs(m.curvature) / m.timoshenko);
  for (const auto& w : r.outcome.result.warnings) std::cerr << "warning: " << w << "\n";
  print_outputs(dir, r.manifest.outputs);
  if (r.outcome.stalled) {
    std::cerr << "continuation stalled at lambda " << m.lambda << "\n";
    return kExitStall;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& config, const std::vector<double>& gammas, const std::string& out, bool runtime,
              int parallel) {
  RunConfig c = load_run_config(config);
  if (parallel > 0) c.sweep_parallel = static_cast<unsigned>(parallel);
  const auto dir = out_dir_for(c, out);
  const auto r = run_sweep(c, gammas, dir, runtime);
  std::cout << format_sweep_csv(r.sweep, true);
  print_outputs(dir, r.manifest.outputs);
  return r.manifest.status == "ok" ? kExitOk : kExitStall;
}

int cmd_fit(const std::string& path, std::optional<double> eps_m, bool csv) {
  const auto curve = read_stress_strain_csv(path);
  const double e = eps_m ? *eps_m : default_fit_strain(curve);
  const double E = fit_linear_modulus(curve, e);
  if (csv)
    std::printf("eps_m,E_MPa\n%.9g,%.9g\n", e, E);
  else
    std::printf("eps_m %.6g\nE_MPa %.6f\n", e, E);
  return kExitOk;
}

int cmd_templog(const std::string& path, double ambient, const std::string& unit, bool csv) {
  const double amb_K = to_kelvin(ambient, parse_temp_unit(unit));
  const auto s = ingest_temperature_log(path, amb_K);
  if (csv)
    std::printf("samples,duration_s,mean_K,std_K,ambient_K,delta_T_K\n%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.samples,
                s.duration_s, s.mean_K, s.std_K, amb_K, s.delta_T_mean_K);
  else
    std::printf("samples %zu\nduration_s %.3f\nmean_K %.3f\nstd_K %.3f\nambient_K %.3f\ndelta_T_K %.1f\n", s.samples,
                s.duration_s, s.mean_K, s.std_K, amb_K, s.delta_T_mean_K);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kirigami bilayer thermal morphing simulator"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  std::string out;

  PresetFlags pat_flags, mesh_flags;
  auto* pat = app.add_subcommand("pattern", "build a layout; write SVG, polygon text and optional STL");
  pat_flags.attach(pat);
  pat->add_option("--out", out, "output directory");
  auto* msh = app.add_subcommand("mesh", "triangulate and extrude; audit and write VTK");
  mesh_flags.attach(msh);
  msh->add_option("--out", out, "output directory");

  std::string sim_config;
  int threads = 0;
  auto* sim = app.add_subcommand("simulate", "run pattern -> mesh -> solve -> analysis");
  sim->add_option("config", sim_config, "run configuration")->required();
  sim->add_option("--out", out, "output directory");
  sim->add_option("--threads", threads, "element evaluation threads");

  std::string sw_config;
  std::vector<double> gammas;
  bool record_runtime = false;
  int parallel = 0;
  auto* sw = app.add_subcommand("sweep", "lotus gamma sweep");
  sw->add_option("config", sw_config, "run configuration")->required();
  sw->add_option("--gammas", gammas, "gamma values (default: sweep.gammas)")->delimiter(',');
  sw->add_option("--out", out, "output directory");
  sw->add_option("--parallel", parallel, "concurrent cases");
  sw->add_flag("--record-runtime", record_runtime, "write wall times into the CSV");

  std::string fit_path;
  std::optional<double> eps_m;
  bool csv = false;
  auto* fit = app.add_subcommand("fit-material", "energy-equivalent linear modulus of a stress-strain curve");
  fit->add_option("file", fit_path, "strain,stress_mpa file")->required();
  fit->add_option("--eps-m", eps_m, "fit strain (default min(0.05, max strain))");
  fit->add_flag("--csv", csv, "machine-readable output");

  std::string log_path, ambient_unit = "F";
  double ambient = 72.0;
  auto* tl = app.add_subcommand("ingest-templog", "summarize an oven temperature log");
  tl->add_option("file", log_path, "time_s,temp,<unit> file")->required();
  tl->add_option("--ambient", ambient, "ambient temperature")->capture_default_str();
  tl->add_option("--ambient-unit", ambient_unit, "F | C | K")->capture_default_str();
  tl->add_flag("--csv", csv, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*pat) return cmd_pattern(pat_flags, out);
    if (*msh) return cmd_mesh(mesh_flags, out);
    if (*sim) return cmd_simulate(sim_config, out, threads);
    if (*sw) return cmd_sweep(sw_config, gammas, out, record_runtime, parallel);
    if (*fit) return cmd_fit(fit_path, eps_m, csv);
    if (*tl) return cmd_templog(log_path, ambient, ambient_unit, csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(std::current_exception());
  }
  return kExitInternal;
}
