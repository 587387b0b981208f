#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sys/wait.h>

#include <json.hpp>

#include "kirimorph/error.hpp"
#include "kirimorph/interface.hpp"

using namespace kirimorph;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kirimorph_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path config_path(const std::string& name) { return fs::path(KIRIMORPH_SOURCE_DIR) / "configs" / (name + ".json"); }

struct Cli {
  int rc;
  std::string out;
};

Cli cli(const std::string& args) {
  const std::string cmd = std::string(KIRIMORPH_CLI) + " " + args + " 2>&1";
  std::unique_ptr<FILE, int (*)(FILE*)> p(popen(cmd.c_str(), "r"), pclose);
  std::string out;
  std::array<char, 256> buf;
  while (fgets(buf.data(), buf.size(), p.get())) out += buf.data();
  const int status = pclose(p.release());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

RunConfig small_lotus() {
  RunConfig c;
  c.name = "small";
  c.pattern = LotusSpec{30.0, 0.5};
  c.mesh.h_target = 4.0;
  c.load.delta_T = 5.0;
  c.solve.n_load_steps = 2;
  c.output.vtk = false;
  return c;
}

}  // namespace

TEST(Config, BundledConfigsRoundTrip) {
  for (const char* n : {"strip_validation", "bowl_gamma05", "trilayer_spoon", "sweep_fig5"}) {
    const RunConfig c = load_run_config(config_path(n));
    const std::string s = serialize_run_config(c);
    EXPECT_EQ(serialize_run_config(parse_run_config(s)), s) << n;
    EXPECT_EQ(c.name, n);
  }
}

TEST(Config, RoundTripKeepsEveryField) {
  RunConfig c;
  c.pattern = SpoonSpec{25.0, 0.35, 5, 0.4, 50.0, 5.0};
  c.arc.chord_tol = 0.02;
  c.mesh.h_target = 0.7;
  c.layers = {{"substrate", 0.1, "mine", 2}, {"kirigami", 1.8, "abs_kirigami_measured", 1}};
  c.materials["mine"] = {"mine", 123.25, 0.3, -0.0071};
  c.load = {42.5, EigenstrainMode::isotropic};
  c.solve.imperfection_seed = 0xfeedbeefcafeull;
  c.solve.imperfection_bias = -1;
  c.solve.linear_solver = LinearSolverKind::iterative;
  c.solve.boundary = BoundaryMode::free;
  c.solve.formulation.enhanced_thickness_strain = false;
  c.midline.axis = 1;
  c.sweep_gammas = {0.1, 0.3333333333333333};
  c.output.directory = "a/b";
  c.output.stl = true;
  const RunConfig r = parse_run_config(serialize_run_config(c));
  EXPECT_EQ(serialize_run_config(r), serialize_run_config(c));
  EXPECT_EQ(r.solve.imperfection_seed, 0xfeedbeefcafeull);
  EXPECT_EQ(std::get<SpoonSpec>(r.pattern).n_petals, 5);
  EXPECT_EQ(r.sweep_gammas[1], 0.3333333333333333);
  EXPECT_EQ(r.materials.at("mine").alpha, -0.0071);
  EXPECT_EQ(config_hash(r), config_hash(c));
  c.load.delta_T = 42.6;
  EXPECT_NE(config_hash(r), config_hash(c));
}

TEST(Config, ErrorsNameTheField) {
  auto msg = [](const std::string& text) {
    try {
      parse_run_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_EQ(msg(R"({"pattern": {"type": "lotus", "gamma": 0.5}})"), "pattern.R_mm: missing");
  EXPECT_EQ(msg(R"({"pattern": {"type": "lotus", "R_mm": 30, "gamma": 0.5, "R": 3}})"), "pattern.R: unknown key");
  EXPECT_EQ(msg(R"({"pattern": {"type": "lotus", "R_mm": "30", "gamma": 0.5}})"), "pattern.R_mm: expected a number");
  EXPECT_EQ(msg(R"({"pattern": {"type": "strip", "length_mm": 60, "width_mm": 10},
                   "mesh": {"layers": [{"name": "substrate", "thickness_mm": 0.1, "material": "nope"}]}})"),
            "mesh.layers[0].material: unknown material 'nope'");
  EXPECT_EQ(msg(R"({"pattern": {"type": "strip", "length_mm": 60, "width_mm": 10}, "solver": {"boundary": "x"}})"),
            "solver.boundary: 'x' is not one of perimeter|free");
  EXPECT_EQ(msg(R"({"pattern": {"type": "strip", "length_mm": 60, "width_mm": 10}, "load": {"delta_T_K": -1}})"),
            "load.delta_T_K: must be non-negative");
  EXPECT_NE(msg("{").find("invalid JSON"), std::string::npos);
  EXPECT_EQ(msg("{}"), "pattern: missing");
  EXPECT_EQ(msg(R"({"pattern": {"type": "strip", "length_mm": 60, "width_mm": 10},
                   "solver": {"substrate_layer": "film"}})"),
            "solver.substrate_layer: 'film' is not a mesh layer");
}

TEST(Config, CaseSetupSharesMaterials) {
  RunConfig c = load_run_config(config_path("trilayer_spoon"));
  const CaseSetup s = c.case_setup();
  ASSERT_EQ(s.stack.size(), 3u);
  EXPECT_EQ(s.materials.size(), 2u);
  EXPECT_EQ(s.stack[0].material, s.stack[2].material);
  EXPECT_EQ(s.materials[0].alpha, -0.01);
}

TEST(Manifest, Fnv1aVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(config_hash(RunConfig{}).size(), 16u);
}

TEST(Files, AtomicWriteAndOutputRoot) {
  const fs::path d = scratch("atomic");
  write_file_atomic(d / "x" / "a.txt", "one");
  write_file_atomic(d / "x" / "a.txt", "two");
  EXPECT_EQ(read_file(d / "x" / "a.txt"), "two");
  EXPECT_FALSE(fs::exists(d / "x" / "a.txt.tmp"));
  EXPECT_THROW(read_file(d / "missing"), IoError);

  setenv("KIRIMORPH_OUTPUT_ROOT", d.c_str(), 1);
  EXPECT_EQ(resolve_output_dir("run"), d / "run");
  EXPECT_EQ(resolve_output_dir("/abs"), fs::path("/abs"));
  unsetenv("KIRIMORPH_OUTPUT_ROOT");
  EXPECT_EQ(resolve_output_dir("run"), fs::path("run"));
}

TEST(ExitCodes, EveryErrorTypeMapsToOneCode) {
  auto code = [](auto e) { return exit_code_for(std::make_exception_ptr(e)); };
  EXPECT_EQ(code(ConfigError("x")), kExitUsage);
  EXPECT_EQ(code(ParameterError("x")), kExitUsage);
  EXPECT_EQ(code(RangeError("x")), kExitUsage);
  EXPECT_EQ(code(IoError("x")), kExitIo);
  EXPECT_EQ(code(ParseError("x", 3)), kExitIo);
  EXPECT_EQ(code(GeometryConflictError("x")), kExitGeometry);
  EXPECT_EQ(code(DegenerateGeometryError("x")), kExitGeometry);
  EXPECT_EQ(code(SingularSystemError("x")), kExitSolver);
  EXPECT_EQ(code(InvertedElementError(1, "x")), kExitSolver);
  EXPECT_EQ(code(ContinuationStall(MorphResult{})), kExitStall);
  EXPECT_EQ(code(Error("x")), kExitInternal);
  EXPECT_EQ(code(std::bad_alloc()), kExitInternal);
  EXPECT_EQ(exit_code_for(std::make_exception_ptr(42)), kExitInternal);
}

TEST(Pipeline, PatternExportsAndClosedStl) {
  RunConfig c;
  c.name = "lotus";
  c.pattern = LotusSpec{30.0, 0.5};
  c.mesh.h_target = 3.0;
  c.output.stl = true;
  const fs::path d = scratch("pattern");
  const auto r = run_pattern(c, d);
  EXPECT_NEAR(r.removed_fraction, 0.375, 1e-3);
  ASSERT_EQ(r.outputs.size(), 3u);
  for (const auto& f : r.outputs) EXPECT_TRUE(fs::exists(d / f)) << f;
  std::ifstream is(d / "lotus_kirigami.stl", std::ios::binary);
  const auto audit = audit_stl(read_stl(is));
  EXPECT_TRUE(audit.closed());
  EXPECT_GT(audit.faces, 100u);
  EXPECT_EQ(parse_polygons(read_file(d / "lotus.poly")).layers.size(), 2u);
}

TEST(Pipeline, StripValidationConfig) {
  const RunConfig c = load_run_config(config_path("strip_validation"));
  const fs::path d = scratch("strip");
  const auto r = run_simulate(c, d);
  ASSERT_TRUE(r.metrics.has_curvature);
  EXPECT_EQ(r.metrics.status, "ok");
  EXPECT_NEAR(std::abs(r.metrics.curvature) / r.metrics.timoshenko, 1.0, 0.05);
  const std::string m = read_file(d / "metrics.csv");
  EXPECT_EQ(m.substr(0, m.find('\n')),
            "name,lambda,H_mm,H_over_2R,curvature_per_mm,timoshenko_per_mm,elements,nodes,status");
  const std::string man = read_file(d / "manifest.json");
  EXPECT_NE(man.find(config_hash(c)), std::string::npos);
  const auto embedded = nlohmann::json::parse(man).at("config").dump();
  EXPECT_EQ(serialize_run_config(parse_run_config(embedded)), serialize_run_config(c));
  for (const auto& f : r.manifest.outputs) EXPECT_TRUE(fs::exists(d / f)) << f;
}

TEST(Pipeline, ZeroLoadLeavesOnlyTheImperfection) {
  RunConfig c = small_lotus();
  c.load.delta_T = 0.0;
  const auto r = run_simulate(c, scratch("zero"));
  EXPECT_EQ(r.metrics.status, "ok");
  EXPECT_LE(r.metrics.H, 2.0 * r.outcome.result.imperfection_amplitude);
}

TEST(Pipeline, SimulateAndSweepAreDeterministic) {
  const RunConfig c = small_lotus();
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const auto ra = run_simulate(c, a);
  run_simulate(c, b);
  for (const char* f : {"metrics.csv", "convergence.csv"}) EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  run_sweep(c, {0.3, 0.5}, a);
  run_sweep(c, {0.3, 0.5}, b);
  EXPECT_EQ(read_file(a / "sweep.csv"), read_file(b / "sweep.csv"));
  EXPECT_EQ(read_file(a / "sweep_plot.dat"), read_file(b / "sweep_plot.dat"));

  // single-gamma sweep row equals the simulate metrics
  const auto one = run_sweep(c, {0.5}, scratch("det_one"));
  ASSERT_EQ(one.sweep.rows.size(), 1u);
  EXPECT_EQ(one.sweep.rows[0].H, ra.metrics.H);
  EXPECT_EQ(one.sweep.rows[0].H_over_2R, ra.metrics.H_over_2R);
  EXPECT_EQ(one.sweep.rows[0].lambda, ra.metrics.lambda);
}

TEST(Pipeline, SweepRejectsNonLotus) {
  RunConfig c;
  c.pattern = StripSpec{};
  EXPECT_THROW(run_sweep(c, {0.5}, scratch("nolotus")), ConfigError);
  EXPECT_THROW(run_sweep(small_lotus(), {}, scratch("nogamma")), ConfigError);
}

TEST(Cli, PatternPresetAndUsageErrors) {
  const fs::path d = scratch("cli_pattern");
  auto r = cli("pattern --preset lotus --R 30 --gamma 0.5 --out " + d.string());
  EXPECT_EQ(r.rc, 0) << r.out;
  EXPECT_NE(r.out.find("removed_fraction 0.375"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(d / "lotus.svg"));
  r = cli("pattern --preset lotus --gamma 0.5 --out " + d.string());
  EXPECT_EQ(r.rc, kExitUsage);
  EXPECT_NE(r.out.find("--R"), std::string::npos) << r.out;
  EXPECT_EQ(cli("").rc, kExitUsage);
  EXPECT_EQ(cli("frobnicate").rc, kExitUsage);
  EXPECT_EQ(cli("pattern --preset lotus --R 30 --gamma 1.5").rc, kExitUsage);
}

TEST(Cli, SimulateErrorCodes) {
  const fs::path d = scratch("cli_sim");
  EXPECT_EQ(cli("simulate " + (d / "missing.json").string()).rc, kExitIo);
  write_file_atomic(d / "bad.json", "{\"pattern\": ");
  EXPECT_EQ(cli("simulate " + (d / "bad.json").string()).rc, kExitUsage);
  write_file_atomic(d / "poly.json", R"({"pattern": {"type": "custom", "path": "bowtie.poly"}})");
  write_file_atomic(d / "bowtie.poly", "LAYER substrate\nP 0 0 1 1 1 0 0 1\n");
  EXPECT_EQ(cli("simulate " + (d / "poly.json").string()).rc, kExitGeometry);
}

TEST(Cli, FitMaterialAndTemperatureLog) {
  const fs::path d = scratch("cli_mat");
  std::string lin = "strain,stress_mpa\n", quad = lin;
  for (int i = 0; i <= 100; ++i) {
    const double e = 0.001 * i;
    char row[64];
    std::snprintf(row, sizeof row, "%.6f,%.9f\n", e, 404.2082 * e);
    lin += row;
    std::snprintf(row, sizeof row, "%.6f,%.9f\n", e, 3000.0 * e * e);
    quad += row;
  }
  write_file_atomic(d / "lin.csv", lin);
  write_file_atomic(d / "quad.csv", quad);
  auto r = cli("fit-material " + (d / "lin.csv").string() + " --csv");
  EXPECT_EQ(r.rc, 0);
  EXPECT_EQ(r.out, "eps_m,E_MPa\n0.05,404.2082\n");
  r = cli("fit-material " + (d / "quad.csv").string() + " --eps-m 0.1");
  EXPECT_NE(r.out.find("E_MPa 200.0"), std::string::npos) << r.out;
  EXPECT_EQ(cli("fit-material " + (d / "lin.csv").string() + " --eps-m 0.5").rc, kExitUsage);

  write_file_atomic(d / "oven.csv", "time_s,temp,F\n0,270\n60,270\n600,270\n");
  r = cli("ingest-templog " + (d / "oven.csv").string() + " --ambient 72 --ambient-unit F");
  EXPECT_EQ(r.rc, 0);
  EXPECT_NE(r.out.find("delta_T_K 110.0\n"), std::string::npos) << r.out;
  write_file_atomic(d / "back.csv", "time_s,temp,F\n0,270\n-1,270\n");
  EXPECT_EQ(cli("ingest-templog " + (d / "back.csv").string()).rc, kExitIo);
}
