#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kirimorph/error.hpp"
#include "kirimorph/interface.hpp"

namespace kirimorph {

using nlohmann::json;

namespace {

// Strict object reader: typed getters report the dotted path, leftovers are rejected.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void opt(const std::string& key, T& out) {
    if (!has(key)) return;
    out = get<T>(key);
  }

  template <class T>
  T req(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key) + ": missing");
    return get<T>(key);
  }

  Obj sub(const std::string& key) { return Obj(raw(key), field(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  template <class T>
  T get(const std::string& key) {
    const json& v = raw(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true/false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        throw ConfigError(field(key) + ": must be non-negative");
    } else {
      if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    }
    return v.get<T>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E parse_enum(const std::string& field, const std::string& v, std::initializer_list<std::pair<const char*, E>> opts) {
  std::string names;
  for (const auto& [n, e] : opts) {
    if (v == n) return e;
    names += names.empty() ? n : std::string("|") + n;
  }
  throw ConfigError(field + ": '" + v + "' is not one of " + names);
}

const char* eigen_name(EigenstrainMode m) { return m == EigenstrainMode::in_plane ? "in_plane" : "isotropic"; }
const char* solver_name(LinearSolverKind k) { return k == LinearSolverKind::direct ? "direct" : "iterative"; }
const char* boundary_name(BoundaryMode b) { return b == BoundaryMode::perimeter ? "perimeter" : "free"; }

PatternSpec read_pattern(Obj& o) {
  const auto type = o.req<std::string>("type");
  PatternSpec out;
  if (type == "lotus") {
    LotusSpec s;
    s.R = o.req<double>("R_mm");
    s.gamma = o.req<double>("gamma");
    o.opt("n_petals", s.n_petals);
    o.opt("petal_fill", s.petal_fill);
    out = s;
  } else if (type == "strip") {
    StripSpec s;
    s.length = o.req<double>("length_mm");
    s.width = o.req<double>("width_mm");
    out = s;
  } else if (type == "pyramid_cross") {
    PyramidCrossSpec s;
    s.R = o.req<double>("R_mm");
    o.opt("arm_width_mm", s.arm_width);
    o.opt("n_arms", s.n_arms);
    out = s;
  } else if (type == "annulus_rim") {
    AnnulusRimSpec s;
    s.R = o.req<double>("R_mm");
    s.r_inner = o.req<double>("r_inner_mm");
    o.opt("n_petals", s.n_petals);
    o.opt("petal_fill", s.petal_fill);
    out = s;
  } else if (type == "spoon") {
    SpoonSpec s;
    s.R = o.req<double>("R_mm");
    s.gamma = o.req<double>("gamma");
    o.opt("n_petals", s.n_petals);
    o.opt("petal_fill", s.petal_fill);
    o.opt("handle_length_mm", s.handle_length);
    o.opt("handle_width_mm", s.handle_width);
    out = s;
  } else if (type == "custom") {
    out = CustomSpec{o.req<std::string>("path")};
  } else {
    throw ConfigError(o.field("type") + ": unknown pattern '" + type + "'");
  }
  return out;
}

json write_pattern(const PatternSpec& p, const ArcOptions& arc) {
  json j = std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LotusSpec>)
          return {{"type", "lotus"}, {"R_mm", s.R}, {"gamma", s.gamma}, {"n_petals", s.n_petals}, {"petal_fill", s.petal_fill}};
        else if constexpr (std::is_same_v<T, StripSpec>)
          return {{"type", "strip"}, {"length_mm", s.length}, {"width_mm", s.width}};
        else if constexpr (std::is_same_v<T, PyramidCrossSpec>)
          return {{"type", "pyramid_cross"}, {"R_mm", s.R}, {"arm_width_mm", s.arm_width}, {"n_arms", s.n_arms}};
        else if constexpr (std::is_same_v<T, AnnulusRimSpec>)
          return {{"type", "annulus_rim"}, {"R_mm", s.R}, {"r_inner_mm", s.r_inner}, {"n_petals", s.n_petals},
                  {"petal_fill", s.petal_fill}};
        else if constexpr (std::is_same_v<T, SpoonSpec>)
          return {{"type", "spoon"}, {"R_mm", s.R}, {"gamma", s.gamma}, {"n_petals", s.n_petals},
                  {"petal_fill", s.petal_fill}, {"handle_length_mm", s.handle_length},
                  {"handle_width_mm", s.handle_width}};
        else
          return {{"type", "custom"}, {"path", s.path.string()}};
      },
      p);
  j["chord_tol_mm"] = arc.chord_tol;
  return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  Obj root(doc, "");
  root.opt("name", c.name);

  if (!root.has("pattern")) throw ConfigError("pattern: missing");
  {
    Obj p = root.sub("pattern");
    c.pattern = read_pattern(p);
    p.opt("chord_tol_mm", c.arc.chord_tol);
    p.finish();
  }

  if (root.has("mesh")) {
    Obj m = root.sub("mesh");
    m.opt("h_target_mm", c.mesh.h_target);
    m.opt("min_angle_deg", c.mesh.min_angle);
    m.opt("area_min_mm2", c.mesh.area_min);
    m.opt("max_nodes", c.mesh.max_nodes);
    if (m.has("layers")) {
      const json& arr = m.raw("layers");
      if (!arr.is_array() || arr.empty()) throw ConfigError("mesh.layers: expected a non-empty array");
      c.layers.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Obj l(arr[i], "mesh.layers[" + std::to_string(i) + "]");
        LayerConfig lc;
        lc.name = l.req<std::string>("name");
        lc.thickness_mm = l.req<double>("thickness_mm");
        lc.material = l.req<std::string>("material");
        l.opt("subdivisions", lc.subdivisions);
        l.finish();
        c.layers.push_back(lc);
      }
    }
    m.finish();
  }

  if (root.has("materials")) {
    const json& mats = root.raw("materials");
    if (!mats.is_object()) throw ConfigError("materials: expected an object");
    for (auto it = mats.begin(); it != mats.end(); ++it) {
      Obj o(it.value(), "materials." + it.key());
      MaterialModel mm;
      mm.name = it.key();
      mm.E = o.req<double>("E_MPa");
      mm.nu = o.req<double>("nu");
      mm.alpha = o.req<double>("alpha_per_K");
      o.finish();
      c.materials[it.key()] = mm;
    }
  }

  if (root.has("load")) {
    Obj l = root.sub("load");
    l.opt("delta_T_K", c.load.delta_T);
    if (l.has("eigenstrain"))
      c.load.mode = parse_enum<EigenstrainMode>(l.field("eigenstrain"), l.req<std::string>("eigenstrain"),
                                                {{"in_plane", EigenstrainMode::in_plane},
                                                 {"isotropic", EigenstrainMode::isotropic}});
    l.finish();
  }

  if (root.has("solver")) {
    Obj s = root.sub("solver");
    auto& S = c.solve;
    s.opt("newton_tol", S.newton_tol);
    s.opt("max_newton_iters", S.max_newton_iters);
    s.opt("n_load_steps", S.n_load_steps);
    s.opt("max_halving_depth", S.max_halving_depth);
    s.opt("imperfection_amplitude_mm", S.imperfection_amplitude);
    s.opt("imperfection_seed", S.imperfection_seed);
    s.opt("imperfection_bias", S.imperfection_bias);
    if (s.has("linear_solver"))
      S.linear_solver = parse_enum<LinearSolverKind>(s.field("linear_solver"), s.req<std::string>("linear_solver"),
                                                     {{"direct", LinearSolverKind::direct},
                                                      {"iterative", LinearSolverKind::iterative}});
    if (s.has("boundary"))
      S.boundary = parse_enum<BoundaryMode>(s.field("boundary"), s.req<std::string>("boundary"),
                                            {{"perimeter", BoundaryMode::perimeter}, {"free", BoundaryMode::free}});
    s.opt("substrate_layer", S.substrate_layer);
    s.opt("threads", S.threads);
    s.opt("line_search", S.line_search);
    s.opt("reduced_volumetric_nu", S.formulation.reduced_volumetric_nu);
    s.opt("enhanced_thickness_strain", S.formulation.enhanced_thickness_strain);
    s.finish();
  }

  if (root.has("analysis")) {
    Obj a = root.sub("analysis");
    if (a.has("curvature_axis")) {
      const auto ax = a.req<std::string>("curvature_axis");
      c.midline.axis = parse_enum<int>(a.field("curvature_axis"), ax, {{"x", 0}, {"y", 1}});
    }
    a.opt("band_mm", c.midline.band);
    a.opt("trim_mm", c.midline.trim);
    a.finish();
  }

  if (root.has("sweep")) {
    Obj s = root.sub("sweep");
    if (s.has("gammas")) {
      const json& g = s.raw("gammas");
      if (!g.is_array()) throw ConfigError("sweep.gammas: expected an array");
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g[i].is_number()) throw ConfigError("sweep.gammas[" + std::to_string(i) + "]: expected a number");
        c.sweep_gammas.push_back(g[i].get<double>());
      }
    }
    s.opt("parallel_cases", c.sweep_parallel);
    s.finish();
  }

  if (root.has("output")) {
    Obj o = root.sub("output");
    std::string dir = c.output.directory.string();
    o.opt("directory", dir);
    c.output.directory = dir;
    o.opt("svg", c.output.svg);
    o.opt("polygons", c.output.polygons);
    o.opt("stl", c.output.stl);
    o.opt("vtk", c.output.vtk);
    o.opt("metrics", c.output.metrics);
    o.opt("convergence", c.output.convergence);
    o.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c = parse_run_config(read_file(path));
  // custom pattern files are relative to the config
  if (auto* cs = std::get_if<CustomSpec>(&c.pattern); cs && cs->path.is_relative())
    cs->path = path.parent_path() / cs->path;
  return c;
}

std::string serialize_run_config(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["pattern"] = write_pattern(c.pattern, c.arc);
  json layers = json::array();
  for (const auto& l : c.layers)
    layers.push_back({{"name", l.name}, {"thickness_mm", l.thickness_mm}, {"material", l.material},
                      {"subdivisions", l.subdivisions}});
  j["mesh"] = {{"h_target_mm", c.mesh.h_target}, {"min_angle_deg", c.mesh.min_angle},
               {"area_min_mm2", c.mesh.area_min}, {"max_nodes", c.mesh.max_nodes}, {"layers", layers}};
  json mats = json::object();
  for (const auto& [k, m] : c.materials) mats[k] = {{"E_MPa", m.E}, {"nu", m.nu}, {"alpha_per_K", m.alpha}};
  j["materials"] = mats;
  j["load"] = {{"delta_T_K", c.load.delta_T}, {"eigenstrain", eigen_name(c.load.mode)}};
  const auto& S = c.solve;
  j["solver"] = {{"newton_tol", S.newton_tol},
                 {"max_newton_iters", S.max_newton_iters},
                 {"n_load_steps", S.n_load_steps},
                 {"max_halving_depth", S.max_halving_depth},
                 {"imperfection_amplitude_mm", S.imperfection_amplitude},
                 {"imperfection_seed", S.imperfection_seed},
                 {"imperfection_bias", S.imperfection_bias},
                 {"linear_solver", solver_name(S.linear_solver)},
                 {"boundary", boundary_name(S.boundary)},
                 {"substrate_layer", S.substrate_layer},
                 {"threads", S.threads},
                 {"line_search", S.line_search},
                 {"reduced_volumetric_nu", S.formulation.reduced_volumetric_nu},
                 {"enhanced_thickness_strain", S.formulation.enhanced_thickness_strain}};
  j["analysis"] = {{"curvature_axis", c.midline.axis == 0 ? "x" : "y"},
                   {"band_mm", c.midline.band},
                   {"trim_mm", c.midline.trim}};
  j["sweep"] = {{"gammas", c.sweep_gammas}, {"parallel_cases", c.sweep_parallel}};
  j["output"] = {{"directory", c.output.directory.string()}, {"svg", c.output.svg},
                 {"polygons", c.output.polygons},            {"stl", c.output.stl},
                 {"vtk", c.output.vtk},                      {"metrics", c.output.metrics},
                 {"convergence", c.output.convergence}};
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& field, const std::string& msg) {
    if (!ok) throw ConfigError(field + ": " + msg);
  };
  try {
    check_spec(pattern);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("pattern: ") + e.what());
  }
  need(arc.chord_tol > 0, "pattern.chord_tol_mm", "must be positive");
  need(mesh.h_target > 0, "mesh.h_target_mm", "must be positive");
  need(mesh.min_angle > 0 && mesh.min_angle <= 33, "mesh.min_angle_deg", "must lie in (0, 33]");
  need(!layers.empty(), "mesh.layers", "at least one layer required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto f = "mesh.layers[" + std::to_string(i) + "]";
    const auto& l = layers[i];
    need(!l.name.empty(), f + ".name", "empty");
    need(names.insert(l.name).second, f + ".name", "duplicate layer '" + l.name + "'");
    need(l.thickness_mm > 0, f + ".thickness_mm", "must be positive");
    need(l.subdivisions >= 1, f + ".subdivisions", "must be >= 1");
    if (!materials.count(l.material)) {
      try {
        material_preset(l.material);
      } catch (const Error&) {
        throw ConfigError(f + ".material: unknown material '" + l.material + "'");
      }
    }
  }
  for (const auto& [k, m] : materials) {
    try {
      m.validate();
    } catch (const ParameterError& e) {
      throw ConfigError("materials." + k + ": " + e.what());
    }
  }
  need(names.count(solve.substrate_layer) > 0, "solver.substrate_layer",
       "'" + solve.substrate_layer + "' is not a mesh layer");
  need(load.delta_T >= 0, "load.delta_T_K", "must be non-negative");
  try {
    solve.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  need(midline.band > 0, "analysis.band_mm", "must be positive");
  for (std::size_t i = 0; i < sweep_gammas.size(); ++i)
    need(sweep_gammas[i] > 0 && sweep_gammas[i] <= 1, "sweep.gammas[" + std::to_string(i) + "]", "must lie in (0, 1]");
  need(sweep_parallel >= 1, "sweep.parallel_cases", "must be >= 1");
}

CaseSetup RunConfig::case_setup() const {
  validate();
  CaseSetup s;
  s.pattern = pattern;
  s.arc = arc;
  s.mesh = mesh;
  s.load = load;
  s.solve = solve;
  std::vector<std::string> used;
  for (const auto& l : layers) {
    int idx = -1;
    for (std::size_t k = 0; k < used.size(); ++k)
      if (used[k] == l.material) idx = static_cast<int>(k);
    if (idx < 0) {
      idx = static_cast<int>(used.size());
      used.push_back(l.material);
      auto it = materials.find(l.material);
      s.materials.push_back(it != materials.end() ? it->second : material_preset(l.material));
    }
    s.stack.push_back({l.name, l.thickness_mm, idx, l.subdivisions});
  }
  return s;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_run_config(cfg))));
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    os.flush();
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv("KIRIMORPH_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / dir;
  return dir;
}

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ContinuationStall&) {
    return kExitStall;
  } catch (const ConfigError&) {
    return kExitUsage;
  } catch (const ParameterError&) {
    return kExitUsage;
  } catch (const RangeError&) {
    return kExitUsage;
  } catch (const IoError&) {
    return kExitIo;
  } catch (const ParseError&) {
    return kExitIo;
  } catch (const GeometryConflictError&) {
    return kExitGeometry;
  } catch (const DegenerateGeometryError&) {
    return kExitGeometry;
  } catch (const SingularSystemError&) {
    return kExitSolver;
  } catch (const InvertedElementError&) {
    return kExitSolver;
  } catch (...) {
    return kExitInternal;
  }
}

const char* version_string() { return KIRIMORPH_VERSION; }

}  // namespace kirimorph
