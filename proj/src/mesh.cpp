#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "kirimorph/error.hpp"
#include "kirimorph/meshing.hpp"

namespace kirimorph {

namespace {

std::uint64_t ukey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

std::uint64_t dkey(int a, int b) { return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b); }

double angle_at(Point2 p, Point2 q, Point2 r) {
  const Point2 u = q - p, v = r - p;
  return std::atan2(std::abs(cross(u, v)), dot(u, v)) * 180.0 / std::numbers::pi;
}

}  // namespace

MeshAudit audit_mesh(const TriMesh2D& mesh, const MeshOptions& opts, const PlanarLayout* layout) {
  MeshAudit audit;
  auto fail = [&](std::string s) {
    if (audit.violations.size() < 50) audit.violations.push_back(std::move(s));
  };
  const int n = static_cast<int>(mesh.nodes.size());
  if (mesh.coverage.size() != mesh.triangles.size()) fail("coverage size differs from triangle count");

  // Duplicate nodes.
  {
    std::vector<Point2> sorted = mesh.nodes;
    std::sort(sorted.begin(), sorted.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i] == sorted[i - 1]) fail("duplicate node coordinates");
  }

  // Constrained corner sharpness per node.
  std::vector<std::vector<int>> seg_nbrs(n);
  std::unordered_set<std::uint64_t> constrained;
  for (const auto& [a, b] : mesh.boundary_edges) {
    seg_nbrs[a].push_back(b);
    seg_nbrs[b].push_back(a);
    constrained.insert(ukey(a, b));
  }
  std::vector<double> corner(n, 180.0);
  for (int v = 0; v < n; ++v)
    for (std::size_t i = 0; i < seg_nbrs[v].size(); ++i)
      for (std::size_t j = i + 1; j < seg_nbrs[v].size(); ++j)
        corner[v] = std::min(corner[v], angle_at(mesh.nodes[v], mesh.nodes[seg_nbrs[v][i]], mesh.nodes[seg_nbrs[v][j]]));

  std::unordered_map<std::uint64_t, int> half;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    for (int v : T)
      if (v < 0 || v >= n) {
        fail("triangle " + std::to_string(t) + " references a missing node");
        return audit;
      }
    const Point2 a = mesh.nodes[T[0]], b = mesh.nodes[T[1]], c = mesh.nodes[T[2]];
    const double area = 0.5 * cross(b - a, c - a);
    audit.area_sum += area;
    if (!(area >= opts.area_min)) fail("triangle " + std::to_string(t) + " has area " + std::to_string(area));
    for (int k = 0; k < 3; ++k) {
      if (++half[dkey(T[k], T[(k + 1) % 3])] > 1) fail("directed edge repeated: overlapping triangles");
      const double ang = angle_at(mesh.nodes[T[k]], mesh.nodes[T[(k + 1) % 3]], mesh.nodes[T[(k + 2) % 3]]);
      if (ang < opts.min_angle - 1e-9) {
        const bool both_constrained =
            constrained.count(ukey(T[k], T[(k + 1) % 3])) && constrained.count(ukey(T[k], T[(k + 2) % 3]));
        if (both_constrained || corner[T[k]] < 60.0) {
          ++audit.small_angle_exempt;
          continue;
        }
      }
      audit.min_angle_deg = std::min(audit.min_angle_deg, ang);
    }
  }
  if (audit.min_angle_deg < opts.min_angle - 1e-9)
    fail("minimum angle " + std::to_string(audit.min_angle_deg) + " below " + std::to_string(opts.min_angle));

  // Unmatched half-edges are outer boundary; no node may sit inside one (hanging node).
  std::vector<std::array<int, 2>> outer;
  for (const auto& [k, c] : half) {
    const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    if (!half.count(dkey(b, a))) outer.push_back({a, b});
  }
  std::vector<int> deg_out(n, 0), deg_in(n, 0);
  for (const auto& [a, b] : outer) ++deg_out[a], ++deg_in[b];
  for (int v = 0; v < n; ++v)
    if (deg_out[v] != deg_in[v]) fail("boundary is not a union of closed loops at node " + std::to_string(v));
  {
    // x-sorted nodes for a pruned point-on-edge search.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int l, int r) { return mesh.nodes[l].x < mesh.nodes[r].x; });
    for (const auto& [a, b] : outer) {
      const Point2 pa = mesh.nodes[a], pb = mesh.nodes[b];
      const double x0 = std::min(pa.x, pb.x), x1 = std::max(pa.x, pb.x);
      auto it = std::lower_bound(order.begin(), order.end(), x0, [&](int i, double x) { return mesh.nodes[i].x < x; });
      for (; it != order.end() && mesh.nodes[*it].x <= x1; ++it) {
        if (*it == a || *it == b) continue;
        const Point2 p = mesh.nodes[*it];
        if (geom::orient(pa, pb, p) == 0 && dot(p - pa, p - pb) < 0) fail("hanging node " + std::to_string(*it));
      }
    }
  }
  std::vector<char> used(n, 0);
  for (const auto& T : mesh.triangles)
    for (int v : T) used[v] = 1;
  for (int v = 0; v < n; ++v)
    if (!used[v]) fail("node " + std::to_string(v) + " belongs to no triangle");

  if (layout) {
    // Every input edge must be covered by constrained mesh edges lying on it.
    auto check_ring = [&](const Ring& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        const Point2 a = r[i], b = r[(i + 1) % r.size()];
        const double len = distance(a, b);
        double covered = 0.0;
        for (const auto& [p, q] : mesh.boundary_edges) {
          const Point2 pp = mesh.nodes[p], pq = mesh.nodes[q];
          if (std::max(pp.x, pq.x) < std::min(a.x, b.x) - 1e-9 || std::min(pp.x, pq.x) > std::max(a.x, b.x) + 1e-9 ||
              std::max(pp.y, pq.y) < std::min(a.y, b.y) - 1e-9 || std::min(pp.y, pq.y) > std::max(a.y, b.y) + 1e-9)
            continue;
          if (geom::point_segment_distance(pp, a, b) <= 1e-8 && geom::point_segment_distance(pq, a, b) <= 1e-8)
            covered += distance(pp, pq);
        }
        if (std::abs(covered - len) > 1e-7 * std::max(1.0, len))
          fail("input edge (" + std::to_string(a.x) + ", " + std::to_string(a.y) + ") - (" + std::to_string(b.x) +
               ", " + std::to_string(b.y) + ") is not a union of mesh edges");
      }
    };
    auto check_region = [&](const Region& reg) {
      for (const auto& poly : reg) {
        check_ring(poly.outer);
        for (const auto& h : poly.holes) check_ring(h);
      }
    };
    check_region(layout->footprint);
    for (const auto& l : layout->layers) check_region(l.region);
  }
  return audit;
}

// ---------------------------------------------------------------------------

std::string format_mesh2d(const TriMesh2D& mesh) {
  std::ostringstream os;
  os.precision(17);
  os << "# kirimorph 2D mesh, coordinates in mm\nLAYERS";
  for (const auto& n : mesh.layer_names) os << ' ' << n;
  os << "\nNODES " << mesh.nodes.size() << '\n';
  for (const auto& p : mesh.nodes) os << p.x << ' ' << p.y << '\n';
  os << "TRIANGLES " << mesh.triangles.size() << '\n';
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    os << T[0] << ' ' << T[1] << ' ' << T[2] << ' ' << mesh.coverage[t] << '\n';
  }
  os << "SEGMENTS " << mesh.boundary_edges.size() << '\n';
  for (const auto& [a, b] : mesh.boundary_edges) os << a << ' ' << b << '\n';
  return os.str();
}

TriMesh2D parse_mesh2d(const std::string& text) {
  TriMesh2D mesh;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&](std::istringstream& ls) {
    while (std::getline(in, line)) {
      ++line_no;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ls = std::istringstream(line);
      return true;
    }
    return false;
  };
  std::istringstream ls;
  bool have_nodes = false, have_tris = false;
  while (next_line(ls)) {
    std::string tag;
    ls >> tag;
    if (tag == "LAYERS") {
      std::string name;
      while (ls >> name) mesh.layer_names.push_back(name);
    } else if (tag == "NODES" || tag == "TRIANGLES" || tag == "SEGMENTS") {
      long long count = -1;
      if (!(ls >> count) || count < 0) throw ParseError(tag + " requires a count", line_no);
      for (long long i = 0; i < count; ++i) {
        std::istringstream row;
        if (!next_line(row)) throw ParseError("unexpected end of file in " + tag + " block", line_no);
        if (tag == "NODES") {
          Point2 p;
          if (!(row >> p.x >> p.y)) throw ParseError("bad node record", line_no);
          mesh.nodes.push_back(p);
        } else if (tag == "TRIANGLES") {
          std::array<int, 3> t{};
          std::uint32_t mask = 0;
          if (!(row >> t[0] >> t[1] >> t[2])) throw ParseError("bad triangle record", line_no);
          if (!(row >> mask)) mask = 1u;
          for (int v : t)
            if (v < 0 || v >= static_cast<int>(mesh.nodes.size()))
              throw ParseError("triangle references unknown node " + std::to_string(v), line_no);
          mesh.triangles.push_back(t);
          mesh.coverage.push_back(mask);
        } else {
          std::array<int, 2> e{};
          if (!(row >> e[0] >> e[1])) throw ParseError("bad segment record", line_no);
          mesh.boundary_edges.push_back({std::min(e[0], e[1]), std::max(e[0], e[1])});
        }
      }
      have_nodes |= tag == "NODES";
      have_tris |= tag == "TRIANGLES";
    } else {
      throw ParseError("unknown record '" + tag + "'", line_no);
    }
  }
  if (!have_nodes || !have_tris) throw ParseError("mesh file needs NODES and TRIANGLES blocks");
  if (mesh.layer_names.empty()) mesh.layer_names.push_back("substrate");
  for (auto& t : mesh.triangles) {
    const double a = cross(mesh.nodes[t[1]] - mesh.nodes[t[0]], mesh.nodes[t[2]] - mesh.nodes[t[0]]);
    if (a < 0) std::swap(t[1], t[2]);
    if (a == 0) throw DegenerateGeometryError("mesh file contains a zero-area triangle");
  }
  return mesh;
}

// ---------------------------------------------------------------------------

int LayeredMesh::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layer_names.size(); ++i)
    if (layer_names[i] == name) return static_cast<int>(i);
  return -1;
}

LayeredMesh extrude(const TriMesh2D& mesh, const std::vector<StackLayer>& stack) {
  if (stack.empty()) throw ParameterError("extrude: empty layer stack");
  LayeredMesh out;
  out.base = mesh;
  std::vector<int> bits;
  std::vector<int> first_level;  // level index of each layer's bottom
  double z = 0.0;
  out.level_z.push_back(0.0);
  for (const auto& l : stack) {
    const int bit = mesh.layer_bit(l.name);
    if (bit < 0) throw ParameterError("extrude: unknown layer '" + l.name + "'");
    if (!(l.thickness > 0.0)) throw ParameterError("extrude: layer '" + l.name + "' needs thickness > 0");
    if (l.subdivisions < 1) throw ParameterError("extrude: layer '" + l.name + "' needs subdivisions >= 1");
    bits.push_back(bit);
    out.layer_names.push_back(l.name);
    out.layer_materials.push_back(l.material);
    out.layer_thickness.push_back(l.thickness);
    out.layer_z0.push_back(z);
    first_level.push_back(static_cast<int>(out.level_z.size()) - 1);
    for (int s = 1; s <= l.subdivisions; ++s)
      out.level_z.push_back(s == l.subdivisions ? z + l.thickness : z + l.thickness * s / l.subdivisions);
    z += l.thickness;
  }
  const std::size_t n2 = mesh.nodes.size(), nl = out.level_z.size();
  std::vector<char> need(n2 * nl, 0);
  struct Raw {
    int tri, level, layer;
  };
  std::vector<Raw> raw;
  for (std::size_t L = 0; L < stack.size(); ++L) {
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      if (!mesh.covers(t, bits[L])) continue;
      for (int s = 0; s < stack[L].subdivisions; ++s) {
        const int lev = first_level[L] + s;
        raw.push_back({static_cast<int>(t), lev, static_cast<int>(L)});
        for (int v : mesh.triangles[t]) need[lev * n2 + v] = need[(lev + 1) * n2 + v] = 1;
      }
    }
  }
  std::vector<int> id(n2 * nl, -1);
  for (std::size_t lev = 0; lev < nl; ++lev)
    for (std::size_t v = 0; v < n2; ++v) {
      if (!need[lev * n2 + v]) continue;
      id[lev * n2 + v] = static_cast<int>(out.nodes.size());
      out.nodes.push_back({mesh.nodes[v].x, mesh.nodes[v].y, out.level_z[lev]});
      out.node_2d.push_back(static_cast<int>(v));
      out.node_level.push_back(static_cast<int>(lev));
    }
  for (const auto& r : raw) {
    const auto& T = mesh.triangles[r.tri];
    std::array<int, 6> e{};
    for (int k = 0; k < 3; ++k) {
      e[k] = id[r.level * n2 + T[k]];
      e[k + 3] = id[(r.level + 1) * n2 + T[k]];
    }
    out.elements.push_back(e);
    out.element_layer.push_back(r.layer);
    out.element_triangle.push_back(r.tri);
  }
  out.node_on_boundary = footprint_boundary_nodes(mesh);
  return out;
}

double wedge_volume(const LayeredMesh& mesh, std::size_t e) {
  const auto& E = mesh.elements[e];
  const auto& a = mesh.nodes[E[0]];
  const auto& b = mesh.nodes[E[1]];
  const auto& c = mesh.nodes[E[2]];
  const double area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
  return area * (mesh.nodes[E[3]][2] - a[2]);
}

MeshReport mesh_report(const LayeredMesh& mesh) {
  MeshReport r;
  r.elements = mesh.elements.size();
  r.nodes = mesh.nodes.size();
  r.min_volume = r.elements ? 1e300 : 0.0;
  r.max_volume = 0.0;
  r.layers.resize(mesh.layer_names.size());
  for (std::size_t i = 0; i < mesh.layer_names.size(); ++i) r.layers[i].name = mesh.layer_names[i];
  std::vector<std::unordered_set<int>> tris(mesh.layer_names.size());
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const double v = wedge_volume(mesh, e);
    r.min_volume = std::min(r.min_volume, v);
    r.max_volume = std::max(r.max_volume, v);
    auto& L = r.layers[mesh.element_layer[e]];
    ++L.elements;
    L.volume += v;
    tris[mesh.element_layer[e]].insert(mesh.element_triangle[e]);
  }
  for (std::size_t l = 0; l < tris.size(); ++l) {
    std::vector<int> ts(tris[l].begin(), tris[l].end());
    std::sort(ts.begin(), ts.end());
    for (int t : ts) {
      const auto& T = mesh.base.triangles[t];
      r.layers[l].footprint_area +=
          0.5 * cross(mesh.base.nodes[T[1]] - mesh.base.nodes[T[0]], mesh.base.nodes[T[2]] - mesh.base.nodes[T[0]]);
    }
  }
  double min_angle = 180.0;
  for (const auto& T : mesh.base.triangles)
    min_angle = std::min(min_angle, geom::min_angle_deg(mesh.base.nodes[T[0]], mesh.base.nodes[T[1]], mesh.base.nodes[T[2]]));
  r.min_angle_deg = mesh.base.triangles.empty() ? 0.0 : min_angle;
  return r;
}

std::vector<std::string> audit_layered(const LayeredMesh& mesh) {
  std::vector<std::string> out;
  auto fail = [&](std::string s) {
    if (out.size() < 50) out.push_back(std::move(s));
  };
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& E = mesh.elements[e];
    for (int k = 0; k < 3; ++k) {
      const auto& b = mesh.nodes[E[k]];
      const auto& t = mesh.nodes[E[k + 3]];
      if (b[0] != t[0] || b[1] != t[1]) fail("element " + std::to_string(e) + " is not a vertical prism");
    }
    if (!(wedge_volume(mesh, e) > 0.0)) fail("element " + std::to_string(e) + " has non-positive volume");
  }
  // One node per (2D node, level): equal coordinates must mean equal index.
  std::map<std::array<double, 3>, int> seen;
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    auto [it, fresh] = seen.emplace(mesh.nodes[i], static_cast<int>(i));
    if (!fresh) fail("nodes " + std::to_string(it->second) + " and " + std::to_string(i) + " coincide");
  }
  // Wedges stacked on the same triangle must share the interface nodes.
  std::unordered_map<std::uint64_t, std::array<int, 3>> faces;  // (triangle, level) -> node ids
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& E = mesh.elements[e];
    const int t = mesh.element_triangle[e];
    const int lb = mesh.node_level[E[0]], lt = mesh.node_level[E[3]];
    for (const auto& [lev, ids] : {std::pair{lb, std::array{E[0], E[1], E[2]}}, std::pair{lt, std::array{E[3], E[4], E[5]}}}) {
      const auto key = (static_cast<std::uint64_t>(t) << 32) | static_cast<std::uint32_t>(lev);
      auto [it, fresh] = faces.emplace(key, ids);
      if (!fresh && it->second != ids) fail("interface nodes not shared at element " + std::to_string(e));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_vtk(std::ostream& os, const LayeredMesh& mesh, const VtkFields& fields) {
  char buf[96];
  os << "# vtk DataFile Version 3.0\nkirimorph layered mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.nodes.size() << " double\n";
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    auto p = mesh.nodes[i];
    if (fields.displacement)
      for (int k = 0; k < 3; ++k) p[k] += (*fields.displacement)[i][k];
    std::snprintf(buf, sizeof buf, "%.10g %.10g %.10g\n", p[0], p[1], p[2]);
    os << buf;
  }
  os << "CELLS " << mesh.elements.size() << ' ' << 7 * mesh.elements.size() << '\n';
  for (const auto& E : mesh.elements)
    // VTK orders the wedge so that (0,1,2) faces into the cell: our CCW bottom is reversed.
    os << "6 " << E[0] << ' ' << E[2] << ' ' << E[1] << ' ' << E[3] << ' ' << E[5] << ' ' << E[4] << '\n';
  os << "CELL_TYPES " << mesh.elements.size() << '\n';
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) os << "13\n";
  os << "CELL_DATA " << mesh.elements.size() << "\nSCALARS layer int 1\nLOOKUP_TABLE default\n";
  for (int l : mesh.element_layer) os << l << '\n';
  for (const auto& [name, values] : fields.cell_scalars) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : *values) {
      std::snprintf(buf, sizeof buf, "%.10g\n", v);
      os << buf;
    }
  }
  if (fields.displacement) {
    os << "POINT_DATA " << mesh.nodes.size() << "\nVECTORS displacement double\n";
    for (const auto& u : *fields.displacement) {
      std::snprintf(buf, sizeof buf, "%.10g %.10g %.10g\n", u[0], u[1], u[2]);
      os << buf;
    }
  }
}

std::vector<std::array<int, 3>> layer_surface(const LayeredMesh& mesh, int layer) {
  if (layer < 0 || layer >= static_cast<int>(mesh.layer_names.size()))
    throw ParameterError("layer_surface: no layer " + std::to_string(layer));
  // Faces as polygons; a face seen twice within the layer is interior.
  std::map<std::vector<int>, std::pair<int, std::vector<int>>> count;
  std::vector<std::vector<int>> order;
  auto add = [&](std::vector<int> f) {
    auto key = f;
    std::sort(key.begin(), key.end());
    auto [it, fresh] = count.emplace(key, std::pair{0, f});
    if (fresh) order.push_back(key);
    ++it->second.first;
  };
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    if (mesh.element_layer[e] != layer) continue;
    const auto& E = mesh.elements[e];
    add({E[0], E[2], E[1]});
    add({E[3], E[4], E[5]});
    for (int k = 0; k < 3; ++k) {
      const int a = E[k], b = E[(k + 1) % 3];
      add({a, b, E[(k + 1) % 3 + 3], E[k + 3]});
    }
  }
  std::vector<std::array<int, 3>> out;
  for (const auto& key : order) {
    const auto& [c, f] = count.at(key);
    if (c != 1) continue;
    if (f.size() == 3) {
      out.push_back({f[0], f[1], f[2]});
    } else {
      out.push_back({f[0], f[1], f[2]});
      out.push_back({f[0], f[2], f[3]});
    }
  }
  return out;
}

namespace {
void put_f32(std::ostream& os, float v) {
  static_assert(sizeof(float) == 4);
  unsigned char b[4];
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(b), 4);
}
float get_f32(const unsigned char* b) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}
}  // namespace

void write_stl(std::ostream& os, const LayeredMesh& mesh, const std::vector<std::array<int, 3>>& faces,
               const std::string& header) {
  char head[80] = {};
  std::memcpy(head, header.data(), std::min<std::size_t>(header.size(), 79));
  os.write(head, 80);
  const auto n = static_cast<std::uint32_t>(faces.size());
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((n >> (8 * i)) & 0xffu));
  for (const auto& f : faces) {
    const auto& a = mesh.nodes[f[0]];
    const auto& b = mesh.nodes[f[1]];
    const auto& c = mesh.nodes[f[2]];
    const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    double nrm[3] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
    const double len = std::sqrt(nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]);
    for (double& x : nrm) x = len > 0 ? x / len : 0.0;
    for (double x : nrm) put_f32(os, static_cast<float>(x));
    for (const auto* p : {&a, &b, &c})
      for (int k = 0; k < 3; ++k) put_f32(os, static_cast<float>((*p)[k]));
    os.put(0);
    os.put(0);
  }
}

std::vector<StlTriangle> read_stl(std::istream& is) {
  char head[80];
  if (!is.read(head, 80)) throw ParseError("STL: truncated header");
  unsigned char cnt[4];
  if (!is.read(reinterpret_cast<char*>(cnt), 4)) throw ParseError("STL: missing triangle count");
  const std::uint32_t n = cnt[0] | (cnt[1] << 8) | (cnt[2] << 16) | (static_cast<std::uint32_t>(cnt[3]) << 24);
  std::vector<StlTriangle> out(n);
  unsigned char rec[50];
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!is.read(reinterpret_cast<char*>(rec), 50)) throw ParseError("STL: truncated triangle " + std::to_string(i));
    for (int k = 0; k < 3; ++k) out[i].normal[k] = get_f32(rec + 4 * k);
    for (int v = 0; v < 3; ++v)
      for (int k = 0; k < 3; ++k) out[i].v[v][k] = get_f32(rec + 12 + 12 * v + 4 * k);
  }
  return out;
}

ManifoldAudit audit_stl(const std::vector<StlTriangle>& tris) {
  ManifoldAudit a;
  a.faces = tris.size();
  std::map<std::array<float, 3>, int> weld;
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : tris) {
    int id[3];
    for (int v = 0; v < 3; ++v) id[v] = weld.emplace(t.v[v], static_cast<int>(weld.size())).first->second;
    for (int k = 0; k < 3; ++k) ++directed[{id[k], id[(k + 1) % 3]}];
  }
  a.vertices = weld.size();
  for (const auto& [e, c] : directed) {
    const auto rev = directed.find({e.second, e.first});
    const int r = rev == directed.end() ? 0 : rev->second;
    if (c > 1) ++a.nonmanifold_edges;
    if (r == 0) ++a.boundary_edges;
    else if (r != c) ++a.misoriented_edges;
  }
  return a;
}

}  // namespace kirimorph
