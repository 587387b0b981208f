#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kirimorph/geometry.hpp"
#include "kirimorph/pattern.hpp"

namespace kirimorph {

/// Conforming triangulation of a layout footprint.
struct TriMesh2D {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;  // CCW
  /// Bit i set when the triangle centroid lies in layer_names[i].
  std::vector<std::uint32_t> coverage;
  std::vector<std::string> layer_names;
  /// Constrained edges (pieces of input polygon edges) present in the mesh.
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<std::string> warnings;

  int layer_bit(const std::string& name) const;  // -1 if absent
  bool covers(std::size_t tri, int bit) const { return bit >= 0 && (coverage[tri] >> bit) & 1u; }
};

struct MeshOptions {
  double h_target = 1.5;  // mm
  double min_angle = 20.0;  // degrees
  double area_min = 1e-6;  // mm^2
  std::size_t max_nodes = 2'000'000;
};

/// Constrained Delaunay refinement of the footprint with every layer boundary
/// inserted as a constraint.
TriMesh2D triangulate(const PlanarLayout& layout, const MeshOptions& opts = {});

/// Nodes lying on the outer boundary of the meshed region (edges used by one triangle).
std::vector<char> footprint_boundary_nodes(const TriMesh2D& mesh);

struct MeshAudit {
  std::vector<std::string> violations;
  double min_angle_deg = 180.0;
  /// Triangles below the angle threshold that touch a constrained corner sharper than the threshold.
  std::size_t small_angle_exempt = 0;
  double area_sum = 0.0;
  bool ok() const { return violations.empty(); }
};

/// Checks the TriMesh2D invariants; `layout`, if given, is used to confirm
/// that every input edge is a union of mesh edges.
MeshAudit audit_mesh(const TriMesh2D& mesh, const MeshOptions& opts = {}, const PlanarLayout* layout = nullptr);

// Plain-text 2D mesh format for external meshers:
//   LAYERS <name> ...
//   NODES <n>      followed by n lines "x y"
//   TRIANGLES <m>  followed by m lines "a b c mask"
//   SEGMENTS <k>   followed by k lines "a b"   (optional)
std::string format_mesh2d(const TriMesh2D& mesh);
TriMesh2D parse_mesh2d(const std::string& text);

struct StackLayer {
  std::string name;       // must name a coverage layer
  double thickness = 0;   // mm
  int material = 0;
  int subdivisions = 1;   // elements through the thickness
};

/// Stacked wedge mesh. Layer i occupies z in [z0[i], z0[i] + thickness[i]].
struct LayeredMesh {
  std::vector<std::array<double, 3>> nodes;
  std::vector<std::array<int, 6>> elements;  // bottom a b c, top a' b' c'
  std::vector<int> element_layer;
  std::vector<int> element_triangle;
  std::vector<std::string> layer_names;
  std::vector<int> layer_materials;
  std::vector<double> layer_thickness;
  std::vector<double> layer_z0;
  std::vector<int> node_2d;
  std::vector<int> node_level;
  std::vector<double> level_z;
  std::vector<char> node_on_boundary;  // 2D node lies on the footprint boundary
  TriMesh2D base;

  int layer_index(const std::string& name) const;  // -1 if absent
};

LayeredMesh extrude(const TriMesh2D& mesh, const std::vector<StackLayer>& stack);

struct LayerReport {
  std::string name;
  std::size_t elements = 0;
  double footprint_area = 0;  // mm^2
  double volume = 0;          // mm^3
};

struct MeshReport {
  std::size_t elements = 0, nodes = 0;
  double min_volume = 0, max_volume = 0;
  double min_angle_deg = 0;
  std::vector<LayerReport> layers;
};

MeshReport mesh_report(const LayeredMesh& mesh);
double wedge_volume(const LayeredMesh& mesh, std::size_t e);

/// Independent audits of the 3D mesh: vertical prisms, positive volume,
/// shared interface nodes, no duplicate coordinates.
std::vector<std::string> audit_layered(const LayeredMesh& mesh);

struct VtkFields {
  const std::vector<std::array<double, 3>>* displacement = nullptr;
  std::vector<std::pair<std::string, const std::vector<double>*>> cell_scalars;
};

/// Legacy ASCII VTK unstructured grid; nodes are written at reference + displacement.
void write_vtk(std::ostream& os, const LayeredMesh& mesh, const VtkFields& fields = {});

struct StlTriangle {
  std::array<float, 3> normal;
  std::array<std::array<float, 3>, 3> v;
};

/// Outer surface of one layer (faces not shared by two of its wedges), outward oriented.
std::vector<std::array<int, 3>> layer_surface(const LayeredMesh& mesh, int layer);

void write_stl(std::ostream& os, const LayeredMesh& mesh, const std::vector<std::array<int, 3>>& faces,
               const std::string& header = "kirimorph");
std::vector<StlTriangle> read_stl(std::istream& is);

/// Closed 2-manifold check on an STL triangle soup: vertices welded exactly,
/// every edge used by exactly two faces with opposite orientation.
struct ManifoldAudit {
  std::size_t faces = 0, vertices = 0, boundary_edges = 0, nonmanifold_edges = 0, misoriented_edges = 0;
  bool closed() const { return faces > 0 && boundary_edges == 0 && nonmanifold_edges == 0 && misoriented_edges == 0; }
};
ManifoldAudit audit_stl(const std::vector<StlTriangle>& tris);

}  // namespace kirimorph
