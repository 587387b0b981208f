#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kirimorph/geometry.hpp"

namespace kirimorph {

/// Polygon with holes. Outer ring counter-clockwise, holes clockwise, rings
/// stored open (last vertex != first).
struct Polygon {
  Ring outer;
  std::vector<Ring> holes;

  /// Net area: outer minus holes.
  double area() const;
};

using Region = std::vector<Polygon>;

double region_area(const Region& region);

struct Layer {
  std::string name;
  Region region;
};

/// Stack of named planar layers, bottom first, all inside a common footprint.
struct PlanarLayout {
  std::vector<Layer> layers;
  Region footprint;
  /// Non-fatal notes collected during construction or import.
  std::vector<std::string> warnings;

  const Layer& layer(const std::string& name) const;
  Layer& layer(const std::string& name);
  bool has_layer(const std::string& name) const;
};

inline constexpr double kGeometryTol = 1e-9;  // mm

/// Arc discretisation: max chord-to-arc deviation in mm.
struct ArcOptions {
  double chord_tol = 0.05;
};

struct LotusSpec {
  double R = 30.0;
  double gamma = 0.5;
  int n_petals = 8;
  double petal_fill = 0.5;
};

struct PyramidCrossSpec {
  double R = 30.0;
  double arm_width = 2.0;
  int n_arms = 4;
};

struct StripSpec {
  double length = 60.0;
  double width = 10.0;
};

struct AnnulusRimSpec {
  double R = 40.0;
  double r_inner = 25.0;
  int n_petals = 12;
  double petal_fill = 0.5;
};

/// Trilayer spoon: lotus bowl on a bottom substrate disk, a straight handle
/// covered by a second substrate strip on top of the Kirigami layer.
struct SpoonSpec {
  double R = 30.0;
  double gamma = 0.5;
  int n_petals = 6;
  double petal_fill = 0.5;
  double handle_length = 60.0;
  double handle_width = 6.0;
};

struct CustomSpec {
  std::filesystem::path path;
};

using PatternSpec = std::variant<LotusSpec, PyramidCrossSpec, StripSpec, AnnulusRimSpec, SpoonSpec, CustomSpec>;

// Constructors. Each returns a layout that passes validate_layout().

/// Two layers: "substrate" (disk R) and "kirigami" (disk gamma*R plus petals).
/// phase_rad rotates the petals; petal k is centred at phase + 2*pi*k/n.
PlanarLayout build_lotus(const LotusSpec& spec, const ArcOptions& arc = {}, double phase_rad = 0.0);

/// Rectangle [0, length] x [0, width]; the Kirigami layer is inset by
/// kirigami_margin on both long edges.
PlanarLayout build_strip(const StripSpec& spec, double kirigami_margin = 0.0);

/// Regular n-gon substrate; Kirigami faces separated by bare radial fold
/// lines of width arm_width running from the centre to each corner.
PlanarLayout build_pyramid_cross(const PyramidCrossSpec& spec);

/// Rimmed plate: "substrate" base disk, full "kirigami" disk, "substrate_rim" petals on top.
PlanarLayout build_annulus_rim(const AnnulusRimSpec& spec, const ArcOptions& arc = {});

PlanarLayout build_spoon(const SpoonSpec& spec, const ArcOptions& arc = {});

PlanarLayout build_pattern(const PatternSpec& spec, const ArcOptions& arc = {});

/// Throws ParameterError when a spec violates its parameter domain.
void check_spec(const PatternSpec& spec);

enum class Axis { x, y };

/// Where the mirror line passes through.
enum class MirrorOrigin {
  global,              ///< the coordinate axis itself
  selection_centroid,  ///< line through the area centroid of the whole selection
  each_centroid,       ///< every polygon mirrored about its own centroid line
};

/// Mirror the selected polygons of one layer about a line parallel to `axis`.
/// Throws GeometryConflictError if the result overlaps another polygon of the
/// layer or leaves the footprint.
PlanarLayout reflect_layer(const PlanarLayout& layout, const std::string& layer_name, Axis axis,
                           const std::vector<std::size_t>& selection, MirrorOrigin origin = MirrorOrigin::global);

/// Scale the selected polygons by (sx, sy) about `anchor`.
PlanarLayout scale_layer_aspect(const PlanarLayout& layout, const std::string& layer_name,
                                const std::vector<std::size_t>& selection, double sx, double sy, Point2 anchor);

/// Rigid rotation of the whole layout about the origin.
PlanarLayout rotate_layout(const PlanarLayout& layout, double angle_rad);

/// 1 - area(kirigami) / area(substrate).
double removed_fraction(const PlanarLayout& layout);

/// Throws DegenerateGeometryError / GeometryConflictError naming the first violation.
void validate_polygon(const Polygon& polygon, const std::string& where);
void validate_layout(const PlanarLayout& layout);

/// Interiors of a and b intersect in a set of positive area.
bool interiors_overlap(const Polygon& a, const Polygon& b);

/// p inside the polygon (outside its holes). Boundary points within tol count as outside.
bool strictly_inside(const Polygon& polygon, Point2 p, double tol = kGeometryTol);
bool inside_region(const Region& region, Point2 p);

// Plain-text polygon files:
//   # comment
//   FOOTPRINT            (optional; defaults to the first layer)
//   LAYER <name>
//   P x0 y0 x1 y1 ...    outer ring
//   H x0 y0 ...          hole of the preceding outer ring
PlanarLayout import_polygons(const std::filesystem::path& path);
PlanarLayout parse_polygons(const std::string& text);
std::string format_polygons(const PlanarLayout& layout);

/// Outline-only SVG, one group per layer.
std::string format_svg(const PlanarLayout& layout);

}  // namespace kirimorph
