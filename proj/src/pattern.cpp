#include "kirimorph/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kirimorph/error.hpp"

namespace kirimorph {

using std::numbers::pi;

double Polygon::area() const {
  double a = geom::signed_area(outer);
  for (const auto& h : holes) a += geom::signed_area(h);
  return a;
}

double region_area(const Region& region) {
  double a = 0.0;
  for (const auto& p : region) a += p.area();
  return a;
}

const Layer& PlanarLayout::layer(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return l;
  throw ParameterError("layout has no layer named '" + name + "'");
}

Layer& PlanarLayout::layer(const std::string& name) {
  for (auto& l : layers)
    if (l.name == name) return l;
  throw ParameterError("layout has no layer named '" + name + "'");
}

bool PlanarLayout::has_layer(const std::string& name) const {
  return std::any_of(layers.begin(), layers.end(), [&](const Layer& l) { return l.name == name; });
}

namespace {

Point2 polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

int arc_segments(double r, double sweep, double chord_tol) {
  if (sweep <= 0.0) return 1;
  if (chord_tol >= r) return std::max(1, static_cast<int>(std::ceil(sweep / (pi / 2))));
  const double max_step = 2.0 * std::acos(1.0 - chord_tol / r);
  return std::max(1, static_cast<int>(std::ceil(sweep / max_step - 1e-12)));
}

/// Circle of radius r cut at increasing break angles spanning less than one
/// turn. piece(i) runs from break i to break i+1 (the last wraps to break 0);
/// shared endpoints are bitwise identical so that layers built from the same
/// breaks share vertices exactly.
class CircleArcs {
 public:
  /// `exact` replaces selected break points by given coordinates (points known
  /// to lie on the circle that other rings reference literally).
  CircleArcs(double r, std::vector<double> breaks, double chord_tol,
             const std::vector<std::pair<std::size_t, Point2>>& exact = {})
      : breaks_(std::move(breaks)) {
    const std::size_t m = breaks_.size();
    std::vector<Point2> ends(m);
    for (std::size_t i = 0; i < m; ++i) ends[i] = polar(r, breaks_[i]);
    for (const auto& [i, p] : exact) ends[i] = p;
    pieces_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double a0 = breaks_[i];
      const double a1 = (i + 1 < m) ? breaks_[i + 1] : breaks_[0] + 2.0 * pi;
      const int n = arc_segments(r, a1 - a0, chord_tol);
      auto& piece = pieces_[i];
      piece.push_back(ends[i]);
      for (int k = 1; k < n; ++k) piece.push_back(polar(r, a0 + (a1 - a0) * k / n));
      piece.push_back(ends[(i + 1) % m]);
    }
  }

  std::size_t size() const { return pieces_.size(); }

  /// Append piece i to ring without its last point.
  void append(Ring& ring, std::size_t i) const {
    const auto& p = pieces_[i % pieces_.size()];
    ring.insert(ring.end(), p.begin(), p.end() - 1);
  }

  /// Append piece i including its last point.
  void append_closed(Ring& ring, std::size_t i) const {
    const auto& p = pieces_[i % pieces_.size()];
    ring.insert(ring.end(), p.begin(), p.end());
  }

  Ring full_ring() const {
    Ring ring;
    for (std::size_t i = 0; i < pieces_.size(); ++i) append(ring, i);
    return ring;
  }

 private:
  std::vector<double> breaks_;
  std::vector<std::vector<Point2>> pieces_;
};

/// Petal boundaries: petal k spans [c_k - half, c_k + half], c_k = phase + 2*pi*k/n.
std::vector<double> petal_breaks(int n, double fill, double phase) {
  std::vector<double> b;
  const double half = fill * pi / n;
  for (int k = 0; k < n; ++k) {
    const double c = phase + 2.0 * pi * k / n;
    b.push_back(c - half);
    b.push_back(c + half);
  }
  return b;
}

Polygon make_polygon(Ring outer) { return Polygon{std::move(outer), {}}; }

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace

void check_spec(const PatternSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LotusSpec>) {
          require(s.R > 0, "lotus: R must be > 0");
          require(s.gamma > 0 && s.gamma <= 1, "lotus: gamma must lie in (0, 1]");
          require(s.n_petals >= 1, "lotus: n_petals must be >= 1");
          require(s.petal_fill > 0 && s.petal_fill <= 1, "lotus: petal_fill must lie in (0, 1]");
        } else if constexpr (std::is_same_v<T, PyramidCrossSpec>) {
          require(s.R > 0, "pyramid: R must be > 0");
          require(s.arm_width > 0, "pyramid: arm_width must be > 0");
          require(s.n_arms >= 3, "pyramid: n_arms must be >= 3");
          const double apothem = s.R * std::cos(pi / s.n_arms);
          const double apex = 0.5 * s.arm_width / std::sin(pi / s.n_arms);
          require(apex < 0.9 * apothem, "pyramid: arm_width too large for R");
        } else if constexpr (std::is_same_v<T, StripSpec>) {
          require(s.length > 0 && s.width > 0, "strip: length and width must be > 0");
        } else if constexpr (std::is_same_v<T, AnnulusRimSpec>) {
          require(s.R > 0 && s.r_inner > 0, "annulus: radii must be > 0");
          require(s.r_inner < s.R, "annulus: r_inner must be < R");
          require(s.n_petals >= 1, "annulus: n_petals must be >= 1");
          require(s.petal_fill > 0 && s.petal_fill < 1, "annulus: petal_fill must lie in (0, 1)");
        } else if constexpr (std::is_same_v<T, SpoonSpec>) {
          require(s.R > 0 && s.handle_length > 0 && s.handle_width > 0, "spoon: lengths must be > 0");
          require(s.gamma > 0 && s.gamma < 1, "spoon: gamma must lie in (0, 1)");
          require(s.n_petals >= 2, "spoon: n_petals must be >= 2");
          require(s.petal_fill > 0 && s.petal_fill < 1, "spoon: petal_fill must lie in (0, 1)");
          const double gap_half = (1.0 - s.petal_fill) * pi / s.n_petals;
          require(0.5 * s.handle_width < s.gamma * s.R * std::sin(gap_half),
                  "spoon: handle_width does not fit between the petals");
        } else {
          require(!s.path.empty(), "custom: path must be set");
        }
      },
      spec);
}

PlanarLayout build_lotus(const LotusSpec& spec, const ArcOptions& arc, double phase_rad) {
  check_spec(spec);
  const auto breaks = petal_breaks(spec.n_petals, spec.petal_fill, phase_rad);
  const CircleArcs outer(spec.R, breaks, arc.chord_tol);

  PlanarLayout layout;
  const Ring disk = outer.full_ring();
  layout.footprint = {make_polygon(disk)};
  layout.layers.push_back({"substrate", {make_polygon(disk)}});

  if (spec.gamma >= 1.0 || spec.petal_fill >= 1.0) {
    layout.layers.push_back({"kirigami", {make_polygon(disk)}});
    return layout;
  }
  const CircleArcs inner(spec.gamma * spec.R, breaks, arc.chord_tol);
  Ring flower;
  for (int k = 0; k < spec.n_petals; ++k) {
    outer.append_closed(flower, 2 * k);      // petal rim
    inner.append_closed(flower, 2 * k + 1);  // centre-disk arc across the following gap
  }
  layout.layers.push_back({"kirigami", {make_polygon(std::move(flower))}});
  return layout;
}

PlanarLayout build_strip(const StripSpec& spec, double margin) {
  check_spec(spec);
  if (margin < 0.0 || 2.0 * margin >= spec.width)
    throw ParameterError("strip: kirigami margin must satisfy 0 <= margin < width/2");
  const double L = spec.length, W = spec.width;
  PlanarLayout layout;
  Ring outer;
  if (margin > 0.0) {
    outer = {{0, 0}, {L, 0}, {L, margin}, {L, W - margin}, {L, W}, {0, W}, {0, W - margin}, {0, margin}};
  } else {
    outer = {{0, 0}, {L, 0}, {L, W}, {0, W}};
  }
  layout.footprint = {make_polygon(outer)};
  layout.layers.push_back({"substrate", {make_polygon(outer)}});
  if (margin > 0.0) {
    layout.layers.push_back({"kirigami", {make_polygon({{0, margin}, {L, margin}, {L, W - margin}, {0, W - margin}})}});
  } else {
    layout.layers.push_back({"kirigami", {make_polygon(outer)}});
  }
  return layout;
}

namespace {
Point2 line_intersection(Point2 p, Point2 d, Point2 q, Point2 e) {
  const double t = cross(q - p, e) / cross(d, e);
  return p + t * d;
}
}  // namespace

PlanarLayout build_pyramid_cross(const PyramidCrossSpec& spec) {
  check_spec(spec);
  const int n = spec.n_arms;
  const double half_w = 0.5 * spec.arm_width;
  std::vector<Point2> corner(n);
  for (int k = 0; k < n; ++k) corner[k] = polar(spec.R, 2.0 * pi * k / n);

  PlanarLayout layout;
  Ring substrate;
  Region faces;
  for (int k = 0; k < n; ++k) {
    const Point2 a = corner[k], b = corner[(k + 1) % n];
    const Point2 ua = (1.0 / norm(a)) * a, ub = (1.0 / norm(b)) * b;
    // Lines parallel to the two fold lines, offset half a width into the face.
    const Point2 na{-ua.y, ua.x}, nb{ub.y, -ub.x};
    const Point2 pa = half_w * na, pb = half_w * nb;
    const Point2 apex = line_intersection(pa, ua, pb, ub);
    const Point2 on_edge_a = line_intersection(pa, ua, a, b - a);
    const Point2 on_edge_b = line_intersection(pb, ub, a, b - a);
    substrate.push_back(a);
    substrate.push_back(on_edge_a);
    substrate.push_back(on_edge_b);
    faces.push_back(make_polygon({apex, on_edge_a, on_edge_b}));
  }
  layout.footprint = {make_polygon(substrate)};
  layout.layers.push_back({"substrate", {make_polygon(substrate)}});
  layout.layers.push_back({"kirigami", std::move(faces)});
  return layout;
}

PlanarLayout build_annulus_rim(const AnnulusRimSpec& spec, const ArcOptions& arc) {
  check_spec(spec);
  const auto breaks = petal_breaks(spec.n_petals, spec.petal_fill, 0.0);
  const CircleArcs outer(spec.R, breaks, arc.chord_tol);
  const CircleArcs inner(spec.r_inner, breaks, arc.chord_tol);
  PlanarLayout layout;
  const Ring disk = outer.full_ring();
  layout.footprint = {make_polygon(disk)};
  layout.layers.push_back({"substrate", {make_polygon(inner.full_ring())}});
  layout.layers.push_back({"kirigami", {make_polygon(disk)}});
  Region petals;
  for (int k = 0; k < spec.n_petals; ++k) {
    Ring ring;
    outer.append_closed(ring, 2 * k);
    Ring back;
    inner.append_closed(back, 2 * k);
    ring.insert(ring.end(), back.rbegin(), back.rend());
    petals.push_back(make_polygon(std::move(ring)));
  }
  layout.layers.push_back({"substrate_rim", std::move(petals)});
  return layout;
}

PlanarLayout build_spoon(const SpoonSpec& spec, const ArcOptions& arc) {
  check_spec(spec);
  const int n = spec.n_petals;
  const double R = spec.R, r = spec.gamma * spec.R, hw = 0.5 * spec.handle_width;
  // Petal gap centred on +x so the handle leaves the bowl between two petals.
  const double phase = pi / n;
  auto breaks = petal_breaks(n, spec.petal_fill, phase);
  const double rim_cut = std::asin(hw / R), inner_cut = std::asin(hw / r);

  const double x_rim = std::sqrt(R * R - hw * hw);
  const double x_in = std::sqrt(r * r - hw * hw);
  const double x_end = x_rim + spec.handle_length;
  const std::size_t nb = breaks.size();
  auto with_cut = [&](double cut) {
    auto b = breaks;
    b.push_back(2.0 * pi - cut);
    b.push_back(2.0 * pi + cut);
    return b;
  };
  const CircleArcs outer(R, with_cut(rim_cut), arc.chord_tol, {{nb, {x_rim, -hw}}, {nb + 1, {x_rim, hw}}});
  const CircleArcs inner(r, with_cut(inner_cut), arc.chord_tol, {{nb, {x_in, -hw}}, {nb + 1, {x_in, hw}}});
  const std::size_t last_gap = nb - 1, after_cut = nb + 1;

  PlanarLayout layout;
  Ring footprint;
  outer.append(footprint, after_cut);
  for (std::size_t i = 0; i < last_gap; ++i) outer.append(footprint, i);
  outer.append_closed(footprint, last_gap);
  footprint.push_back({x_end, -hw});
  footprint.push_back({x_end, hw});
  layout.footprint = {make_polygon(footprint)};

  layout.layers.push_back({"substrate", {make_polygon(outer.full_ring())}});

  Ring kirigami;
  inner.append_closed(kirigami, after_cut);
  for (int k = 0; k < n; ++k) {
    outer.append_closed(kirigami, 2 * k);
    inner.append_closed(kirigami, 2 * k + 1);
  }
  kirigami.push_back({x_rim, -hw});
  kirigami.push_back({x_end, -hw});
  kirigami.push_back({x_end, hw});
  kirigami.push_back({x_rim, hw});
  layout.layers.push_back({"kirigami", {make_polygon(kirigami)}});

  const double x_start = x_rim - 0.5 * (R - r);
  layout.layers.push_back(
      {"substrate_handle", {make_polygon({{x_start, -hw}, {x_rim, -hw}, {x_end, -hw}, {x_end, hw}, {x_rim, hw}, {x_start, hw}})}});
  return layout;
}

PlanarLayout build_pattern(const PatternSpec& spec, const ArcOptions& arc) {
  return std::visit(
      [&](const auto& s) -> PlanarLayout {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LotusSpec>) return build_lotus(s, arc);
        else if constexpr (std::is_same_v<T, PyramidCrossSpec>) return build_pyramid_cross(s);
        else if constexpr (std::is_same_v<T, StripSpec>) return build_strip(s, 0.0);
        else if constexpr (std::is_same_v<T, AnnulusRimSpec>) return build_annulus_rim(s, arc);
        else if constexpr (std::is_same_v<T, SpoonSpec>) return build_spoon(s, arc);
        else return import_polygons(s.path);
      },
      spec);
}

// ---------------------------------------------------------------------------
// Containment and overlap

namespace {

bool on_polygon_boundary(const Polygon& poly, Point2 p, double tol) {
  if (geom::on_boundary(poly.outer, p, tol)) return true;
  for (const auto& h : poly.holes)
    if (geom::on_boundary(h, p, tol)) return true;
  return false;
}

bool inside_closed(const Polygon& poly, Point2 p) {
  if (!geom::point_in_ring(poly.outer, p)) return false;
  for (const auto& h : poly.holes)
    if (geom::point_in_ring(h, p)) return false;
  return true;
}

template <class F>
void for_each_edge(const Polygon& poly, F&& f) {
  auto ring_edges = [&](const Ring& r) {
    for (std::size_t i = 0; i < r.size(); ++i) f(r[i], r[(i + 1) % r.size()]);
  };
  ring_edges(poly.outer);
  for (const auto& h : poly.holes) ring_edges(h);
}

/// A point strictly inside the polygon: midpoint of the widest interior span of
/// a horizontal scanline between two distinct vertex heights.
Point2 interior_point(const Polygon& poly) {
  std::vector<double> ys;
  for (const auto& p : poly.outer) ys.push_back(p.y);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  Point2 best{};
  double best_width = -1.0;
  const std::size_t tries = std::min<std::size_t>(ys.size() - 1, 8);
  for (std::size_t t = 0; t < tries; ++t) {
    const std::size_t k = (ys.size() - 1) * (2 * t + 1) / (2 * tries);
    const double y = 0.5 * (ys[k] + ys[std::min(k + 1, ys.size() - 1)]);
    std::vector<double> xs;
    for_each_edge(poly, [&](Point2 a, Point2 b) {
      if ((a.y > y) != (b.y > y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    });
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      if (xs[i + 1] - xs[i] > best_width) {
        best_width = xs[i + 1] - xs[i];
        best = {0.5 * (xs[i] + xs[i + 1]), y};
      }
    }
  }
  return best;
}

}  // namespace

bool strictly_inside(const Polygon& polygon, Point2 p, double tol) {
  return inside_closed(polygon, p) && !on_polygon_boundary(polygon, p, tol);
}

bool inside_region(const Region& region, Point2 p) {
  return std::any_of(region.begin(), region.end(), [&](const Polygon& poly) { return inside_closed(poly, p); });
}

bool interiors_overlap(const Polygon& a, const Polygon& b) {
  bool crossing = false;
  for_each_edge(a, [&](Point2 p, Point2 q) {
    if (crossing) return;
    for_each_edge(b, [&](Point2 r, Point2 s) {
      if (!crossing && geom::segments_cross_properly(p, q, r, s)) crossing = true;
    });
  });
  if (crossing) return true;
  auto any_vertex_inside = [](const Polygon& from, const Polygon& into) {
    bool hit = false;
    for_each_edge(from, [&](Point2 p, Point2 q) {
      if (hit) return;
      if (strictly_inside(into, p) || strictly_inside(into, 0.5 * (p + q))) hit = true;
    });
    return hit;
  };
  if (any_vertex_inside(a, b) || any_vertex_inside(b, a)) return true;
  return strictly_inside(b, interior_point(a)) || strictly_inside(a, interior_point(b));
}

void validate_polygon(const Polygon& polygon, const std::string& where) {
  if (polygon.outer.size() < 3) throw DegenerateGeometryError(where + ": outer ring has fewer than 3 vertices");
  if (auto [i, j] = geom::find_self_intersection(polygon.outer); i >= 0)
    throw DegenerateGeometryError(where + ": outer ring self-intersects (edges " + std::to_string(i) + ", " +
                                  std::to_string(j) + ")");
  if (geom::signed_area(polygon.outer) <= 0.0)
    throw DegenerateGeometryError(where + ": outer ring must be counter-clockwise with positive area");
  for (std::size_t h = 0; h < polygon.holes.size(); ++h) {
    const auto& hole = polygon.holes[h];
    const std::string hw = where + " hole " + std::to_string(h);
    if (hole.size() < 3 || !geom::is_simple(hole)) throw DegenerateGeometryError(hw + ": ring is not simple");
    if (geom::signed_area(hole) >= 0.0) throw DegenerateGeometryError(hw + ": hole must be clockwise");
    for (const auto& p : hole) {
      if (!geom::point_in_ring(polygon.outer, p) || geom::on_boundary(polygon.outer, p, kGeometryTol))
        throw DegenerateGeometryError(hw + ": hole is not strictly inside the outer ring");
    }
    for (std::size_t g = 0; g < h; ++g) {
      const Polygon ph{polygon.holes[h], {}}, pg{polygon.holes[g], {}};
      Polygon a{Ring(ph.outer.rbegin(), ph.outer.rend()), {}}, b{Ring(pg.outer.rbegin(), pg.outer.rend()), {}};
      if (interiors_overlap(a, b)) throw DegenerateGeometryError(hw + ": holes overlap");
    }
  }
}

namespace {

bool polygon_in_region(const Polygon& poly, const Region& region) {
  for (const auto& p : poly.outer) {
    if (inside_region(region, p)) continue;
    bool on_edge = std::any_of(region.begin(), region.end(),
                               [&](const Polygon& f) { return on_polygon_boundary(f, p, kGeometryTol); });
    if (!on_edge) return false;
  }
  for (const auto& f : region) {
    bool crossing = false;
    for_each_edge(poly, [&](Point2 a, Point2 b) {
      if (crossing) return;
      for_each_edge(f, [&](Point2 c, Point2 d) {
        if (!crossing && geom::segments_cross_properly(a, b, c, d)) crossing = true;
      });
    });
    if (crossing) return false;
    // Footprint holes must not poke into the polygon.
    for (const auto& hole : f.holes) {
      Polygon hp{Ring(hole.rbegin(), hole.rend()), {}};
      if (interiors_overlap(hp, poly)) return false;
    }
  }
  return true;
}

}  // namespace

void validate_layout(const PlanarLayout& layout) {
  if (layout.footprint.empty()) throw DegenerateGeometryError("layout has an empty footprint");
  for (std::size_t i = 0; i < layout.footprint.size(); ++i)
    validate_polygon(layout.footprint[i], "footprint polygon " + std::to_string(i));
  for (const auto& layer : layout.layers) {
    for (std::size_t i = 0; i < layer.region.size(); ++i) {
      const std::string where = "layer '" + layer.name + "' polygon " + std::to_string(i);
      validate_polygon(layer.region[i], where);
      if (!polygon_in_region(layer.region[i], layout.footprint))
        throw GeometryConflictError(where + " is not contained in the footprint");
      for (std::size_t j = 0; j < i; ++j) {
        if (interiors_overlap(layer.region[i], layer.region[j]))
          throw GeometryConflictError(where + " overlaps polygon " + std::to_string(j));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Transforms

namespace {

template <class F>
Polygon map_polygon(const Polygon& poly, F&& f) {
  Polygon out;
  for (const auto& p : poly.outer) out.outer.push_back(f(p));
  for (const auto& h : poly.holes) {
    Ring r;
    for (const auto& p : h) r.push_back(f(p));
    out.holes.push_back(std::move(r));
  }
  return out;
}

void normalize_orientation(Polygon& poly) {
  if (geom::signed_area(poly.outer) < 0.0) std::reverse(poly.outer.begin(), poly.outer.end());
  for (auto& h : poly.holes)
    if (geom::signed_area(h) > 0.0) std::reverse(h.begin(), h.end());
}

Point2 region_centroid(const Region& polys) {
  double a = 0.0, x = 0.0, y = 0.0;
  for (const auto& p : polys) {
    const double pa = geom::signed_area(p.outer);
    const Point2 c = geom::centroid(p.outer);
    a += pa;
    x += pa * c.x;
    y += pa * c.y;
  }
  return {x / a, y / a};
}

void check_selection(const Layer& layer, const std::vector<std::size_t>& selection) {
  for (auto i : selection)
    if (i >= layer.region.size())
      throw ParameterError("layer '" + layer.name + "' has no polygon " + std::to_string(i));
}

/// Re-validate polygons touched by a transform against the rest of the layer and the footprint.
void check_transformed(const PlanarLayout& layout, const Layer& layer, const std::vector<std::size_t>& selection) {
  for (auto i : selection) {
    const auto& poly = layer.region[i];
    if (!polygon_in_region(poly, layout.footprint))
      throw GeometryConflictError("transformed polygon " + std::to_string(i) + " of layer '" + layer.name +
                                  "' leaves the footprint");
    for (std::size_t j = 0; j < layer.region.size(); ++j) {
      if (j == i) continue;
      const bool j_selected = std::find(selection.begin(), selection.end(), j) != selection.end();
      if (j_selected && j > i) continue;
      if (interiors_overlap(poly, layer.region[j]))
        throw GeometryConflictError("transformed polygon " + std::to_string(i) + " of layer '" + layer.name +
                                    "' overlaps polygon " + std::to_string(j));
    }
  }
}

}  // namespace

PlanarLayout reflect_layer(const PlanarLayout& layout, const std::string& layer_name, Axis axis,
                           const std::vector<std::size_t>& selection, MirrorOrigin origin) {
  PlanarLayout out = layout;
  Layer& layer = out.layer(layer_name);
  check_selection(layer, selection);
  Region selected;
  for (auto i : selection) selected.push_back(layer.region[i]);
  const Point2 group_c = (origin == MirrorOrigin::selection_centroid) ? region_centroid(selected) : Point2{};
  for (auto i : selection) {
    Polygon& poly = layer.region[i];
    Point2 c = group_c;
    if (origin == MirrorOrigin::each_centroid) c = geom::centroid(poly.outer);
    poly = map_polygon(poly, [&](Point2 p) {
      return axis == Axis::x ? Point2{p.x, 2.0 * c.y - p.y} : Point2{2.0 * c.x - p.x, p.y};
    });
    normalize_orientation(poly);
  }
  check_transformed(out, layer, selection);
  return out;
}

PlanarLayout scale_layer_aspect(const PlanarLayout& layout, const std::string& layer_name,
                                const std::vector<std::size_t>& selection, double sx, double sy, Point2 anchor) {
  if (!(sx > 0.0) || !(sy > 0.0)) throw ParameterError("scale factors must be > 0");
  PlanarLayout out = layout;
  Layer& layer = out.layer(layer_name);
  check_selection(layer, selection);
  for (auto i : selection) {
    layer.region[i] = map_polygon(layer.region[i], [&](Point2 p) {
      return Point2{anchor.x + sx * (p.x - anchor.x), anchor.y + sy * (p.y - anchor.y)};
    });
  }
  check_transformed(out, layer, selection);
  return out;
}

PlanarLayout rotate_layout(const PlanarLayout& layout, double angle_rad) {
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  auto rot = [&](Point2 p) { return Point2{c * p.x - s * p.y, s * p.x + c * p.y}; };
  PlanarLayout out = layout;
  for (auto& p : out.footprint) p = map_polygon(p, rot);
  for (auto& l : out.layers)
    for (auto& p : l.region) p = map_polygon(p, rot);
  return out;
}

double removed_fraction(const PlanarLayout& layout) {
  const double substrate = region_area(layout.layer("substrate").region);
  if (!(substrate > 0.0)) throw DegenerateGeometryError("substrate layer has zero area");
  return 1.0 - region_area(layout.layer("kirigami").region) / substrate;
}

// ---------------------------------------------------------------------------
// Text and SVG formats

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_ring(std::ostringstream& os, char tag, const Ring& ring) {
  os << tag;
  for (const auto& p : ring) os << ' ' << fmt_double(p.x) << ' ' << fmt_double(p.y);
  os << '\n';
}

void write_region(std::ostringstream& os, const Region& region) {
  for (const auto& poly : region) {
    write_ring(os, 'P', poly.outer);
    for (const auto& h : poly.holes) write_ring(os, 'H', h);
  }
}

}  // namespace

std::string format_polygons(const PlanarLayout& layout) {
  std::ostringstream os;
  os << "# kirimorph polygon layout, coordinates in mm\n";
  os << "FOOTPRINT\n";
  write_region(os, layout.footprint);
  for (const auto& layer : layout.layers) {
    os << "LAYER " << layer.name << '\n';
    write_region(os, layer.region);
  }
  return os.str();
}

PlanarLayout parse_polygons(const std::string& text) {
  PlanarLayout layout;
  Region* target = nullptr;
  bool have_footprint = false;
  int ring_index = 0;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "FOOTPRINT") {
      if (have_footprint) throw ParseError("duplicate FOOTPRINT section", line_no);
      have_footprint = true;
      target = &layout.footprint;
      continue;
    }
    if (tag == "LAYER") {
      std::string name;
      if (!(ls >> name)) throw ParseError("LAYER requires a name", line_no);
      if (layout.has_layer(name)) throw ParseError("duplicate layer '" + name + "'", line_no);
      layout.layers.push_back({name, {}});
      target = &layout.layers.back().region;
      continue;
    }
    if (tag != "P" && tag != "H") throw ParseError("unknown record '" + tag + "'", line_no);
    if (target == nullptr) throw ParseError("ring before any LAYER or FOOTPRINT header", line_no);
    ++ring_index;
    Ring ring;
    std::string xs, ys;
    while (ls >> xs) {
      if (!(ls >> ys)) throw ParseError("odd number of coordinates in ring " + std::to_string(ring_index), line_no);
      try {
        std::size_t px = 0, py = 0;
        const double x = std::stod(xs, &px), y = std::stod(ys, &py);
        if (px != xs.size() || py != ys.size()) throw std::invalid_argument("trailing");
        ring.push_back({x, y});
      } catch (const std::exception&) {
        throw ParseError("bad coordinate in ring " + std::to_string(ring_index), line_no);
      }
    }
    if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
    if (ring.size() < 3) throw ParseError("ring " + std::to_string(ring_index) + " has fewer than 3 vertices", line_no);
    const std::string where = "ring " + std::to_string(ring_index) + " (line " + std::to_string(line_no) + ")";
    if (auto [i, j] = geom::find_self_intersection(ring); i >= 0)
      throw DegenerateGeometryError(where + " is self-intersecting");
    const double a = geom::signed_area(ring);
    if (tag == "P") {
      if (a < 0.0) {
        std::reverse(ring.begin(), ring.end());
        layout.warnings.push_back(where + ": clockwise outer ring reversed to counter-clockwise");
      }
      target->push_back(Polygon{std::move(ring), {}});
    } else {
      if (target->empty()) throw ParseError("hole ring " + std::to_string(ring_index) + " has no outer ring", line_no);
      if (a > 0.0) {
        std::reverse(ring.begin(), ring.end());
        layout.warnings.push_back(where + ": counter-clockwise hole reversed to clockwise");
      }
      target->back().holes.push_back(std::move(ring));
    }
  }
  if (layout.layers.empty()) throw ParseError("no LAYER sections found");
  if (!have_footprint) layout.footprint = layout.layers.front().region;
  validate_layout(layout);
  return layout;
}

PlanarLayout import_polygons(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open polygon file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_polygons(buf.str());
}

std::string format_svg(const PlanarLayout& layout) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& poly : layout.footprint)
    for (const auto& p : poly.outer) {
      x0 = std::min(x0, p.x), y0 = std::min(y0, p.y), x1 = std::max(x1, p.x), y1 = std::max(y1, p.y);
    }
  const double pad = 0.05 * std::max(x1 - x0, y1 - y0);
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt_double(x0 - pad) << ' ' << fmt_double(-(y1 + pad))
     << ' ' << fmt_double(x1 - x0 + 2 * pad) << ' ' << fmt_double(y1 - y0 + 2 * pad) << "\" width=\""
     << fmt_double(x1 - x0 + 2 * pad) << "mm\" height=\"" << fmt_double(y1 - y0 + 2 * pad) << "mm\">\n";
  auto path_of = [&](const Polygon& poly) {
    std::ostringstream d;
    auto ring = [&](const Ring& r) {
      for (std::size_t i = 0; i < r.size(); ++i)
        d << (i == 0 ? 'M' : 'L') << fmt_double(r[i].x) << ',' << fmt_double(-r[i].y) << ' ';
      d << "Z ";
    };
    ring(poly.outer);
    for (const auto& h : poly.holes) ring(h);
    return d.str();
  };
  for (std::size_t li = 0; li < layout.layers.size(); ++li) {
    const auto& layer = layout.layers[li];
    os << "  <g id=\"" << layer.name << "\" fill=\"none\" stroke=\"" << colours[li % 5] << "\" stroke-width=\"0.2\">\n";
    for (const auto& poly : layer.region) os << "    <path fill-rule=\"evenodd\" d=\"" << path_of(poly) << "\"/>\n";
    os << "  </g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace kirimorph
