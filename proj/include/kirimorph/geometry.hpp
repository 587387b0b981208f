#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace kirimorph {

/// Planar point in millimetres.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

using Ring = std::vector<Point2>;

namespace geom {

/// Sign of the orientation determinant: +1 if a, b, c turn counter-clockwise,
/// -1 if clockwise, 0 if collinear. Exact: falls back to rational arithmetic
/// when the floating-point result is within its error bound.
int orient(Point2 a, Point2 b, Point2 c);

/// +1 if d lies strictly inside the circle through a, b, c (given CCW), -1 if
/// outside, 0 if cocircular. Exact in the same sense as orient().
int incircle(Point2 a, Point2 b, Point2 c, Point2 d);

/// Signed shoelace area; positive for counter-clockwise rings.
double signed_area(std::span<const Point2> ring);

double perimeter(std::span<const Point2> ring);

/// Area-weighted centroid of a simple ring.
Point2 centroid(std::span<const Point2> ring);

/// Strict containment by crossing number. Points on the boundary give an
/// unspecified answer; use on_boundary() first when that matters.
bool point_in_ring(std::span<const Point2> ring, Point2 p);

/// True if p lies on some edge of the ring within tol.
bool on_boundary(std::span<const Point2> ring, Point2 p, double tol);

/// Distance from p to segment ab.
double point_segment_distance(Point2 p, Point2 a, Point2 b);

/// Segments ab and cd share at least one point (including touching and collinear overlap).
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d);

/// Segments cross at a single point interior to both.
bool segments_cross_properly(Point2 a, Point2 b, Point2 c, Point2 d);

/// Index pair of the first two non-adjacent edges that intersect, or {-1, -1}
/// if the ring is simple. Repeated consecutive vertices count as degenerate.
std::pair<int, int> find_self_intersection(std::span<const Point2> ring);

inline bool is_simple(std::span<const Point2> ring) {
  return find_self_intersection(ring).first < 0;
}

/// Circumcentre of triangle abc (assumes non-degenerate).
Point2 circumcenter(Point2 a, Point2 b, Point2 c);

/// Smallest interior angle of triangle abc, in degrees.
double min_angle_deg(Point2 a, Point2 b, Point2 c);

}  // namespace geom
}  // namespace kirimorph
