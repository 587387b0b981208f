#include "kirimorph/geometry.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <limits>

namespace kirimorph::geom {

namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr double kEps = std::numeric_limits<double>::epsilon() / 2.0;  // 2^-53
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kIncircleBound = (10.0 + 96.0 * kEps) * kEps;

template <class T>
int sign_of(const T& v) {
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

int orient_exact(Point2 a, Point2 b, Point2 c) {
  const Rational acx = Rational(a.x) - Rational(c.x);
  const Rational bcx = Rational(b.x) - Rational(c.x);
  const Rational acy = Rational(a.y) - Rational(c.y);
  const Rational bcy = Rational(b.y) - Rational(c.y);
  return sign_of(Rational(acx * bcy - acy * bcx));
}

int incircle_exact(Point2 a, Point2 b, Point2 c, Point2 d) {
  const Rational adx = Rational(a.x) - Rational(d.x), ady = Rational(a.y) - Rational(d.y);
  const Rational bdx = Rational(b.x) - Rational(d.x), bdy = Rational(b.y) - Rational(d.y);
  const Rational cdx = Rational(c.x) - Rational(d.x), cdy = Rational(c.y) - Rational(d.y);
  const Rational alift = adx * adx + ady * ady;
  const Rational blift = bdx * bdx + bdy * bdy;
  const Rational clift = cdx * cdx + cdy * cdy;
  const Rational det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                       clift * (adx * bdy - bdx * ady);
  return sign_of(det);
}

}  // namespace

int orient(Point2 a, Point2 b, Point2 c) {
  const double left = (a.x - c.x) * (b.y - c.y);
  const double right = (a.y - c.y) * (b.x - c.x);
  const double det = left - right;
  const double bound = kOrientBound * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return orient_exact(a, b, c);
}

int incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kIncircleBound * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return incircle_exact(a, b, c, d);
}

double signed_area(std::span<const Point2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  // Shifted to the first vertex to limit cancellation far from the origin.
  const Point2 o = ring[0];
  double twice = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) twice += cross(ring[i] - o, ring[i + 1] - o);
  return 0.5 * twice;
}

double perimeter(std::span<const Point2> ring) {
  double p = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) p += distance(ring[i], ring[(i + 1) % ring.size()]);
  return p;
}

Point2 centroid(std::span<const Point2> ring) {
  const std::size_t n = ring.size();
  const Point2 o = ring[0];
  double a2 = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Point2 p = ring[i] - o, q = ring[i + 1] - o;
    const double c = cross(p, q);
    a2 += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  if (a2 == 0.0) return o;
  return {o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)};
}

bool point_in_ring(std::span<const Point2> ring, Point2 p) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = ring[j], b = ring[i];
    if ((a.y > p.y) != (b.y > p.y)) {
      // Edge straddles the horizontal ray; test which side p is on.
      const int o = orient(a, b, p);
      if ((b.y > a.y) ? o > 0 : o < 0) inside = !inside;
    }
  }
  return inside;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

bool on_boundary(std::span<const Point2> ring, Point2 p, double tol) {
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (point_segment_distance(p, ring[i], ring[(i + 1) % ring.size()]) <= tol) return true;
  }
  return false;
}

namespace {
bool within_box(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}
}  // namespace

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && within_box(a, b, c)) return true;
  if (o2 == 0 && within_box(a, b, d)) return true;
  if (o3 == 0 && within_box(c, d, a)) return true;
  if (o4 == 0 && within_box(c, d, b)) return true;
  return false;
}

bool segments_cross_properly(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

std::pair<int, int> find_self_intersection(std::span<const Point2> ring) {
  const int n = static_cast<int>(ring.size());
  if (n < 3) return {0, 0};
  for (int i = 0; i < n; ++i) {
    if (ring[i] == ring[(i + 1) % n]) return {i, i};
  }
  // Bounding boxes prune most pairs; rings here are at most a few thousand vertices.
  struct Box {
    double x0, x1, y0, y1;
  };
  std::vector<Box> boxes(n);
  for (int i = 0; i < n; ++i) {
    const Point2 a = ring[i], b = ring[(i + 1) % n];
    boxes[i] = {std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y), std::max(a.y, b.y)};
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int l, int r) { return boxes[l].x0 < boxes[r].x0; });
  for (int oi = 0; oi < n; ++oi) {
    const int i = order[oi];
    for (int oj = oi + 1; oj < n; ++oj) {
      const int j = order[oj];
      if (boxes[j].x0 > boxes[i].x1) break;
      if (boxes[j].y0 > boxes[i].y1 || boxes[i].y0 > boxes[j].y1) continue;
      const Point2 a = ring[i], b = ring[(i + 1) % n];
      const Point2 c = ring[j], d = ring[(j + 1) % n];
      const bool adjacent = (j == (i + 1) % n) || (i == (j + 1) % n);
      if (adjacent) {
        // Neighbouring edges share one vertex; they may only overlap by folding back.
        const Point2 shared = (j == (i + 1) % n) ? b : a;
        const Point2 p = (shared == a) ? b : a;
        const Point2 q = (shared == c) ? d : c;
        if (orient(shared, p, q) == 0 && dot(p - shared, q - shared) > 0) return {std::min(i, j), std::max(i, j)};
        continue;
      }
      if (segments_intersect(a, b, c, d)) return {std::min(i, j), std::max(i, j)};
    }
  }
  return {-1, -1};
}

Point2 circumcenter(Point2 a, Point2 b, Point2 c) {
  const Point2 ba = b - a, ca = c - a;
  const double bl = dot(ba, ba), cl = dot(ca, ca);
  const double d = 2.0 * cross(ba, ca);
  return {a.x + (ca.y * bl - ba.y * cl) / d, a.y + (ba.x * cl - ca.x * bl) / d};
}

double min_angle_deg(Point2 a, Point2 b, Point2 c) {
  const double la = distance(b, c), lb = distance(a, c), lc = distance(a, b);
  // Smallest angle is opposite the shortest side; law of cosines, clamped.
  auto angle = [](double opp, double s1, double s2) {
    const double cosv = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
    return std::acos(cosv);
  };
  const double m = std::min({angle(la, lb, lc), angle(lb, la, lc), angle(lc, la, lb)});
  return m * 180.0 / M_PI;
}

}  // namespace kirimorph::geom
