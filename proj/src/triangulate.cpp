#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <unordered_set>

#include "kirimorph/error.hpp"
#include "kirimorph/meshing.hpp"

namespace kirimorph {

namespace {

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> n{-1, -1, -1};  // n[i] lies across the edge opposite v[i]
  bool inside = false;
};

inline int nx(int i) { return i == 2 ? 0 : i + 1; }
inline int pv(int i) { return i == 0 ? 2 : i - 1; }

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// ---------------------------------------------------------------------------
// Input preparation: vertices merged, segments split at vertices and crossings.

struct Pslg {
  std::vector<Point2> pts;
  std::vector<std::array<int, 2>> segs;
};

class PslgBuilder {
 public:
  explicit PslgBuilder(double tol) : tol_(tol) {}

  void add_ring(const Ring& ring) {
    for (std::size_t i = 0; i < ring.size(); ++i) raw_.push_back({ring[i], ring[(i + 1) % ring.size()]});
  }

  Pslg build() {
    std::vector<Point2> pts;
    for (const auto& [a, b] : raw_) {
      pts.push_back(a);
      pts.push_back(b);
    }
    for (int pass = 0; pass < 4; ++pass) {
      merge(pts);
      const auto segs = split_at_vertices(pts);
      const auto extra = crossings(pts, segs);
      if (extra.empty()) return {pts, segs};
      pts.insert(pts.end(), extra.begin(), extra.end());
    }
    throw DegenerateGeometryError("could not resolve crossing input edges");
  }

 private:
  int find(Point2 p) const {
    auto it = std::lower_bound(order_x_.begin(), order_x_.end(), p.x - tol_,
                               [&](int i, double x) { return pts_[i].x < x; });
    for (; it != order_x_.end() && pts_[*it].x <= p.x + tol_; ++it)
      if (distance(pts_[*it], p) <= tol_) return *it;
    return -1;
  }

  void merge(std::vector<Point2>& pts) {
    std::vector<Point2> sorted = pts;
    std::sort(sorted.begin(), sorted.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts_.clear();
    order_x_.clear();
    for (const auto& p : sorted) {
      if (find(p) >= 0) continue;
      order_x_.push_back(static_cast<int>(pts_.size()));
      pts_.push_back(p);
    }
    pts = pts_;
  }

  std::vector<std::array<int, 2>> split_at_vertices(const std::vector<Point2>& pts) {
    std::unordered_set<std::uint64_t> seen;
    std::vector<std::array<int, 2>> segs;
    std::vector<std::pair<Point2, Point2>> segments = raw_;
    for (const auto& [a0, b0] : extra_) segments.push_back({a0, b0});
    for (const auto& [pa, pb] : segments) {
      const int a = find(pa), b = find(pb);
      if (a == b) continue;
      // Vertices lying on the open segment, ordered along it.
      std::vector<std::pair<double, int>> on;
      const double x0 = std::min(pa.x, pb.x) - tol_, x1 = std::max(pa.x, pb.x) + tol_;
      auto it = std::lower_bound(order_x_.begin(), order_x_.end(), x0, [&](int i, double x) { return pts[i].x < x; });
      const Point2 d = pts[b] - pts[a];
      const double len2 = dot(d, d);
      for (; it != order_x_.end() && pts[*it].x <= x1; ++it) {
        const int v = *it;
        if (v == a || v == b) continue;
        if (geom::point_segment_distance(pts[v], pts[a], pts[b]) <= tol_)
          on.push_back({dot(pts[v] - pts[a], d) / len2, v});
      }
      std::sort(on.begin(), on.end());
      int prev = a;
      on.push_back({1.0, b});
      for (const auto& [t, v] : on) {
        if (v != prev && seen.insert(edge_key(prev, v)).second) segs.push_back({prev, v});
        prev = v;
      }
    }
    return segs;
  }

  std::vector<Point2> crossings(const std::vector<Point2>& pts, const std::vector<std::array<int, 2>>& segs) {
    std::vector<int> order(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) order[i] = static_cast<int>(i);
    auto lo = [&](int s) { return std::min(pts[segs[s][0]].x, pts[segs[s][1]].x); };
    auto hi = [&](int s) { return std::max(pts[segs[s][0]].x, pts[segs[s][1]].x); };
    std::sort(order.begin(), order.end(), [&](int l, int r) { return lo(l) < lo(r); });
    std::vector<Point2> out;
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const auto& s = segs[order[oi]];
      for (std::size_t oj = oi + 1; oj < order.size() && lo(order[oj]) <= hi(order[oi]); ++oj) {
        const auto& t = segs[order[oj]];
        const Point2 a = pts[s[0]], b = pts[s[1]], c = pts[t[0]], d = pts[t[1]];
        if (!geom::segments_cross_properly(a, b, c, d)) continue;
        const double u = cross(c - a, d - c) / cross(b - a, d - c);
        const Point2 x = a + u * (b - a);
        out.push_back(x);
        extra_.push_back({a, x});
        extra_.push_back({x, b});
        extra_.push_back({c, x});
        extra_.push_back({x, d});
      }
    }
    return out;
  }

  double tol_;
  std::vector<std::pair<Point2, Point2>> raw_;
  std::vector<std::pair<Point2, Point2>> extra_;
  std::vector<Point2> pts_;
  std::vector<int> order_x_;
};

// ---------------------------------------------------------------------------
// Triangulation with constrained edges.

class Cdt {
 public:
  std::vector<Point2> pts;
  std::vector<Tri> tris;
  std::vector<int> vtri;
  std::unordered_set<std::uint64_t> segs;
  int n_super = 4;

  Cdt(Point2 lo, Point2 hi) {
    const Point2 c = 0.5 * (lo + hi);
    const double L = std::max({hi.x - lo.x, hi.y - lo.y, 1.0});
    const double s = 4.0 * L;
    pts = {{c.x - s, c.y - s}, {c.x + s, c.y - s}, {c.x + s, c.y + s}, {c.x - s, c.y + s}};
    tris.push_back({{0, 1, 2}, {-1, 1, -1}});
    tris.push_back({{0, 2, 3}, {-1, -1, 0}});
    vtri = {0, 0, 0, 1};
  }

  bool constrained(int a, int b) const { return segs.count(edge_key(a, b)) > 0; }
  bool is_super(int v) const { return v < n_super; }

  /// Walk from `start` towards p; returns a triangle containing p (closed).
  int locate(Point2 p, int start) {
    int t = start;
    for (std::size_t steps = 0; steps < 4 * tris.size() + 64; ++steps) {
      const Tri& T = tris[t];
      int next = -1;
      const int r = static_cast<int>(walk_counter_++ % 3);
      for (int kk = 0; kk < 3; ++kk) {
        const int k = (kk + r) % 3;
        if (geom::orient(pts[T.v[nx(k)]], pts[T.v[pv(k)]], p) < 0) {
          next = T.n[k];
          break;
        }
      }
      if (next < 0) return t;
      t = next;
    }
    // Fallback: exhaustive scan (should not be needed).
    for (std::size_t i = 0; i < tris.size(); ++i) {
      const Tri& T = tris[i];
      if (geom::orient(pts[T.v[0]], pts[T.v[1]], p) >= 0 && geom::orient(pts[T.v[1]], pts[T.v[2]], p) >= 0 &&
          geom::orient(pts[T.v[2]], pts[T.v[0]], p) >= 0)
        return static_cast<int>(i);
    }
    throw DegenerateGeometryError("point location failed");
  }

  /// Inserts p (returns an existing vertex if p coincides with one within tol).
  /// New triangles are reported through `created`.
  int insert(Point2 p, int hint, double tol, std::vector<int>* created = nullptr) {
    const int t = locate(p, hint);
    const Tri T = tris[t];
    for (int k = 0; k < 3; ++k)
      if (distance(pts[T.v[k]], p) <= tol) return T.v[k];
    int on_edge = -1;
    for (int k = 0; k < 3; ++k)
      if (geom::orient(pts[T.v[nx(k)]], pts[T.v[pv(k)]], p) == 0) on_edge = k;
    const int v = static_cast<int>(pts.size());
    pts.push_back(p);
    vtri.push_back(t);
    std::vector<std::pair<int, int>> stack;
    if (on_edge >= 0) {
      const int a = T.v[nx(on_edge)], b = T.v[pv(on_edge)];
      const bool seg = constrained(a, b);
      split_edge(t, on_edge, v, stack);
      if (seg) {
        segs.erase(edge_key(a, b));
        segs.insert(edge_key(a, v));
        segs.insert(edge_key(v, b));
      }
    } else {
      split_triangle(t, v, stack);
    }
    legalize(stack);
    if (created) star(v, *created);
    return v;
  }

  /// Splits constrained edge a-b at m even when m is not exactly collinear.
  int split_constrained(int a, int b, Point2 m, std::vector<int>* created) {
    const auto [t, k] = find_edge(a, b);
    if (t < 0) throw DegenerateGeometryError("constrained edge missing from triangulation");
    const int v = static_cast<int>(pts.size());
    pts.push_back(m);
    vtri.push_back(t);
    std::vector<std::pair<int, int>> stack;
    split_edge(t, k, v, stack);
    segs.erase(edge_key(a, b));
    segs.insert(edge_key(a, v));
    segs.insert(edge_key(v, b));
    legalize(stack);
    if (created) star(v, *created);
    return v;
  }

  /// Triangles incident to v, in rotation order.
  void star(int v, std::vector<int>& out) const {
    out.clear();
    const int t0 = vtri[v];
    int t = t0;
    do {
      out.push_back(t);
      const Tri& T = tris[t];
      const int k = index_of(T, v);
      t = T.n[pv(k)];  // across edge (v, v[nx(k)])
      if (t < 0) {
        // Hull vertex: walk the other way from t0.
        t = t0;
        for (;;) {
          const Tri& U = tris[t];
          const int j = index_of(U, v);
          const int u = U.n[nx(j)];
          if (u < 0) break;
          if (std::find(out.begin(), out.end(), u) != out.end()) break;
          out.push_back(u);
          t = u;
        }
        return;
      }
    } while (t != t0);
  }

  static int index_of(const Tri& T, int v) {
    for (int k = 0; k < 3; ++k)
      if (T.v[k] == v) return k;
    return -1;
  }

  /// (triangle, k) such that triangle has directed edge a -> b opposite v[k]; {-1,-1} if absent.
  std::pair<int, int> find_edge(int a, int b) const {
    std::vector<int> around;
    star(a, around);
    for (int t : around) {
      const Tri& T = tris[t];
      const int k = index_of(T, a);
      if (T.v[nx(k)] == b) return {t, pv(k)};
    }
    return {-1, -1};
  }

  void set_nb(int t, int old_nb, int new_nb) {
    if (t < 0) return;
    for (auto& x : tris[t].n)
      if (x == old_nb) {
        x = new_nb;
        return;
      }
  }

  void split_triangle(int t, int p, std::vector<std::pair<int, int>>& stack) {
    const Tri T = tris[t];
    const int a = T.v[0], b = T.v[1], c = T.v[2];
    const int na = T.n[0], nb = T.n[1], nc = T.n[2];
    const int t0 = t, t1 = static_cast<int>(tris.size()), t2 = t1 + 1;
    tris[t0] = {{a, b, p}, {t1, t2, nc}, T.inside};
    tris.push_back({{b, c, p}, {t2, t0, na}, T.inside});
    tris.push_back({{c, a, p}, {t0, t1, nb}, T.inside});
    set_nb(na, t, t1);
    set_nb(nb, t, t2);
    vtri[a] = t0, vtri[b] = t0, vtri[c] = t1, vtri[p] = t0;
    stack.push_back({t0, 2});
    stack.push_back({t1, 2});
    stack.push_back({t2, 2});
  }

  void split_edge(int t, int i, int p, std::vector<std::pair<int, int>>& stack) {
    const Tri T = tris[t];
    const int a = T.v[i], b = T.v[nx(i)], c = T.v[pv(i)];
    const int nab = T.n[pv(i)], nca = T.n[nx(i)];
    const int u = T.n[i];
    if (u < 0) throw DegenerateGeometryError("vertex inserted on the triangulation hull");
    const Tri U = tris[u];
    int j = 0;  // U = (d, c, b) starting at j
    while (U.n[j] != t) ++j;
    const int d = U.v[j];
    const int ndc = U.n[pv(j)], nbd = U.n[nx(j)];
    const int T1 = t, U1 = u, T2 = static_cast<int>(tris.size()), U2 = T2 + 1;
    tris[T1] = {{a, b, p}, {U2, T2, nab}, T.inside};
    tris.push_back({{a, p, c}, {U1, nca, T1}, T.inside});
    tris[U1] = {{d, c, p}, {T2, U2, ndc}, U.inside};
    tris.push_back({{d, p, b}, {T1, nbd, U1}, U.inside});
    set_nb(nca, t, T2);
    set_nb(nbd, u, U2);
    vtri[a] = T1, vtri[b] = T1, vtri[c] = U1, vtri[d] = U1, vtri[p] = T1;
    stack.push_back({T1, 2});
    stack.push_back({T2, 1});
    stack.push_back({U1, 2});
    stack.push_back({U2, 1});
  }

  /// Flip the edge opposite v[i] of t. Returns the neighbour index that now holds the other half.
  int flip(int t, int i) {
    const Tri T = tris[t];
    const int u = T.n[i];
    const Tri U = tris[u];
    const int a = T.v[i], b = T.v[nx(i)], c = T.v[pv(i)];
    int j = 0;
    while (U.n[j] != t) ++j;
    const int d = U.v[j];
    const int n_bd = U.n[nx(j)];  // opposite c in U
    const int n_dc = U.n[pv(j)];  // opposite b in U
    const int n_ab = T.n[pv(i)];
    const int n_ca = T.n[nx(i)];
    tris[t] = {{a, b, d}, {n_bd, u, n_ab}, T.inside};
    tris[u] = {{d, c, a}, {n_ca, t, n_dc}, U.inside};
    set_nb(n_bd, u, t);
    set_nb(n_ca, t, u);
    vtri[a] = t, vtri[b] = t, vtri[d] = t, vtri[c] = u;
    return u;
  }

  void legalize(std::vector<std::pair<int, int>>& stack) {
    while (!stack.empty()) {
      const auto [t, i] = stack.back();
      stack.pop_back();
      const Tri& T = tris[t];
      const int u = T.n[i];
      if (u < 0) continue;
      const int a = T.v[i], b = T.v[nx(i)], c = T.v[pv(i)];
      if (constrained(b, c)) continue;
      const Tri& U = tris[u];
      int j = 0;
      while (U.n[j] != t) ++j;
      const int d = U.v[j];
      if (geom::incircle(pts[a], pts[b], pts[c], pts[d]) <= 0) continue;
      const int u2 = flip(t, i);
      // a keeps index 0 in t and index 2 in u2.
      stack.push_back({t, 0});
      stack.push_back({u2, 2});
    }
  }

  /// Makes a->b an edge of the triangulation and marks it constrained.
  void insert_segment(int a, int b) {
    std::vector<std::array<int, 2>> todo{{a, b}};
    while (!todo.empty()) {
      auto [s, e] = todo.back();
      todo.pop_back();
      if (s == e) continue;
      if (find_edge(s, e).first >= 0) {
        segs.insert(edge_key(s, e));
        continue;
      }
      std::vector<std::array<int, 2>> crossing;
      const int hit = crossing_edges(s, e, crossing);
      if (hit >= 0) {
        // A vertex lies on the segment: recover both halves.
        todo.push_back({hit, e});
        todo.push_back({s, hit});
        continue;
      }
      recover(s, e, crossing);
      segs.insert(edge_key(s, e));
    }
  }

  /// Edges properly crossed by segment s-e. Returns a vertex lying on the open segment, or -1.
  int crossing_edges(int s, int e, std::vector<std::array<int, 2>>& out) {
    const Point2 ps = pts[s], pe = pts[e];
    std::vector<int> around;
    star(s, around);
    int t = -1, p = -1, q = -1;
    for (int tt : around) {
      const Tri& T = tris[tt];
      const int k = index_of(T, s);
      const int v1 = T.v[nx(k)], v2 = T.v[pv(k)];
      const int o1 = geom::orient(ps, pts[v1], pe), o2 = geom::orient(ps, pts[v2], pe);
      if (o1 == 0 && dot(pts[v1] - ps, pe - ps) > 0) return v1;
      if (o2 == 0 && dot(pts[v2] - ps, pe - ps) > 0) return v2;
      if (o1 > 0 && o2 < 0) {
        t = tt, p = v1, q = v2;
        break;
      }
    }
    if (t < 0) throw DegenerateGeometryError("constraint recovery failed to leave its start vertex");
    // Segment leaves through edge (p, q); walk across.
    for (std::size_t guard = 0; guard < tris.size() + 8; ++guard) {
      out.push_back({p, q});
      const Tri& T = tris[t];
      int k = 0;
      while (!((T.v[nx(k)] == p && T.v[pv(k)] == q) || (T.v[nx(k)] == q && T.v[pv(k)] == p))) ++k;
      const int u = T.n[k];
      const Tri& U = tris[u];
      int r = -1;
      for (int m = 0; m < 3; ++m)
        if (U.v[m] != p && U.v[m] != q) r = U.v[m];
      if (r == e) return -1;
      const int o = geom::orient(ps, pe, pts[r]);
      if (o == 0) return r;
      if (o < 0) p = r;  // r below the segment replaces p (p is below)
      else q = r;
      t = u;
    }
    throw DegenerateGeometryError("constraint recovery walk did not terminate");
  }

  void recover(int s, int e, std::vector<std::array<int, 2>> crossing) {
    std::deque<std::array<int, 2>> queue(crossing.begin(), crossing.end());
    std::vector<std::array<int, 2>> fresh;
    std::size_t stale = 0;
    while (!queue.empty()) {
      const auto [p, q] = queue.front();
      queue.pop_front();
      const auto [t, k] = find_edge(p, q);
      const Tri& T = tris[t];
      const int u = T.n[k];
      const int r = T.v[k];
      const Tri& U = tris[u];
      int j = 0;
      while (U.n[j] != t) ++j;
      const int d = U.v[j];
      if (!geom::segments_cross_properly(pts[p], pts[q], pts[r], pts[d])) {
        queue.push_back({p, q});
        if (++stale > 4 * queue.size() + 16) throw DegenerateGeometryError("constraint recovery stalled");
        continue;
      }
      stale = 0;
      flip(t, k);
      if (geom::segments_cross_properly(pts[s], pts[e], pts[r], pts[d]) ) queue.push_back({r, d});
      else fresh.push_back({r, d});
    }
    // Restore the Delaunay property on the new edges (except the segment itself).
    bool changed = true;
    for (int sweep = 0; changed && sweep < 64; ++sweep) {
      changed = false;
      for (auto& [p, q] : fresh) {
        if ((p == s && q == e) || (p == e && q == s)) continue;
        const auto [t, k] = find_edge(p, q);
        if (t < 0) continue;
        const Tri& T = tris[t];
        const int u = T.n[k];
        if (u < 0) continue;
        const Tri& U = tris[u];
        int j = 0;
        while (U.n[j] != t) ++j;
        const int r = T.v[k], d = U.v[j];
        if (geom::incircle(pts[T.v[0]], pts[T.v[1]], pts[T.v[2]], pts[d]) > 0 &&
            geom::segments_cross_properly(pts[p], pts[q], pts[r], pts[d])) {
          flip(t, k);
          p = r, q = d;
          changed = true;
        }
      }
    }
  }

  /// Lawson flips across every unconstrained edge until locally Delaunay.
  void make_delaunay() {
    std::vector<std::pair<int, int>> stack;
    for (std::size_t t = 0; t < tris.size(); ++t)
      for (int k = 0; k < 3; ++k) stack.push_back({static_cast<int>(t), k});
    std::size_t flips = 0;
    while (!stack.empty()) {
      const auto [t, i] = stack.back();
      stack.pop_back();
      const Tri& T = tris[t];
      const int u = T.n[i];
      if (u < 0) continue;
      const int a = T.v[i], b = T.v[nx(i)], c = T.v[pv(i)];
      if (constrained(b, c)) continue;
      const Tri& U = tris[u];
      int j = 0;
      while (U.n[j] != t) ++j;
      const int d = U.v[j];
      if (geom::incircle(pts[a], pts[b], pts[c], pts[d]) <= 0) continue;
      if (!geom::segments_cross_properly(pts[b], pts[c], pts[a], pts[d])) continue;
      const int u2 = flip(t, i);
      if (++flips > 50 * tris.size()) break;
      for (int k = 0; k < 3; ++k) {
        stack.push_back({t, k});
        stack.push_back({u2, k});
      }
    }
  }

 private:
  std::size_t walk_counter_ = 0;
};

// ---------------------------------------------------------------------------

/// Snake order over a coarse grid keeps consecutive insertions close together.
std::vector<int> spatial_order(const std::vector<Point2>& pts, Point2 lo, Point2 hi) {
  const int g = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(pts.size()) / 4.0)));
  const double h = std::max(hi.y - lo.y, 1e-12);
  std::vector<std::tuple<int, double, int>> keyed;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int row = std::min(g - 1, static_cast<int>((pts[i].y - lo.y) / h * g));
    const double x = (row % 2 == 0) ? pts[i].x : -pts[i].x;
    keyed.push_back({row, x, static_cast<int>(i)});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  for (const auto& [r, x, i] : keyed) out.push_back(i);
  return out;
}

class Refiner {
 public:
  Refiner(Cdt& cdt, const MeshOptions& opts, std::vector<std::string>& warnings)
      : cdt_(cdt), opts_(opts), warnings_(warnings) {
    max_r_ = opts.h_target / std::sqrt(3.0);
    min_seg_ = 1e-3 * opts.h_target;
    tol_ = 1e-12 * opts.h_target;
  }

  void run() {
    for (std::size_t t = 0; t < cdt_.tris.size(); ++t) push_tri(static_cast<int>(t));
    std::vector<std::uint64_t> all(cdt_.segs.begin(), cdt_.segs.end());
    std::sort(all.begin(), all.end());
    for (auto k : all) seg_queue_.push_back({static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu)});

    std::size_t skipped = 0;
    for (;;) {
      drain_segments();
      if (cdt_.pts.size() > opts_.max_nodes) {
        warnings_.push_back("refinement stopped at the node limit");
        break;
      }
      if (tri_queue_.empty()) break;
      const auto item = tri_queue_.front();
      tri_queue_.pop_front();
      const int t = item.t;
      if (t >= static_cast<int>(cdt_.tris.size())) continue;
      const Tri& T = cdt_.tris[t];
      if (!T.inside || T.v != item.v || !bad(t)) continue;
      if (!fix(t)) ++skipped;
    }
    if (skipped > 0)
      warnings_.push_back(std::to_string(skipped) + " poor-quality triangles could not be refined (small input features)");
  }

 private:
  struct TriItem {
    int t;
    std::array<int, 3> v;
  };

  void push_tri(int t) {
    const Tri& T = cdt_.tris[t];
    if (T.inside && bad(t)) tri_queue_.push_back({t, T.v});
  }

  bool bad(int t) const {
    const Tri& T = cdt_.tris[t];
    const Point2 a = cdt_.pts[T.v[0]], b = cdt_.pts[T.v[1]], c = cdt_.pts[T.v[2]];
    const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
    const double area2 = std::abs(cross(b - a, c - a));
    if (area2 <= 0.0) return true;
    const double R = la * lb * lc / (2.0 * area2);
    if (R > max_r_) return true;
    const double shortest = std::min({la, lb, lc});
    // sin(min angle) = shortest / (2R)
    return shortest / (2.0 * R) < std::sin(opts_.min_angle * std::numbers::pi / 180.0) - 1e-12;
  }

  bool encroached_by(int a, int b, Point2 p) const {
    const Point2 pa = cdt_.pts[a], pb = cdt_.pts[b];
    return dot(pa - p, pb - p) < -1e-12 * dot(pb - pa, pb - pa);
  }

  bool seg_encroached(int a, int b) const {
    for (int dir = 0; dir < 2; ++dir) {
      const auto [t, k] = dir == 0 ? cdt_.find_edge(a, b) : cdt_.find_edge(b, a);
      if (t < 0) continue;
      const Tri& T = cdt_.tris[t];
      if (!T.inside) continue;
      if (encroached_by(a, b, cdt_.pts[T.v[k]])) return true;
    }
    return false;
  }

  void drain_segments() {
    while (!seg_queue_.empty()) {
      const auto [a, b] = seg_queue_.front();
      seg_queue_.pop_front();
      if (!cdt_.constrained(a, b)) continue;
      if (seg_encroached(a, b)) split_segment(a, b);
    }
  }

  bool split_segment(int a, int b) {
    const Point2 pa = cdt_.pts[a], pb = cdt_.pts[b];
    if (distance(pa, pb) < 2.0 * min_seg_) return false;
    const Point2 m = 0.5 * (pa + pb);
    std::vector<int> created;
    const int v = cdt_.split_constrained(a, b, m, &created);
    after_insert(v, created);
    seg_queue_.push_back({a, v});
    seg_queue_.push_back({v, b});
    return true;
  }

  void after_insert(int v, const std::vector<int>& created) {
    for (int t : created) {
      push_tri(t);
      const Tri& T = cdt_.tris[t];
      const int k = Cdt::index_of(T, v);
      const int p = T.v[nx(k)], q = T.v[pv(k)];
      if (cdt_.constrained(p, q)) seg_queue_.push_back({p, q});
    }
  }

  /// Walk from the centroid of t towards c. Returns the containing triangle,
  /// or sets `blocked` to a constrained edge crossed on the way.
  int walk_to(int t, Point2 c, std::array<int, 2>& blocked) const {
    const Tri& T0 = cdt_.tris[t];
    const Point2 o = (1.0 / 3.0) * (cdt_.pts[T0.v[0]] + cdt_.pts[T0.v[1]] + cdt_.pts[T0.v[2]]);
    int came_from = -1;
    for (std::size_t guard = 0; guard < cdt_.tris.size() + 8; ++guard) {
      const Tri& T = cdt_.tris[t];
      int exit = -1;
      for (int k = 0; k < 3; ++k) {
        if (T.n[k] == came_from && came_from >= 0) continue;
        const Point2 p = cdt_.pts[T.v[nx(k)]], q = cdt_.pts[T.v[pv(k)]];
        if (geom::orient(p, q, c) < 0 && geom::segments_intersect(o, c, p, q)) {
          exit = k;
          break;
        }
      }
      if (exit < 0) return t;
      const int p = T.v[nx(exit)], q = T.v[pv(exit)];
      if (cdt_.constrained(p, q) || T.n[exit] < 0) {
        blocked = {p, q};
        return -1;
      }
      came_from = t;
      t = T.n[exit];
    }
    return -1;
  }

  bool fix(int t) {
    const Tri T = cdt_.tris[t];
    const Point2 a = cdt_.pts[T.v[0]], b = cdt_.pts[T.v[1]], c = cdt_.pts[T.v[2]];
    const Point2 cc = geom::circumcenter(a, b, c);
    if (!std::isfinite(cc.x) || !std::isfinite(cc.y)) return false;
    std::array<int, 2> blocked{-1, -1};
    const int host = walk_to(t, cc, blocked);
    if (host < 0) {
      if (blocked[0] >= 0 && split_segment(blocked[0], blocked[1])) {
        tri_queue_.push_back({t, T.v});
        return true;
      }
      return false;
    }
    // Constrained edges bounding the insertion cavity must not be encroached.
    std::vector<std::array<int, 2>> enc = cavity_encroached(host, cc);
    if (!enc.empty()) {
      bool any = false;
      for (const auto& [p, q] : enc) any |= split_segment(p, q);
      if (any) tri_queue_.push_back({t, T.v});
      return any;
    }
    for (int k = 0; k < 3; ++k) {
      if (distance(cdt_.pts[cdt_.tris[host].v[k]], cc) < min_seg_) return false;
    }
    std::vector<int> created;
    const std::size_t before = cdt_.pts.size();
    const int v = cdt_.insert(cc, host, tol_, &created);
    if (cdt_.pts.size() == before) return false;
    after_insert(v, created);
    return true;
  }

  std::vector<std::array<int, 2>> cavity_encroached(int host, Point2 c) const {
    std::vector<std::array<int, 2>> out;
    std::vector<int> stack{host}, seen{host};
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      const Tri& T = cdt_.tris[t];
      for (int k = 0; k < 3; ++k) {
        const int p = T.v[nx(k)], q = T.v[pv(k)];
        if (cdt_.constrained(p, q)) {
          if (encroached_by(p, q, c)) out.push_back({p, q});
          continue;
        }
        const int u = T.n[k];
        if (u < 0 || std::find(seen.begin(), seen.end(), u) != seen.end()) continue;
        const Tri& U = cdt_.tris[u];
        if (geom::incircle(cdt_.pts[U.v[0]], cdt_.pts[U.v[1]], cdt_.pts[U.v[2]], c) > 0) {
          seen.push_back(u);
          stack.push_back(u);
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  Cdt& cdt_;
  const MeshOptions& opts_;
  std::vector<std::string>& warnings_;
  double max_r_, min_seg_, tol_;
  std::deque<TriItem> tri_queue_;
  std::deque<std::array<int, 2>> seg_queue_;
};

/// Components separated by constraints; those whose sample point lies in the footprint are inside.
void classify(Cdt& cdt, const Region& footprint) {
  const std::size_t n = cdt.tris.size();
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{static_cast<int>(s)}, members;
    comp[s] = ncomp;
    bool touches_super = false;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      members.push_back(t);
      const Tri& T = cdt.tris[t];
      for (int k = 0; k < 3; ++k) {
        if (cdt.is_super(T.v[k])) touches_super = true;
        const int u = T.n[k];
        if (u < 0 || comp[u] >= 0 || cdt.constrained(T.v[nx(k)], T.v[pv(k)])) continue;
        comp[u] = ncomp;
        stack.push_back(u);
      }
    }
    bool inside = false;
    if (!touches_super) {
      const Tri& T = cdt.tris[members.front()];
      const Point2 c = (1.0 / 3.0) * (cdt.pts[T.v[0]] + cdt.pts[T.v[1]] + cdt.pts[T.v[2]]);
      inside = inside_region(footprint, c);
    }
    for (int t : members) cdt.tris[t].inside = inside;
    ++ncomp;
  }
}

}  // namespace

int TriMesh2D::layer_bit(const std::string& name) const {
  for (std::size_t i = 0; i < layer_names.size(); ++i)
    if (layer_names[i] == name) return static_cast<int>(i);
  return -1;
}

TriMesh2D triangulate(const PlanarLayout& layout, const MeshOptions& opts) {
  if (!(opts.h_target > 0.0)) throw ParameterError("h_target must be > 0");
  if (!(opts.min_angle > 0.0) || opts.min_angle > 33.0) throw ParameterError("min_angle must lie in (0, 33] degrees");
  if (layout.layers.size() > 32) throw ParameterError("at most 32 layers are supported");
  validate_layout(layout);

  PslgBuilder builder(kGeometryTol);
  auto add_region = [&](const Region& r) {
    for (const auto& poly : r) {
      builder.add_ring(poly.outer);
      for (const auto& h : poly.holes) builder.add_ring(h);
    }
  };
  add_region(layout.footprint);
  for (const auto& l : layout.layers) add_region(l.region);
  Pslg pslg = builder.build();

  // Pre-split long input edges to roughly the target size.
  std::vector<std::array<int, 2>> segs;
  for (const auto& [a, b] : pslg.segs) {
    const Point2 pa = pslg.pts[a], pb = pslg.pts[b];
    const int pieces = std::max(1, static_cast<int>(std::ceil(distance(pa, pb) / opts.h_target - 1e-9)));
    int prev = a;
    for (int k = 1; k < pieces; ++k) {
      const int v = static_cast<int>(pslg.pts.size());
      pslg.pts.push_back(pa + (static_cast<double>(k) / pieces) * (pb - pa));
      segs.push_back({prev, v});
      prev = v;
    }
    segs.push_back({prev, b});
  }

  Point2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const auto& p : pslg.pts) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  Cdt cdt(lo, hi);
  std::vector<int> id(pslg.pts.size(), -1);
  int hint = 0;
  for (int i : spatial_order(pslg.pts, lo, hi)) {
    id[i] = cdt.insert(pslg.pts[i], hint, 0.0);
    hint = cdt.vtri[id[i]];
  }
  for (const auto& [a, b] : segs) cdt.insert_segment(id[a], id[b]);
  cdt.make_delaunay();
  classify(cdt, layout.footprint);

  TriMesh2D mesh;
  Refiner(cdt, opts, mesh.warnings).run();

  // Compact: drop outside triangles and unused vertices, keep creation order.
  std::vector<int> remap(cdt.pts.size(), -1);
  std::vector<int> used;
  for (const auto& T : cdt.tris)
    if (T.inside)
      for (int v : T.v) remap[v] = 0;
  for (std::size_t v = 0; v < cdt.pts.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = static_cast<int>(mesh.nodes.size());
    mesh.nodes.push_back(cdt.pts[v]);
  }
  for (const auto& T : cdt.tris) {
    if (!T.inside) continue;
    mesh.triangles.push_back({remap[T.v[0]], remap[T.v[1]], remap[T.v[2]]});
  }
  // Deterministic triangle order: by sorted vertex triple.
  std::sort(mesh.triangles.begin(), mesh.triangles.end(), [](const auto& x, const auto& y) {
    auto sx = x, sy = y;
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    return sx < sy;
  });
  for (auto& t : mesh.triangles) {
    // Rotate so the smallest index comes first (orientation preserved).
    while (t[0] > t[1] || t[0] > t[2]) t = {t[1], t[2], t[0]};
  }
  std::unordered_set<std::uint64_t> emitted;
  std::vector<int> inverse(mesh.nodes.size());
  for (std::size_t v = 0; v < remap.size(); ++v)
    if (remap[v] >= 0) inverse[remap[v]] = static_cast<int>(v);
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[nx(k)];
      if (!cdt.constrained(inverse[a], inverse[b])) continue;
      if (!emitted.insert(edge_key(a, b)).second) continue;
      mesh.boundary_edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(mesh.boundary_edges.begin(), mesh.boundary_edges.end());

  for (const auto& l : layout.layers) mesh.layer_names.push_back(l.name);
  mesh.coverage.resize(mesh.triangles.size(), 0u);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    const Point2 c = (1.0 / 3.0) * (mesh.nodes[T[0]] + mesh.nodes[T[1]] + mesh.nodes[T[2]]);
    for (std::size_t l = 0; l < layout.layers.size(); ++l)
      if (inside_region(layout.layers[l].region, c)) mesh.coverage[t] |= (1u << l);
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    const double a = 0.5 * cross(mesh.nodes[T[1]] - mesh.nodes[T[0]], mesh.nodes[T[2]] - mesh.nodes[T[0]]);
    if (a < opts.area_min)
      throw DegenerateGeometryError("triangle " + std::to_string(t) + " has area " + std::to_string(a) +
                                    " below area_min; input features are too close together");
  }
  return mesh;
}

std::vector<char> footprint_boundary_nodes(const TriMesh2D& mesh) {
  std::unordered_set<std::uint64_t> directed;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k)
      directed.insert((static_cast<std::uint64_t>(t[k]) << 32) | static_cast<std::uint32_t>(t[nx(k)]));
  std::vector<char> on(mesh.nodes.size(), 0);
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[nx(k)];
      if (!directed.count((static_cast<std::uint64_t>(b) << 32) | static_cast<std::uint32_t>(a))) on[a] = on[b] = 1;
    }
  return on;
}

}  // namespace kirimorph
