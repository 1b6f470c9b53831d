#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "empathd/meshgen.hpp"

namespace empathd {

namespace {

using i128 = __int128;

constexpr double kIntLimit = 1 << 16;

struct Kernel {
  bool exact = false;

  int orient(const Vec2& a, const Vec2& b, const Vec2& c) const {
    if (exact) {
      const auto ax = static_cast<std::int64_t>(a.x()), ay = static_cast<std::int64_t>(a.y());
      const i128 det = static_cast<i128>(static_cast<std::int64_t>(b.x()) - ax) * (static_cast<std::int64_t>(c.y()) - ay) -
                       static_cast<i128>(static_cast<std::int64_t>(b.y()) - ay) * (static_cast<std::int64_t>(c.x()) - ax);
      return (det > 0) - (det < 0);
    }
    const long double det = static_cast<long double>(b.x() - a.x()) * (c.y() - a.y()) -
                            static_cast<long double>(b.y() - a.y()) * (c.x() - a.x());
    return (det > 0) - (det < 0);
  }

  // > 0 when d lies strictly inside the circumcircle of ccw (a, b, c).
  bool in_circle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) const {
    if (exact) {
      const auto dx = static_cast<std::int64_t>(d.x()), dy = static_cast<std::int64_t>(d.y());
      const i128 adx = static_cast<std::int64_t>(a.x()) - dx, ady = static_cast<std::int64_t>(a.y()) - dy;
      const i128 bdx = static_cast<std::int64_t>(b.x()) - dx, bdy = static_cast<std::int64_t>(b.y()) - dy;
      const i128 cdx = static_cast<std::int64_t>(c.x()) - dx, cdy = static_cast<std::int64_t>(c.y()) - dy;
      const i128 det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
                       (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
                       (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
      return det > 0;
    }
    using ld = long double;
    const ld adx = ld(a.x()) - d.x(), ady = ld(a.y()) - d.y();
    const ld bdx = ld(b.x()) - d.x(), bdy = ld(b.y()) - d.y();
    const ld cdx = ld(c.x()) - d.x(), cdy = ld(c.y()) - d.y();
    const ld det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
                   (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    return det > 0;
  }
};

struct Tri {
  std::uint32_t v[3];
  std::int32_t n[3];  // neighbour across the edge opposite v[i]
  bool alive = true;
};

std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order) {
  std::uint64_t d = 0;
  for (std::uint32_t s = 1u << (order - 1); s > 0; s >>= 1) {
    const std::uint32_t rx = (x & s) ? 1 : 0;
    const std::uint32_t ry = (y & s) ? 1 : 0;
    d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
    if (ry == 0) {
      if (rx == 1) {
        x = s - 1 - x;
        y = s - 1 - y;
      }
      std::swap(x, y);
    }
  }
  return d;
}

// Bowyer-Watson with ghost triangles: each hull edge (a, b) carries a triangle
// (a, b, inf) covering the open half-plane to the left of a->b, so hull
// triangles never depend on a finite bounding triangle.
class Triangulator {
 public:
  static constexpr std::uint32_t kInf = 0xFFFFFFFFu;

  Triangulator(const std::vector<Vec2>& pts, Kernel k) : pts_(pts), k_(k) {}

  // Seeds the triangulation with a non-degenerate triangle.
  void init(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    if (k_.orient(pts_[a], pts_[b], pts_[c]) < 0) std::swap(b, c);
    tris_.push_back(Tri{{a, b, c}, {1, 2, 3}});
    const std::uint32_t v[3] = {a, b, c};
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t x = v[(e + 1) % 3], y = v[(e + 2) % 3];
      tris_.push_back(Tri{{y, x, kInf}, {-1, -1, 0}});
    }
    // Ghosts meet each other along their infinite edges.
    for (int g = 1; g <= 3; ++g) {
      for (int h = 1; h <= 3; ++h) {
        if (g == h) continue;
        for (int e = 0; e < 3; ++e) {
          const std::uint32_t p = tris_[g].v[(e + 1) % 3], q = tris_[g].v[(e + 2) % 3];
          for (int f = 0; f < 3; ++f) {
            if (tris_[h].v[(f + 1) % 3] == q && tris_[h].v[(f + 2) % 3] == p) tris_[g].n[e] = h;
          }
        }
      }
    }
    last_ = 0;
  }

  void insert(std::uint32_t p) {
    const int start = locate(pts_[p]);
    if (start < 0) return;
    bad_.clear();
    bad_.push_back(start);
    tris_[start].alive = false;
    for (std::size_t i = 0; i < bad_.size(); ++i) {
      const Tri& t = tris_[bad_[i]];
      for (int e = 0; e < 3; ++e) {
        const int nb = t.n[e];
        if (!tris_[nb].alive) continue;
        if (in_circumcircle(tris_[nb], pts_[p])) {
          tris_[nb].alive = false;
          bad_.push_back(nb);
        }
      }
    }
    // Cavity boundary edges, oriented ccw as seen from inside.
    edges_.clear();
    for (int bi : bad_) {
      const Tri t = tris_[bi];
      for (int e = 0; e < 3; ++e) {
        const int nb = t.n[e];
        if (!tris_[nb].alive) continue;
        edges_.push_back({t.v[(e + 1) % 3], t.v[(e + 2) % 3], nb, -1});
      }
    }
    for (auto& ed : edges_) {
      const int idx = static_cast<int>(tris_.size());
      tris_.push_back(Tri{{ed.a, ed.b, p}, {-1, -1, ed.outside}});
      ed.tri = idx;
      Tri& o = tris_[ed.outside];
      for (int e = 0; e < 3; ++e) {
        if (o.v[(e + 1) % 3] == ed.b && o.v[(e + 2) % 3] == ed.a) o.n[e] = idx;
      }
    }
    // New triangle (a, b, p): across (b, p) starts at b; across (p, a) ends at a.
    for (auto& ed : edges_) {
      Tri& t = tris_[ed.tri];
      for (const auto& other : edges_) {
        if (other.a == ed.b) t.n[0] = other.tri;
        if (other.b == ed.a) t.n[1] = other.tri;
      }
    }
    last_ = edges_.back().tri;
  }

  std::vector<Triangle> result() const {
    std::vector<Triangle> out;
    for (const auto& t : tris_) {
      if (t.alive && !ghost(t)) out.push_back({t.v[0], t.v[1], t.v[2]});
    }
    return out;
  }

 private:
  struct Edge {
    std::uint32_t a, b;
    int outside;
    int tri;
  };

  static bool ghost(const Tri& t) { return t.v[0] == kInf || t.v[1] == kInf || t.v[2] == kInf; }

  // Finite edge (a, b) of a ghost triangle; its region lies left of a->b.
  static std::pair<std::uint32_t, std::uint32_t> ghost_edge(const Tri& t) {
    const int i = t.v[0] == kInf ? 0 : (t.v[1] == kInf ? 1 : 2);
    return {t.v[(i + 1) % 3], t.v[(i + 2) % 3]};
  }

  bool in_circumcircle(const Tri& t, const Vec2& p) const {
    if (!ghost(t)) return k_.in_circle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], p);
    const auto [ia, ib] = ghost_edge(t);
    const Vec2& a = pts_[ia];
    const Vec2& b = pts_[ib];
    const int o = k_.orient(a, b, p);
    if (o != 0) return o > 0;
    // On the hull line: inside only when strictly between the edge ends.
    return (p - a).dot(b - a) > 0 && (p - b).dot(a - b) > 0;
  }

  bool contains(const Tri& t, const Vec2& p) const {
    if (ghost(t)) {
      const auto [a, b] = ghost_edge(t);
      return k_.orient(pts_[a], pts_[b], p) > 0;
    }
    for (int e = 0; e < 3; ++e) {
      if (k_.orient(pts_[t.v[(e + 1) % 3]], pts_[t.v[(e + 2) % 3]], p) < 0) return false;
    }
    return true;
  }

  // Visibility walk from the last created triangle, brute force as a fallback.
  int locate(const Vec2& p) {
    int cur = last_;
    if (cur < 0 || !tris_[cur].alive) {
      cur = -1;
      for (int i = static_cast<int>(tris_.size()) - 1; i >= 0 && cur < 0; --i) {
        if (tris_[i].alive) cur = i;
      }
    }
    if (cur >= 0 && ghost(tris_[cur])) {
      if (contains(tris_[cur], p)) return cur;
      const Tri& g = tris_[cur];
      const int i = g.v[0] == kInf ? 0 : (g.v[1] == kInf ? 1 : 2);
      cur = g.n[i];
    }
    const std::size_t maxSteps = tris_.size() + 16;
    int rot = 0;
    for (std::size_t step = 0; cur >= 0 && step < maxSteps; ++step) {
      const Tri& t = tris_[cur];
      int next = -1;
      for (int k = 0; k < 3; ++k) {
        const int e = (k + rot) % 3;
        if (k_.orient(pts_[t.v[(e + 1) % 3]], pts_[t.v[(e + 2) % 3]], p) < 0) {
          next = t.n[e];
          break;
        }
      }
      rot = (rot + 1) % 3;
      if (next < 0) return cur;
      if (ghost(tris_[next])) return next;
      cur = next;
    }
    for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i) {
      if (tris_[i].alive && !ghost(tris_[i]) && contains(tris_[i], p)) return i;
    }
    for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i) {
      if (tris_[i].alive && ghost(tris_[i]) && in_circumcircle(tris_[i], p)) return i;
    }
    return -1;
  }

  const std::vector<Vec2>& pts_;
  Kernel k_;
  std::vector<Tri> tris_;
  std::vector<int> bad_;
  std::vector<Edge> edges_;
  int last_ = -1;
};

}  // namespace

std::vector<Triangle> delaunay(const std::vector<Vec2>& points) {
  const std::size_t n = points.size();
  if (n < 3) return {};

  Vec2 lo = points[0], hi = points[0];
  bool integral = true;
  for (const auto& p : points) {
    if (!p.allFinite()) return {};
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    integral = integral && p.x() == std::floor(p.x()) && p.y() == std::floor(p.y()) && std::abs(p.x()) <= kIntLimit &&
               std::abs(p.y()) <= kIntLimit;
  }

  // Insertion order along a Hilbert curve, duplicates removed.
  const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-300});
  constexpr int kOrder = 16;
  const double cells = static_cast<double>((1u << kOrder) - 1);
  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto qx = static_cast<std::uint32_t>((points[i].x() - lo.x()) / span * cells);
    const auto qy = static_cast<std::uint32_t>((points[i].y() - lo.y()) / span * cells);
    keyed[i] = {hilbert_index(qx, qy, kOrder), static_cast<std::uint32_t>(i)};
  }
  std::sort(keyed.begin(), keyed.end());

  std::vector<std::uint32_t> byPosition(n);
  std::iota(byPosition.begin(), byPosition.end(), 0u);
  std::sort(byPosition.begin(), byPosition.end(), [&](std::uint32_t a, std::uint32_t b) {
    return std::make_pair(points[a].x(), points[a].y()) < std::make_pair(points[b].x(), points[b].y());
  });
  std::vector<char> duplicate(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    if (points[byPosition[i]] == points[byPosition[i - 1]]) duplicate[byPosition[i]] = 1;
  }

  Kernel k;
  k.exact = integral;
  std::vector<std::uint32_t> order;
  order.reserve(n);
  for (const auto& [key, idx] : keyed) {
    if (!duplicate[idx]) order.push_back(idx);
  }
  if (order.size() < 3) return {};
  // Seed with the first two points and the first point off their line.
  std::size_t third = 2;
  while (third < order.size() && k.orient(points[order[0]], points[order[1]], points[order[third]]) == 0) ++third;
  if (third >= order.size()) return {};
  Triangulator tr(points, k);
  tr.init(order[0], order[1], order[third]);
  for (std::size_t i = 2; i < order.size(); ++i) {
    if (i != third) tr.insert(order[i]);
  }
  return tr.result();
}

std::vector<Triangle> triangulate(const std::vector<PixelPoint>& points, const SegmentMask* mask) {
  std::vector<Vec2> pts;
  pts.reserve(points.size());
  for (const auto& p : points) pts.emplace_back(p.x, p.y);
  std::vector<Triangle> tris = delaunay(pts);
  if (!mask) return tris;
  std::vector<Triangle> kept;
  kept.reserve(tris.size());
  for (const auto& t : tris) {
    const double cx = (pts[t[0]].x() + pts[t[1]].x() + pts[t[2]].x()) / 3.0;
    const double cy = (pts[t[0]].y() + pts[t[1]].y() + pts[t[2]].y()) / 3.0;
    if (mask->get_or_false(static_cast<int>(std::lround(cx)), static_cast<int>(std::lround(cy)))) kept.push_back(t);
  }
  return kept;
}

}  // namespace empathd
