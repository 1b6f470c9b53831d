#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Eigenvalues>

#include "empathd/homography.hpp"
#include "empathd/tracker.hpp"

namespace empathd {

namespace {

bool is_ink(const float* p) { return p[2] > 0.5f && p[1] < 0.5f && p[0] < 0.5f; }

// Pixels on the blue-cyan blend line, where 1 - green is the ink fraction.
bool on_ink_blend(const float* p) { return p[2] > 0.5f && p[0] < 0.5f; }

// Sub-pixel edge between an ink pixel and a non-ink 4-neighbour, measured from
// the ink pixel centre. With area-averaged ink fractions sa, sb a step edge sits
// at sa + sb - 1/2; off the blend line the midpoint is used.
double edge_offset(const Image& img, int x, int y, int nx, int ny) {
  const float* a = img.at(x, y);
  const float* b = img.at(nx, ny);
  if (!on_ink_blend(a) || !on_ink_blend(b)) return 0.5;
  const double sa = 1.0 - a[1], sb = 1.0 - b[1];
  return std::clamp(sa + sb - 0.5, 0.0, 1.0);
}

struct Component {
  std::vector<int> pixels;  // linear indices
  int minX, maxX, minY, maxY;
};

std::vector<Component> ink_components(const std::vector<std::uint8_t>& ink, int w, int h, int minPixels) {
  std::vector<int> label(ink.size(), -1);
  std::vector<Component> comps;
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(ink.size()); ++start) {
    if (!ink[start] || label[start] >= 0) continue;
    Component c{{}, w, -1, h, -1};
    const int id = static_cast<int>(comps.size());
    stack.push_back(start);
    label[start] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      c.pixels.push_back(p);
      const int x = p % w, y = p / w;
      c.minX = std::min(c.minX, x);
      c.maxX = std::max(c.maxX, x);
      c.minY = std::min(c.minY, y);
      c.maxY = std::max(c.maxY, y);
      const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (const auto& d : nb) {
        const int nx = x + d[0], ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int q = ny * w + nx;
        if (ink[q] && label[q] < 0) {
          label[q] = id;
          stack.push_back(q);
        }
      }
    }
    comps.push_back(std::move(c));
  }
  std::erase_if(comps, [minPixels](const Component& c) { return static_cast<int>(c.pixels.size()) < minPixels; });
  return comps;
}

double signed_area(const std::array<Vec2, 4>& q) {
  double a = 0.0;
  for (int i = 0; i < 4; ++i) a += q[i].x() * q[(i + 1) % 4].y() - q[(i + 1) % 4].x() * q[i].y();
  return a / 2.0;
}

bool convex(const std::array<Vec2, 4>& q) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Vec2 e1 = q[(i + 1) % 4] - q[i];
    const Vec2 e2 = q[(i + 2) % 4] - q[(i + 1) % 4];
    const double c = e1.x() * e2.y() - e1.y() * e2.x();
    if (std::abs(c) < 1e-9) return false;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

// Extreme-point quad from boundary samples, ordered clockwise on screen (v down).
std::optional<std::array<Vec2, 4>> initial_quad(const std::vector<Vec2>& pts) {
  if (pts.size() < 8) return std::nullopt;
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  auto farthest = [&](const Vec2& from) {
    std::size_t best = 0;
    double bd = -1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = (pts[i] - from).squaredNorm();
      if (d > bd) {
        bd = d;
        best = i;
      }
    }
    return pts[best];
  };
  const Vec2 c1 = farthest(centroid);
  const Vec2 c3 = farthest(c1);
  const Vec2 axis = c3 - c1;
  double maxPos = 0, maxNeg = 0;
  Vec2 c2 = c1, c4 = c1;
  for (const auto& p : pts) {
    const Vec2 r = p - c1;
    const double s = axis.x() * r.y() - axis.y() * r.x();
    if (s > maxPos) {
      maxPos = s;
      c2 = p;
    }
    if (s < maxNeg) {
      maxNeg = s;
      c4 = p;
    }
  }
  if (maxPos <= 0 || maxNeg >= 0) return std::nullopt;
  std::array<Vec2, 4> q{c1, c2, c3, c4};
  if (signed_area(q) < 0) std::swap(q[1], q[3]);
  return q;
}

struct Line {
  Vec2 point;
  Vec2 dir;
};

std::optional<Line> fit_line(const std::vector<Vec2>& pts) {
  if (pts.size() < 4) return std::nullopt;
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  return Line{mean, es.eigenvectors().col(1)};
}

std::optional<Vec2> intersect(const Line& a, const Line& b) {
  const double den = a.dir.x() * b.dir.y() - a.dir.y() * b.dir.x();
  if (std::abs(den) < 1e-9) return std::nullopt;
  const Vec2 d = b.point - a.point;
  const double t = (d.x() * b.dir.y() - d.y() * b.dir.x()) / den;
  return a.point + t * a.dir;
}

// Refine quad corners by fitting lines to sub-pixel edge samples near each side.
std::optional<std::array<Vec2, 4>> refine_quad(std::array<Vec2, 4> quad, const std::vector<Vec2>& edges) {
  for (double band : {2.0, 1.0}) {
    std::array<std::vector<Vec2>, 4> sides;
    for (const auto& e : edges) {
      int bestSide = -1;
      double bestDist = band;
      for (int s = 0; s < 4; ++s) {
        const Vec2 a = quad[s], b = quad[(s + 1) % 4];
        const Vec2 ab = b - a;
        const double len2 = ab.squaredNorm();
        if (len2 < 1e-9) return std::nullopt;
        const double t = (e - a).dot(ab) / len2;
        if (t < 0.12 || t > 0.88) continue;
        const double dist = std::abs(ab.x() * (e - a).y() - ab.y() * (e - a).x()) / std::sqrt(len2);
        if (dist < bestDist) {
          bestDist = dist;
          bestSide = s;
        }
      }
      if (bestSide >= 0) sides[bestSide].push_back(e);
    }
    std::array<Line, 4> lines;
    for (int s = 0; s < 4; ++s) {
      auto l = fit_line(sides[s]);
      if (!l) return std::nullopt;
      lines[s] = *l;
    }
    for (int i = 0; i < 4; ++i) {
      // Corner i joins side i-1 (ending at i) and side i (starting at i).
      auto p = intersect(lines[(i + 3) % 4], lines[i]);
      if (!p) return std::nullopt;
      quad[i] = *p;
    }
  }
  return quad;
}

bool sample_ink(const Image& img, const std::vector<std::uint8_t>& ink, const Vec2& p) {
  const int x = static_cast<int>(std::lround(p.x())), y = static_cast<int>(std::lround(p.y()));
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return false;
  return ink[static_cast<std::size_t>(y) * img.width + x] != 0;
}

// Reads the 6x6 cell grid with the given corner as the marker's top-left.
std::array<std::uint8_t, kMarkerCells * kMarkerCells> read_cells(const Image& img, const std::vector<std::uint8_t>& ink,
                                                                 const std::array<Vec2, 4>& quad) {
  const Mat3 H = unit_square_to_quad(quad);
  std::array<std::uint8_t, kMarkerCells * kMarkerCells> cells{};
  const double offs[3] = {0.3, 0.5, 0.7};
  for (int r = 0; r < kMarkerCells; ++r) {
    for (int c = 0; c < kMarkerCells; ++c) {
      int votes = 0;
      for (double oy : offs) {
        for (double ox : offs) {
          const Vec2 uv((c + ox) / kMarkerCells, (r + oy) / kMarkerCells);
          votes += sample_ink(img, ink, apply_homography(H, uv));
        }
      }
      cells[r * kMarkerCells + c] = votes >= 5;
    }
  }
  return cells;
}

}  // namespace

std::vector<MarkerDetection> detect_markers(const Image& color, const PhoneGeometry& geometry,
                                            const DetectorOptions& options) {
  const int w = color.width, h = color.height;
  std::vector<std::uint8_t> ink(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) ink[static_cast<std::size_t>(y) * w + x] = is_ink(color.at(x, y));
  }

  std::vector<MarkerDetection> out;
  for (const auto& comp : ink_components(ink, w, h, options.minComponentPixels)) {
    if (comp.maxX - comp.minX < 4 || comp.maxY - comp.minY < 4) continue;
    // Boundary pixel centres for the coarse quad, and sub-pixel edge midpoints for refinement.
    std::vector<Vec2> boundary, edges;
    bool occluded = false;
    for (int p : comp.pixels) {
      const int x = p % w, y = p / w;
      bool isBoundary = false;
      const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (const auto& d : nb) {
        const int nx = x + d[0], ny = y + d[1];
        const bool inImage = nx >= 0 && ny >= 0 && nx < w && ny < h;
        if (!inImage || !ink[static_cast<std::size_t>(ny) * w + nx]) {
          isBoundary = true;
          // A fully visible marker is ringed by screen; anything else cuts it.
          occluded = occluded || !inImage || !on_ink_blend(color.at(nx, ny));
          const double t = inImage ? edge_offset(color, x, y, nx, ny) : 0.5;
          edges.emplace_back(x + t * d[0], y + t * d[1]);
        }
      }
      if (isBoundary) boundary.emplace_back(x, y);
    }
    if (occluded) continue;
    auto coarse = initial_quad(boundary);
    if (!coarse) continue;
    auto quad = refine_quad(*coarse, edges);
    if (!quad || !convex(*quad)) continue;
    const double area = signed_area(*quad);
    if (area < options.minQuadArea) continue;
    const double fill = static_cast<double>(comp.pixels.size()) / area;
    if (fill < 0.5 || fill > 1.15) continue;

    // Try each corner as the marker's top-left; keep the unique best match.
    int bestId = -1, bestShift = 0, bestErr = options.maxBitErrors + 1;
    bool ambiguous = false;
    for (int shift = 0; shift < 4; ++shift) {
      std::array<Vec2, 4> q;
      for (int i = 0; i < 4; ++i) q[i] = (*quad)[(i + shift) % 4];
      const auto cells = read_cells(color, ink, q);
      bool border = true;
      for (int r = 0; r < kMarkerCells && border; ++r) {
        for (int c = 0; c < kMarkerCells; ++c) {
          const bool edge = r == 0 || c == 0 || r == kMarkerCells - 1 || c == kMarkerCells - 1;
          if (edge && !cells[r * kMarkerCells + c]) {
            border = false;
            break;
          }
        }
      }
      if (!border) break;  // border is rotation invariant
      MarkerBits bits{};
      for (int r = 0; r < kMarkerDataBits; ++r) {
        for (int c = 0; c < kMarkerDataBits; ++c) bits[r * kMarkerDataBits + c] = cells[(r + 1) * kMarkerCells + c + 1];
      }
      for (const auto& m : geometry.markers) {
        const int err = hamming(bits, m.bits);
        if (err < bestErr) {
          bestErr = err;
          bestId = m.id;
          bestShift = shift;
          ambiguous = false;
        } else if (err == bestErr && (m.id != bestId || shift != bestShift)) {
          ambiguous = true;
        }
      }
    }
    if (bestId < 0 || ambiguous) continue;
    MarkerDetection det;
    det.markerId = bestId;
    for (int i = 0; i < 4; ++i) det.corners[i] = (*quad)[(i + bestShift) % 4];
    out.push_back(det);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.markerId < b.markerId; });
  // Duplicate ids indicate a misread; drop both.
  std::vector<MarkerDetection> unique;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool dupPrev = i > 0 && out[i - 1].markerId == out[i].markerId;
    const bool dupNext = i + 1 < out.size() && out[i + 1].markerId == out[i].markerId;
    if (!dupPrev && !dupNext) unique.push_back(out[i]);
  }
  return unique;
}

}  // namespace empathd
