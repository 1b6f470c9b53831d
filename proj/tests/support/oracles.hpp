#pragma once

// Straightforward reference computations used to check the optimised code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"
#include "empathd/meshgen.hpp"

namespace oracle {

using empathd::Image;
using empathd::SegmentMask;
using empathd::Vec2;

// 2-D Gaussian over the square of radius ceil(3 sigma), clamp-to-edge.
inline double blurred_at(const Image& img, int x, int y, int c, double sigma) {
  if (sigma <= 0) return img.at(x, y)[c];
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  double num = 0, den = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      const int sx = std::clamp(x + dx, 0, img.width - 1);
      const int sy = std::clamp(y + dy, 0, img.height - 1);
      num += w * img.at(sx, sy)[c];
      den += w;
    }
  }
  return num / den;
}

// Mean SSIM over every full n x n window, one channel at a time, computed
// window by window with population statistics.
inline double ssim(const Image& a, const Image& b, int n) {
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  int windows = 0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y + n <= a.height; ++y) {
      for (int x = 0; x + n <= a.width; ++x) {
        double ma = 0, mb = 0;
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) {
            ma += a.at(x + i, y + j)[c];
            mb += b.at(x + i, y + j)[c];
          }
        ma /= n * n;
        mb /= n * n;
        double va = 0, vb = 0, cov = 0;
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) {
            const double da = a.at(x + i, y + j)[c] - ma;
            const double db = b.at(x + i, y + j)[c] - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
          }
        va /= n * n;
        vb /= n * n;
        cov /= n * n;
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
    }
  }
  return total / windows;
}

// Power of one frequency bin via a direct DFT sum with a Hann window.
inline double tone_power(const std::vector<double>& x, std::size_t begin, std::size_t len, double freq,
                         double rate) {
  std::complex<double> acc = 0;
  for (std::size_t n = 0; n < len; ++n) {
    const double w = 0.5 - 0.5 * std::cos(2 * M_PI * n / (len - 1));
    acc += w * x[begin + n] * std::polar(1.0, -2 * M_PI * freq * n / rate);
  }
  return std::norm(acc);
}

inline double rms(const std::vector<double>& x, std::size_t begin, std::size_t len) {
  double s = 0;
  for (std::size_t i = begin; i < begin + len; ++i) s += x[i] * x[i];
  return std::sqrt(s / len);
}

// True when p lies strictly inside the circumcircle of (a, b, c), with slack.
inline bool in_circumcircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p, long double slack) {
  const long double ax = a.x() - p.x(), ay = a.y() - p.y();
  const long double bx = b.x() - p.x(), by = b.y() - p.y();
  const long double cx = c.x() - p.x(), cy = c.y() - p.y();
  const long double det = (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay) +
                          (cx * cx + cy * cy) * (ax * by - bx * ay);
  const long double orient = (b.x() - a.x()) * (long double)(c.y() - a.y()) -
                             (b.y() - a.y()) * (long double)(c.x() - a.x());
  return (orient > 0 ? det : -det) > slack;
}

// Number of triangle / point pairs violating the empty-circumcircle rule.
inline int circumcircle_violations(const std::vector<Vec2>& pts, const std::vector<empathd::Triangle>& tris,
                                   long double slack = 1e-9L) {
  int bad = 0;
  for (const auto& t : tris) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == t[0] || i == t[1] || i == t[2]) continue;
      if (in_circumcircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[i], slack)) ++bad;
    }
  }
  return bad;
}

// Convex hull vertex count (monotone chain, collinear points excluded).
inline int hull_size(std::vector<Vec2> p) {
  std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  return static_cast<int>(k) - 1;
}

// Foreground AND NOT eroded(foreground), cross-shaped element, outside = background.
inline SegmentMask erosion_boundary(const SegmentMask& m) {
  SegmentMask eroded(m.width, m.height), out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      eroded.set(x, y, m.get_or_false(x, y) && m.get_or_false(x - 1, y) && m.get_or_false(x + 1, y) &&
                           m.get_or_false(x, y - 1) && m.get_or_false(x, y + 1));
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) out.set(x, y, m.get(x, y) && !eroded.get(x, y));
  return out;
}

inline SegmentMask filled_rect(int w, int h, int x0, int y0, int rw, int rh) {
  SegmentMask m(w, h);
  for (int y = y0; y < y0 + rh; ++y)
    for (int x = x0; x < x0 + rw; ++x) m.set(x, y, true);
  return m;
}

}  // namespace oracle
