#include <algorithm>

#include "empathd/errors.hpp"
#include "empathd/meshgen.hpp"

namespace empathd {

SegmentMask boundary_mask(const SegmentMask& mask) {
  SegmentMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.get(x, y)) continue;
      const bool interior = mask.get_or_false(x + 1, y) && mask.get_or_false(x - 1, y) &&
                            mask.get_or_false(x, y + 1) && mask.get_or_false(x, y - 1);
      if (!interior) out.set(x, y, true);
    }
  }
  return out;
}

namespace {

// Moore neighbourhood, clockwise on screen (y down) starting at west.
constexpr int kDx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

int direction_of(int dx, int dy) {
  for (int i = 0; i < 8; ++i) {
    if (kDx[i] == dx && kDy[i] == dy) return i;
  }
  return 0;
}

}  // namespace

std::vector<Contour> trace_boundary(const SegmentMask& mask) {
  const SegmentMask boundary = boundary_mask(mask);
  SegmentMask assigned(mask.width, mask.height);
  std::vector<Contour> contours;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(mask.width) * mask.height, 0);
  std::vector<std::size_t> touched;

  for (int sy = 0; sy < mask.height; ++sy) {
    for (int sx = 0; sx < mask.width; ++sx) {
      if (!boundary.get(sx, sy) || assigned.get(sx, sy)) continue;

      // Start with a background 4-neighbour as the backtrack position.
      int backDir = -1;
      for (int d : {0, 2, 4, 6}) {
        if (!mask.get_or_false(sx + kDx[d], sy + kDy[d])) {
          backDir = d;
          break;
        }
      }
      Contour contour;
      auto take = [&](int x, int y) {
        if (boundary.get(x, y) && !assigned.get(x, y)) {
          assigned.set(x, y, true);
          contour.push_back({x, y});
        }
      };
      take(sx, sy);

      // The walk is deterministic in (pixel, backtrack direction), so it
      // ends the first time such a state repeats.
      int cx = sx, cy = sy;
      int bx = sx + kDx[backDir], by = sy + kDy[backDir];
      touched.clear();
      while (true) {
        const int start = direction_of(bx - cx, by - cy);
        const std::size_t idx = static_cast<std::size_t>(cy) * mask.width + cx;
        if (seen[idx] & (1u << start)) break;
        if (seen[idx] == 0) touched.push_back(idx);
        seen[idx] |= static_cast<std::uint8_t>(1u << start);
        // Scan clockwise around the current pixel starting after the backtrack.
        int found = -1;
        int prevX = bx, prevY = by;
        for (int k = 1; k <= 8; ++k) {
          const int d = (start + k) % 8;
          const int nx = cx + kDx[d], ny = cy + kDy[d];
          if (mask.get_or_false(nx, ny)) {
            found = d;
            break;
          }
          prevX = nx;
          prevY = ny;
        }
        if (found < 0) break;  // isolated pixel
        bx = prevX;
        by = prevY;
        cx += kDx[found];
        cy += kDy[found];
        take(cx, cy);
      }
      for (std::size_t idx : touched) seen[idx] = 0;
      contours.push_back(std::move(contour));
    }
  }
  return contours;
}

std::vector<PixelPoint> subsample_interior(const SegmentMask& mask, int stride, const std::vector<Contour>& contours) {
  if (stride < 1) throw ConfigError("subsample stride must be >= 1");
  SegmentMask onContour(mask.width, mask.height);
  std::vector<PixelPoint> out;
  for (const auto& c : contours) {
    for (const auto& p : c) {
      if (!onContour.get(p.x, p.y)) {
        onContour.set(p.x, p.y, true);
        out.push_back(p);
      }
    }
  }
  for (int y = 0; y < mask.height; y += stride) {
    for (int x = 0; x < mask.width; x += stride) {
      if (mask.get(x, y) && !onContour.get(x, y)) out.push_back({x, y});
    }
  }
  return out;
}

std::optional<std::array<int, 4>> mask_bbox(const SegmentMask& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.get(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return std::array<int, 4>{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

}  // namespace empathd
