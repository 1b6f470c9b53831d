#include "empathd/segmenter.hpp"

#include <algorithm>
#include <cmath>

#include "empathd/tracker.hpp"

namespace empathd {

bool depth_test(const Vec3& point, const Pose& pose, const PhoneGeometry& geometry, const RoiBox& roi) {
  if (!(point.z() > 0.0)) return false;
  // Bounds are inclusive; the slack absorbs pose round-off at the faces.
  constexpr double kSlack = 1e-9;
  const Vec3 p = to_phone_coords(point, pose);
  return std::abs(p.x()) <= geometry.screenWidth / 2 + roi.planarMargin + kSlack &&
         std::abs(p.y()) <= geometry.screenHeight / 2 + roi.planarMargin + kSlack && p.z() >= -kSlack &&
         p.z() <= roi.depthExtent + kSlack;
}

namespace {

double is_left(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y());
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  constexpr double kEps = 1e-9;
  const Vec2 ab = b - a;
  const double len = ab.norm();
  if (len < kEps) return (p - a).norm() < kEps;
  if (std::abs(is_left(a, b, p)) / len > kEps) return false;
  const double t = (p - a).dot(ab) / (len * len);
  return t >= -kEps && t <= 1.0 + kEps;
}

}  // namespace

bool point_in_border(const std::vector<Vec2>& poly, const Vec2& p) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  int winding = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if (on_segment(a, b, p)) return true;
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && is_left(a, b, p) > 0) ++winding;
    } else if (b.y() <= p.y() && is_left(a, b, p) < 0) {
      --winding;
    }
  }
  return winding != 0;
}

SegmentResult segment_detailed(const RgbdFrame& frame, const Pose& pose, const PhoneGeometry& geometry,
                               const RoiBox& roi, double tau) {
  const CameraIntrinsics& K = frame.intrinsics;
  const int w = K.width, h = K.height;
  SegmentResult r;
  r.mask = SegmentMask(w, h);
  r.branch.assign(static_cast<std::size_t>(w) * h, Branch::kDepth);

  std::vector<Vec2> border;
  try {
    border = project_screen_border(pose, geometry, K);
  } catch (const std::exception&) {
    border.clear();  // screen not visible: every pixel takes the depth branch
  }
  double minX = 0, maxX = -1, minY = 0, maxY = -1;
  if (!border.empty()) {
    minX = maxX = border[0].x();
    minY = maxY = border[0].y();
    for (const auto& p : border) {
      minX = std::min(minX, p.x());
      maxX = std::max(maxX, p.x());
      minY = std::min(minY, p.y());
      maxY = std::max(maxY, p.y());
    }
  }

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      const bool inBorder = u >= minX && u <= maxX && v >= minY && v <= maxY && point_in_border(border, Vec2(u, v));
      bool fg;
      if (inBorder) {
        // Case A: blue-background colour matting.
        fg = color_test(frame.color.pixel(u, v), tau);
        r.branch[idx] = Branch::kColor;
        ++r.colorPixels;
        r.colorForeground += fg;
      } else {
        // Case B: ROI gating on the back-projected point.
        const float d = frame.depth.at(u, v);
        fg = d > 0.f && depth_test(K.backproject(u, v, d), pose, geometry, roi);
        ++r.depthPixels;
        r.depthForeground += fg;
      }
      if (fg) r.mask.bits[idx] = 1;
    }
  }
  return r;
}

SegmentMask segment(const RgbdFrame& frame, const Pose& pose, const PhoneGeometry& geometry, const RoiBox& roi,
                    double tau) {
  return segment_detailed(frame, pose, geometry, roi, tau).mask;
}

Image branch_attribution_image(const SegmentResult& r) {
  Image img(r.mask.width, r.mask.height);
  for (int y = 0; y < r.mask.height; ++y) {
    for (int x = 0; x < r.mask.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * r.mask.width + x;
      const float level = r.mask.bits[i] ? 1.f : 0.3f;
      if (r.branch[i] == Branch::kColor) {
        img.set(x, y, {level, 0.f, 0.f});
      } else {
        img.set(x, y, {0.f, level, 0.f});
      }
    }
  }
  return img;
}

}  // namespace empathd
