#include <algorithm>
#include <cmath>

#include "empathd/io.hpp"
#include "empathd/tracker.hpp"

namespace empathd {

namespace {

void draw_line(Image& img, Vec2 a, Vec2 b, const Rgb& c) {
  const double len = std::max((b - a).norm(), 1.0);
  const int steps = static_cast<int>(std::ceil(len * 2));
  for (int i = 0; i <= steps; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
    const int x = static_cast<int>(std::lround(p.x())), y = static_cast<int>(std::lround(p.y()));
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, c);
  }
}

}  // namespace

void write_detection_overlay(const Image& color, const std::vector<MarkerDetection>& detections,
                             const std::string& path) {
  Image img = color;
  for (const auto& d : detections) {
    for (int i = 0; i < 4; ++i) draw_line(img, d.corners[i], d.corners[(i + 1) % 4], {1.f, 0.2f, 0.f});
    // First corner marked so the canonical order is visible.
    draw_line(img, d.corners[0] - Vec2(3, 3), d.corners[0] + Vec2(3, 3), {1.f, 1.f, 0.f});
    draw_line(img, d.corners[0] - Vec2(3, -3), d.corners[0] + Vec2(3, -3), {1.f, 1.f, 0.f});
  }
  write_png(img, path);
}

}  // namespace empathd
