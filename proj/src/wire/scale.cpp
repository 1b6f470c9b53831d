#include <algorithm>
#include <cmath>

#include "empathd/errors.hpp"
#include "empathd/wire.hpp"

namespace empathd::wire {

Image resize_bilinear(const Image& image, int width, int height) {
  if (width <= 0 || height <= 0) throw ConfigError("resize target must be positive");
  if (image.empty()) throw FormatError("cannot resize an empty image");
  if (image.width == width && image.height == height) return image;

  Image out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  struct Tap {
    int i0, i1;
    float w;
  };
  auto taps = [](int n, int src, double scale) {
    std::vector<Tap> t(n);
    for (int i = 0; i < n; ++i) {
      const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, src - 1);
      t[i] = {i0, i1, static_cast<float>(s - i0)};
    }
    return t;
  };
  const auto tx = taps(width, image.width, sx);
  const auto ty = taps(height, image.height, sy);
  for (int y = 0; y < height; ++y) {
    const Tap& vy = ty[y];
    for (int x = 0; x < width; ++x) {
      const Tap& vx = tx[x];
      const float* a = image.at(vx.i0, vy.i0);
      const float* b = image.at(vx.i1, vy.i0);
      const float* c = image.at(vx.i0, vy.i1);
      const float* d = image.at(vx.i1, vy.i1);
      float* o = out.at(x, y);
      for (int k = 0; k < 3; ++k) {
        const float top = a[k] + vx.w * (b[k] - a[k]);
        const float bottom = c[k] + vx.w * (d[k] - c[k]);
        o[k] = top + vy.w * (bottom - top);
      }
    }
  }
  return out;
}

ScaleResult scale_display_checked(const Image& image, const VirtualDisplayConfig& cfg) {
  if (!cfg.valid()) throw ConfigError("invalid virtual display configuration");
  ScaleResult r;
  r.upscaled = cfg.streamWidth > image.width || cfg.streamHeight > image.height;
  r.image = resize_bilinear(image, cfg.streamWidth, cfg.streamHeight);
  return r;
}

Image scale_display(const Image& image, const VirtualDisplayConfig& cfg) { return scale_display_checked(image, cfg).image; }

}  // namespace empathd::wire
