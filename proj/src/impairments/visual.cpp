#include <algorithm>
#include <cmath>
#include <numbers>

#include "empathd/impairments.hpp"

namespace empathd {

double glaucoma_radius(int x, int y, int width, int height) {
  const double cx = width / 2.0, cy = height / 2.0;
  const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
  return std::sqrt((dx * dx + dy * dy) / (cx * cx + cy * cy));
}

double glaucoma_falloff(double r, const GlaucomaParams& p) {
  if (r <= p.innerRadiusFrac) return 1.0;
  if (r >= p.outerRadiusFrac) return 0.0;
  return (p.outerRadiusFrac - r) / (p.outerRadiusFrac - p.innerRadiusFrac);
}

Image apply_glaucoma(const Image& in, const GlaucomaParams& p) {
  const int w = in.width, h = in.height;
  Image out = in;
  // Rows holding ring pixels bound the blur work.
  int ring0 = h, ring1 = 0;
  for (int y = 0; y < h; ++y) {
    const double nearest = glaucoma_radius(w / 2, y, w, h);
    const double farthest = glaucoma_radius(0, y, w, h);
    if (farthest > p.innerRadiusFrac && nearest < p.outerRadiusFrac) {
      ring0 = std::min(ring0, y);
      ring1 = y + 1;
    }
  }
  thread_local Image blurred;
  if (ring0 < ring1) {
    if (blurred.width != w || blurred.height != h) blurred = Image(w, h);
    gaussian_blur_rows(in, p.blurSigmaPx, ring0, ring1, blurred);
  }
  for (int y = 0; y < h; ++y) {
    float* o = out.at(0, y);
    for (int x = 0; x < w; ++x, o += 3) {
      const double r = glaucoma_radius(x, y, w, h);
      if (r <= p.innerRadiusFrac) continue;
      if (r >= p.outerRadiusFrac) {
        o[0] = o[1] = o[2] = 0.f;
        continue;
      }
      const float f = static_cast<float>(glaucoma_falloff(r, p));
      const float* b = blurred.at(x, y);
      for (int c = 0; c < 3; ++c) o[c] = b[c] * f;
    }
  }
  return out;
}

Image apply_cataract(const Image& in, const CataractParams& p) {
  Image out = gaussian_blur(in, p.blurSigmaPx);
  if (p.contrastFactor == 1.0) return out;
  const float c = static_cast<float>(p.contrastFactor);
  for (auto& v : out.data) v = std::clamp((v - 0.5f) * c + 0.5f, 0.f, 1.f);
  return out;
}

Vec3 tremor_offset(const TremorParams& p, double t) {
  const double a = p.amplitudeMm / 1000.0;
  const double phase = 2.0 * std::numbers::pi * p.frequencyHz * t;
  return {a * std::sin(phase), a * std::sin(phase + 2.0 * std::numbers::pi / 3.0), 0.0};
}

HandMesh apply_tremor(const HandMesh& mesh, const TremorParams& p, double t) {
  if (p.amplitudeMm == 0.0) return mesh;
  HandMesh out = mesh;
  const Vec3 d = tremor_offset(p, t);
  for (auto& v : out.vertices) v += d;
  return out;
}

}  // namespace empathd
