#include "empathd/compositor.hpp"

#include <algorithm>
#include <cmath>

namespace empathd {

Pose virtual_phone_pose(const Pose& tracked, double eyeOffset) {
  Pose p = tracked;
  p.translation.z() += eyeOffset;
  return p;
}

HandMesh magnify_hand(const HandMesh& mesh, const Pose& virtualPhone, double m) {
  HandMesh out = mesh;
  const Vec3& c = virtualPhone.translation;
  for (auto& v : out.vertices) v = c + m * (v - c);
  return out;
}

namespace {

// Phone-plane point (x right, y up) seen through pixel (x, y).
std::optional<Vec3> phone_hit(const CameraIntrinsics& K, const Pose& phone, int x, int y) {
  const Vec3 d = K.ray(x, y);
  const Vec3 n = phone.rotation.col(2);
  const double denom = n.dot(d);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = n.dot(phone.translation) / denom;
  if (!(t > 0)) return std::nullopt;
  const Vec3 local = phone.rotation.transpose() * (t * d - phone.translation);
  return Vec3(local.x(), local.y(), t * d.z());
}

}  // namespace

std::optional<Vec2> screen_lookup(const CompositorConfig& cfg, const Pose& phone, int x, int y) {
  const auto hit = phone_hit(cfg.view, phone, x, y);
  if (!hit) return std::nullopt;
  const double w = cfg.geometry.screenWidth * cfg.display.magnification;
  const double h = cfg.geometry.screenHeight * cfg.display.magnification;
  if (std::abs(hit->x()) > w / 2 || std::abs(hit->y()) > h / 2) return std::nullopt;
  return Vec2((hit->x() / w + 0.5) * cfg.display.streamWidth, (0.5 - hit->y() / h) * cfg.display.streamHeight);
}

Image composite(const CompositorConfig& cfg, const Image& stream, const std::optional<Pose>& trackedPose,
                const HandMesh* hand, const Image* handSource, CompositeLayers* layers) {
  const CameraIntrinsics& K = cfg.view;
  Image out(K.width, K.height, cfg.background);
  if (layers) {
    layers->screen = SegmentMask(K.width, K.height);
    layers->hand = SegmentMask(K.width, K.height);
  }
  if (!trackedPose) return out;

  const Pose phone = virtual_phone_pose(*trackedPose, cfg.eyeOffset);
  const double m = cfg.display.magnification;
  const double sw = cfg.geometry.screenWidth * m, sh = cfg.geometry.screenHeight * m;
  const double bw = sw / 2 + cfg.bezelMargin * m, bh = sh / 2 + cfg.bezelMargin * m;

  // Pixel bounds of the bezel rectangle.
  int x0 = K.width, y0 = K.height, x1 = -1, y1 = -1;
  bool allInFront = true;
  for (const auto& c : {Vec3(-bw, bh, 0), Vec3(bw, bh, 0), Vec3(bw, -bh, 0), Vec3(-bw, -bh, 0)}) {
    const Vec3 pc = phone.apply(c);
    if (!(pc.z() > 1e-6)) {
      allInFront = false;
      break;
    }
    const Vec2 px = K.project(pc);
    x0 = std::min(x0, static_cast<int>(std::floor(px.x())));
    y0 = std::min(y0, static_cast<int>(std::floor(px.y())));
    x1 = std::max(x1, static_cast<int>(std::ceil(px.x())));
    y1 = std::max(y1, static_cast<int>(std::ceil(px.y())));
  }
  if (!allInFront) {
    x0 = 0;
    y0 = 0;
    x1 = K.width - 1;
    y1 = K.height - 1;
  }
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, K.width - 1);
  y1 = std::min(y1, K.height - 1);

  Plane phoneDepth(K.width, K.height, 0.f);
  const bool haveStream = !stream.empty();
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const auto hit = phone_hit(K, phone, x, y);
      if (!hit) continue;
      const double px = hit->x(), py = hit->y();
      if (std::abs(px) > bw || std::abs(py) > bh) continue;
      phoneDepth.at(x, y) = static_cast<float>(hit->z());
      if (std::abs(px) <= sw / 2 && std::abs(py) <= sh / 2 && haveStream) {
        const double u = (px / sw + 0.5) * stream.width;
        const double v = (0.5 - py / sh) * stream.height;
        const int su = std::clamp(static_cast<int>(std::floor(u)), 0, stream.width - 1);
        const int sv = std::clamp(static_cast<int>(std::floor(v)), 0, stream.height - 1);
        std::copy_n(stream.at(su, sv), 3, out.at(x, y));
        if (layers) layers->screen.set(x, y, true);
      } else {
        out.set(x, y, cfg.bezel);
      }
    }
  }

  if (hand && handSource && !hand->empty()) {
    const HandMesh magnified = magnify_hand(*hand, phone, m);
    const Raster r = rasterize(magnified, *handSource, &K);
    for (int y = 0; y < K.height; ++y) {
      for (int x = 0; x < K.width; ++x) {
        if (!r.coverage.get(x, y)) continue;
        const float pd = phoneDepth.at(x, y);
        if (pd > 0.f && r.depth.at(x, y) >= pd) continue;
        std::copy_n(r.color.at(x, y), 3, out.at(x, y));
        if (layers) {
          layers->hand.set(x, y, true);
          layers->screen.set(x, y, false);
        }
      }
    }
  }
  return out;
}

}  // namespace empathd
