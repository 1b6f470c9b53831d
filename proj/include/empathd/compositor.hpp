#pragma once

#include <optional>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"
#include "empathd/meshgen.hpp"

namespace empathd {

struct CompositorConfig {
  CameraIntrinsics view;
  PhoneGeometry geometry = PhoneGeometry::default_layout();
  VirtualDisplayConfig display;
  double eyeOffset = kDefaultEyeOffset;
  double bezelMargin = 0.005;  // metres around the screen, before magnification
  Rgb background{0.18f, 0.19f, 0.21f};
  Rgb bezel{0.02f, 0.02f, 0.02f};
};

// Pose of the rendered phone: tracked pose pushed back by the eye offset.
Pose virtual_phone_pose(const Pose& tracked, double eyeOffset);

// Hand vertices scaled about the virtual phone centre by the magnification.
HandMesh magnify_hand(const HandMesh& mesh, const Pose& virtualPhone, double magnification);

// Screen-texture coordinate (column, row in the stream image, continuous)
// seen through pixel (x, y), or nullopt off the screen.
std::optional<Vec2> screen_lookup(const CompositorConfig& cfg, const Pose& virtualPhone, int x, int y);

struct CompositeLayers {
  SegmentMask screen;  // pixels showing the app screen
  SegmentMask hand;    // pixels showing the hand
};

// Scene composition: app stream on the magnified virtual phone, then the
// rasterised hand where it is nearer than the phone. Without a pose only the
// background is drawn.
Image composite(const CompositorConfig& cfg, const Image& stream, const std::optional<Pose>& trackedPose,
                const HandMesh* hand, const Image* handSource, CompositeLayers* layers = nullptr);

}  // namespace empathd
