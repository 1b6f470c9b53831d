#pragma once

#include <cstdint>
#include <vector>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"

namespace empathd {

inline constexpr double kDefaultTau = 0.5;

// Skin-over-blue matting score: 1 - B + 0.5 R.
inline double color_score(const Rgb& rgb) { return 1.0 - rgb[2] + 0.5 * rgb[0]; }
inline bool color_test(const Rgb& rgb, double tau) { return color_score(rgb) > tau; }

// Point (camera metres) inside the ROI box around the phone. Zero depth is
// never foreground.
bool depth_test(const Vec3& point, const Pose& pose, const PhoneGeometry& geometry, const RoiBox& roi);

// Winding-number containment with pixels on the border counted inside.
bool point_in_border(const std::vector<Vec2>& polygon, const Vec2& p);

enum class Branch : std::uint8_t { kColor = 1, kDepth = 2 };

struct SegmentResult {
  SegmentMask mask;
  std::vector<Branch> branch;  // per pixel, which case evaluated it
  std::size_t colorPixels = 0;
  std::size_t depthPixels = 0;
  std::size_t colorForeground = 0;
  std::size_t depthForeground = 0;
};

SegmentResult segment_detailed(const RgbdFrame& frame, const Pose& pose, const PhoneGeometry& geometry,
                               const RoiBox& roi = {}, double tau = kDefaultTau);

SegmentMask segment(const RgbdFrame& frame, const Pose& pose, const PhoneGeometry& geometry,
                    const RoiBox& roi = {}, double tau = kDefaultTau);

// Debug output: branch attribution (colour case red, depth case green,
// foreground brightened).
Image branch_attribution_image(const SegmentResult& r);

}  // namespace empathd
