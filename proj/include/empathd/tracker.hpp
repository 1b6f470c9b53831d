#pragma once

#include <array>
#include <string>
#include <vector>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"

namespace empathd {

struct MarkerDetection {
  int markerId = -1;
  // Top-left first, clockwise in the marker frame.
  std::array<Vec2, 4> corners;
};

struct PoseEstimate {
  Pose pose;
  double rmsResidualPx = 0.0;
  int correspondences = 0;
  int iterations = 0;
};

struct DetectorOptions {
  int minComponentPixels = 16;
  double minQuadArea = 16.0;
  // Inner bits may differ from the dictionary entry by at most this many cells.
  int maxBitErrors = 1;
};

// Blue-ink markers on a cyan screen. Partially occluded markers are rejected.
std::vector<MarkerDetection> detect_markers(const Image& color, const PhoneGeometry& geometry,
                                            const DetectorOptions& options = {});

// Planar pose from detected marker corners: normalised DLT homography,
// decomposition against the intrinsics, then Gauss-Newton refinement.
// Throws EstimationError for fewer than 4 corners or a degenerate layout.
PoseEstimate estimate_pose(const std::vector<MarkerDetection>& detections, const PhoneGeometry& geometry,
                           const CameraIntrinsics& intrinsics);

PoseEstimate estimate_pose_from_points(const std::vector<Vec3>& objectPoints, const std::vector<Vec2>& imagePoints,
                                       const CameraIntrinsics& intrinsics);

double rms_reprojection_error(const Pose& pose, const std::vector<Vec3>& objectPoints,
                              const std::vector<Vec2>& imagePoints, const CameraIntrinsics& intrinsics);

// Projected screen rectangle, clipped to the image extent. Throws GeometryError
// when any screen corner is behind the camera.
std::vector<Vec2> project_screen_border(const Pose& pose, const PhoneGeometry& geometry,
                                        const CameraIntrinsics& intrinsics);

// Debug overlay: detected quads drawn over the colour image.
void write_detection_overlay(const Image& color, const std::vector<MarkerDetection>& detections,
                             const std::string& path);

}  // namespace empathd
