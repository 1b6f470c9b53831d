#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace empathd {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole model. Pixel centres sit at integer coordinates:
// u = fx * X / Z + cx, v = fy * Y / Z + cy (camera x right, y down, z forward).
struct CameraIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  bool valid() const;
  void validate() const;  // throws ConfigError

  Vec2 project(const Vec3& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }
  // Ray through pixel (u, v) with unit z component.
  Vec3 ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }
  Vec3 backproject(double u, double v, double depth) const { return ray(u, v) * depth; }

  bool operator==(const CameraIntrinsics&) const = default;
};

// Phone pose relative to the camera: p_cam = rotation * p_phone + translation.
struct Pose {
  Vec3 translation = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  static Pose identity() { return {}; }
  // Screen facing the camera at the given translation (phone z toward the viewer).
  static Pose frontal(const Vec3& t);
  // Frontal pose rotated by yaw about the camera y axis, then pitch about x.
  static Pose from_yaw_pitch_roll(const Vec3& t, double yawRad, double pitchRad, double rollRad);

  bool valid(double tol = 1e-6) const;
  void validate() const;  // throws GeometryError

  Pose inverse() const;
  Pose compose(const Pose& inner) const;  // this ∘ inner
  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  // Re-project the rotation onto SO(3).
  Pose orthonormalized() const;

  bool operator==(const Pose& o) const {
    return translation == o.translation && rotation == o.rotation;
  }
};

// R⁻¹ · (point − T)
Vec3 to_phone_coords(const Vec3& point, const Pose& pose);
Vec3 from_phone_coords(const Vec3& point, const Pose& pose);

double rotation_angle_between(const Mat3& a, const Mat3& b);

inline constexpr int kMarkerDataBits = 4;                     // inner bit grid is 4×4
inline constexpr int kMarkerCells = kMarkerDataBits + 2;      // one-cell ink border
using MarkerBits = std::array<std::uint8_t, kMarkerDataBits * kMarkerDataBits>;

struct MarkerSpec {
  int id = 0;
  // Corners in phone-screen coordinates (z = 0), order: top-left, top-right,
  // bottom-right, bottom-left as seen from the front of the screen.
  std::array<Vec3, 4> corners;
  MarkerBits bits{};  // row-major, row 0 at the marker's top edge; 1 = ink

  bool operator==(const MarkerSpec&) const = default;
};

struct PhoneGeometry {
  double screenWidth = 0.07;
  double screenHeight = 0.14;
  std::vector<MarkerSpec> markers;

  // Grid of square markers covering the screen; cell-centred with a margin.
  static PhoneGeometry grid(double screenWidth, double screenHeight, int cols, int rows,
                            double fillFraction = 0.74);
  static PhoneGeometry default_layout() { return grid(0.07, 0.14, 2, 4); }

  const MarkerSpec* find(int id) const;
  std::array<Vec3, 4> screen_corners() const;  // TL, TR, BR, BL
  void validate() const;                        // throws ConfigError

  bool operator==(const PhoneGeometry&) const = default;
};

// Deterministic set of rotation-distinct 4×4 marker patterns.
std::vector<MarkerBits> marker_dictionary(int count);
MarkerBits rotate_bits_cw(const MarkerBits& bits);
int hamming(const MarkerBits& a, const MarkerBits& b);

// Hand region of interest around the phone, in phone coordinates.
struct RoiBox {
  double planarMargin = 0.06;
  double depthExtent = 0.02;

  bool valid() const { return planarMargin > 0.0 && depthExtent > 0.0; }
  bool operator==(const RoiBox&) const = default;
};

struct VirtualDisplayConfig {
  int streamWidth = 485;
  int streamHeight = 863;
  double magnification = 1.5;

  bool valid() const;
  bool operator==(const VirtualDisplayConfig&) const = default;
};

}  // namespace empathd
