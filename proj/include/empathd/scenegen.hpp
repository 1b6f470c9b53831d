#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"

namespace empathd {

struct HandSpec {
  std::vector<Vec2> outline;  // simple polygon in phone coordinates (metres)
  double hoverHeight = 0.01;  // metres above the screen plane
  Rgb skinColor{0.80f, 0.40f, 0.38f};
  // Procedural shading variation so meshes carry texture; 0 = flat colour.
  double textureAmplitude = 0.08;

  // Finger-like blob: a rounded rectangle of the given size centred at (cx, cy).
  static HandSpec finger(double cx, double cy, double width, double length, double hover = 0.01);
};

struct SceneSpec {
  Pose phonePose = Pose::frontal(Vec3(0, 0, 0.30));
  PhoneGeometry phoneGeometry = PhoneGeometry::default_layout();
  std::optional<HandSpec> handSpec;
  CameraIntrinsics intrinsics;
  Rgb backgroundColor{0.42f, 0.44f, 0.40f};
  double backgroundDepth = 1.5;  // metres; 0 leaves background depth invalid

  // Zero depth on screen pixels (glossy-surface sensor failure).
  bool glossyScreen = false;
  double depthNoiseSigma = 0.0;  // metres, Gaussian
  std::uint64_t seed = 1;
  std::int64_t timestampUs = 0;
};

struct GroundTruth {
  Pose pose;
  SegmentMask handMask;
  std::map<int, std::array<Vec2, 4>> markerCornersPx;  // TL, TR, BR, BL
};

struct RenderResult {
  RgbdFrame frame;
  GroundTruth truth;
};

// Throws GeometryError when the phone is behind the camera or projects to no area.
RenderResult render(const SceneSpec& spec);

// Writes NNNNNN.color.png/.depth.png, intrinsics.json and truth.jsonl.
void render_sequence(const std::vector<SceneSpec>& specs, const std::string& outDir);

nlohmann::json truth_to_json(const GroundTruth& t, int frameIndex);
GroundTruth truth_from_json(const nlohmann::json& j, int width, int height);
std::vector<GroundTruth> load_truth(const std::string& directory, int width, int height);

bool polygon_is_simple(const std::vector<Vec2>& poly);
bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p);

// Scene configuration file (scene.json) -> list of frame specs.
std::vector<SceneSpec> scene_specs_from_json(const nlohmann::json& j);
std::vector<SceneSpec> load_scene_config(const std::string& path);

// Orbit: yaw swept linearly across [yawMin, yawMax], distance across [dMin, dMax].
std::vector<SceneSpec> orbit_sequence(const SceneSpec& base, int count, double yawMinDeg, double yawMaxDeg,
                                      double distMin, double distMax);

}  // namespace empathd
