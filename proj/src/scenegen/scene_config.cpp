#include <cmath>

#include "empathd/errors.hpp"
#include "empathd/io.hpp"
#include "empathd/scenegen.hpp"

using nlohmann::json;

namespace empathd {

namespace {

Rgb rgb_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("colour must be [r,g,b]");
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

std::optional<HandSpec> hand_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  HandSpec h;
  if (j.contains("finger")) {
    const auto& f = j["finger"];
    h = HandSpec::finger(f.value("cx", 0.0), f.value("cy", 0.0), f.value("width", 0.018), f.value("length", 0.08),
                         j.value("hoverHeight", 0.01));
  } else {
    for (const auto& p : j.at("outline")) h.outline.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  h.hoverHeight = j.value("hoverHeight", h.hoverHeight);
  if (j.contains("skinColor")) h.skinColor = rgb_from_json(j["skinColor"]);
  h.textureAmplitude = j.value("textureAmplitude", h.textureAmplitude);
  return h;
}

Pose frame_pose(const json& f) {
  if (f.contains("R")) return pose_from_json(f);
  const auto& t = f.at("T");
  const Vec3 T(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
  const double d2r = M_PI / 180.0;
  return Pose::from_yaw_pitch_roll(T, f.value("yawDeg", 0.0) * d2r, f.value("pitchDeg", 0.0) * d2r,
                                   f.value("rollDeg", 0.0) * d2r);
}

}  // namespace

std::vector<SceneSpec> scene_specs_from_json(const json& j) {
  try {
    SceneSpec base;
    if (j.contains("intrinsics")) base.intrinsics = intrinsics_from_json(j["intrinsics"]);
    if (j.contains("phone")) base.phoneGeometry = geometry_from_json(j["phone"]);
    if (j.contains("background")) base.backgroundColor = rgb_from_json(j["background"]);
    base.backgroundDepth = j.value("backgroundDepth", base.backgroundDepth);
    base.glossyScreen = j.value("glossyScreen", base.glossyScreen);
    base.depthNoiseSigma = j.value("depthNoiseSigma", base.depthNoiseSigma);
    base.seed = j.value("seed", base.seed);
    if (j.contains("hand")) base.handSpec = hand_from_json(j["hand"]);

    std::vector<SceneSpec> specs;
    if (j.contains("orbit")) {
      const auto& o = j["orbit"];
      specs = orbit_sequence(base, o.value("count", 50), o.value("yawMinDeg", -30.0), o.value("yawMaxDeg", 30.0),
                             o.value("distMin", 0.25), o.value("distMax", 0.40));
    } else if (j.contains("frames")) {
      int index = 0;
      for (const auto& f : j["frames"]) {
        SceneSpec s = base;
        s.phonePose = frame_pose(f);
        if (f.contains("hand")) s.handSpec = hand_from_json(f["hand"]);
        if (s.handSpec && f.contains("handOffset")) {
          const Vec2 off(f["handOffset"][0].get<double>(), f["handOffset"][1].get<double>());
          for (auto& p : s.handSpec->outline) p += off;
        }
        s.timestampUs = f.value("timestampUs", static_cast<std::int64_t>(index) * 33333);
        s.seed = base.seed + static_cast<std::uint64_t>(index);
        specs.push_back(std::move(s));
        ++index;
      }
    } else {
      throw ConfigError("scene config needs either 'orbit' or 'frames'");
    }
    return specs;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene config: ") + e.what());
  }
}

std::vector<SceneSpec> load_scene_config(const std::string& path) {
  return scene_specs_from_json(read_json_file(path));
}

}  // namespace empathd
