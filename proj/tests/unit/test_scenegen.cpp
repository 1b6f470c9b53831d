#include <doctest.h>

#include <fstream>

#include "empathd/errors.hpp"
#include "empathd/io.hpp"
#include "empathd/scenegen.hpp"
#include "tmpdir.hpp"

using namespace empathd;

namespace {

// Camera depth of the plane lying hover metres above the screen, along pixel (u, v).
double plane_depth(const Pose& pose, const CameraIntrinsics& k, double u, double v, double hover) {
  const Vec3 n = pose.rotation.col(2);
  const Vec3 p0 = pose.translation + n * hover;
  const Vec3 ray((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  return n.dot(p0) / n.dot(ray);
}

Vec2 project(const CameraIntrinsics& k, const Vec3& p) { return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy}; }

}  // namespace

TEST_CASE("scene without a hand has an empty truth mask") {
  SceneSpec spec;
  const RenderResult r = render(spec);
  CHECK(r.truth.handMask.count() == 0);
  CHECK(r.frame.color.width == 640);
  CHECK(r.frame.depth.height == 480);
  CHECK_NOTHROW(r.frame.validate());
}

TEST_CASE("pinhole arithmetic of the frontal screen") {
  SceneSpec spec;
  spec.phonePose = Pose::frontal(Vec3(0, 0, 0.30));
  const RenderResult r = render(spec);
  const auto& k = spec.intrinsics;
  const auto corners = spec.phoneGeometry.screen_corners();
  const Vec2 tl = project(k, from_phone_coords(corners[0], spec.phonePose));
  const Vec2 br = project(k, from_phone_coords(corners[2], spec.phonePose));
  CHECK(br.x() - tl.x() == doctest::Approx(140.0));
  CHECK((tl.x() + br.x()) / 2 == doctest::Approx(k.cx));
  CHECK((tl.y() + br.y()) / 2 == doctest::Approx(k.cy));

  const Vec2 m = project(k, from_phone_coords(Vec3(0.02, 0.03, 0), spec.phonePose));
  CHECK(m.x() == doctest::Approx(k.cx + 40));
  CHECK(m.y() == doctest::Approx(k.cy - 60));

  // Rendered screen occupies 140 columns along the centre row.
  int cols = 0;
  for (int x = 0; x < k.width; ++x) {
    if (std::abs(r.frame.depth.at(x, 240) - 0.30f) < 1e-3f) ++cols;
  }
  CHECK(cols >= 139);
  CHECK(cols <= 142);
}

TEST_CASE("truth marker corners are the pinhole projections of the layout") {
  SceneSpec spec;
  spec.phonePose = Pose::from_yaw_pitch_roll(Vec3(0.01, -0.01, 0.32), 0.3, 0.1, 0.05);
  const RenderResult r = render(spec);
  REQUIRE(r.truth.markerCornersPx.size() == spec.phoneGeometry.markers.size());
  for (const auto& m : spec.phoneGeometry.markers) {
    const auto& px = r.truth.markerCornersPx.at(m.id);
    for (int i = 0; i < 4; ++i) {
      const Vec2 expect = project(spec.intrinsics, spec.phonePose.rotation * m.corners[i] + spec.phonePose.translation);
      CHECK((px[i] - expect).norm() < 1e-9);
    }
  }
}

TEST_CASE("hand depth lies on the hover plane and occludes the screen") {
  SceneSpec spec;
  spec.phonePose = Pose::from_yaw_pitch_roll(Vec3(0, 0, 0.30), 0.25, -0.15, 0.0);
  spec.handSpec = HandSpec::finger(0.0, -0.02, 0.02, 0.08, 0.012);
  const RenderResult r = render(spec);
  const auto& mask = r.truth.handMask;
  REQUIRE(mask.count() > 500);
  double worst = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.get(x, y)) continue;
      const double expect = plane_depth(spec.phonePose, spec.intrinsics, x, y, 0.012);
      worst = std::max(worst, std::abs(r.frame.depth.at(x, y) - expect));
    }
  }
  CHECK(worst <= 1e-3 + 1e-6);

  // Hand pixels carry skin colour, not screen or marker colour.
  for (int y = 0; y < mask.height; y += 7) {
    for (int x = 0; x < mask.width; x += 7) {
      if (!mask.get(x, y)) continue;
      const Rgb c = r.frame.color.pixel(x, y);
      CHECK(c[0] > c[2]);
    }
  }
}

TEST_CASE("glossy screen zeroes screen depth but not hand depth") {
  SceneSpec spec;
  spec.handSpec = HandSpec::finger(0.0, 0.0, 0.02, 0.06);
  spec.glossyScreen = true;
  const RenderResult r = render(spec);
  CHECK(r.frame.depth.at(320, 240 + 80) == 0.0f);  // on screen, below the finger
  CHECK(r.frame.depth.at(320, 240) > 0.0f);        // finger
  CHECK(r.frame.depth.at(5, 5) == doctest::Approx(1.5));
}

TEST_CASE("rendering is deterministic") {
  SceneSpec spec;
  spec.handSpec = HandSpec::finger(0.01, 0.0, 0.02, 0.07);
  spec.depthNoiseSigma = 0.002;
  spec.seed = 42;
  const RenderResult a = render(spec);
  const RenderResult b = render(spec);
  CHECK(a.frame == b.frame);
  CHECK(a.truth.handMask == b.truth.handMask);
}

TEST_CASE("geometry errors") {
  SceneSpec behind;
  behind.phonePose = Pose::frontal(Vec3(0, 0, -0.3));
  CHECK_THROWS_AS(render(behind), GeometryError);

  SceneSpec edgeOn;
  edgeOn.phonePose = Pose::from_yaw_pitch_roll(Vec3(0, 0, 0.3), M_PI / 2, 0, 0);
  CHECK_THROWS_AS(render(edgeOn), GeometryError);
}

TEST_CASE("render_sequence writes frames and truth records") {
  testutil::TempDir dir;
  render_sequence({SceneSpec{}}, dir.str());
  CHECK(std::filesystem::exists(dir.file("000000.color.png")));
  CHECK(std::filesystem::exists(dir.file("000000.depth.png")));
  std::ifstream truth(dir.file("truth.jsonl"));
  int lines = 0;
  for (std::string l; std::getline(truth, l);) lines += !l.empty();
  CHECK(lines == 1);

  testutil::TempDir seq;
  std::vector<SceneSpec> specs(10);
  for (int i = 0; i < 10; ++i) {
    specs[i].phonePose = Pose::frontal(Vec3(-0.02 + 0.004 * i, 0.01, 0.28 + 0.01 * i));
    specs[i].handSpec = HandSpec::finger(0.0, -0.03, 0.018, 0.07);
  }
  render_sequence(specs, seq.str());
  CHECK(load_rgbd_sequence(seq.str()).size() == 10);
  const auto truths = load_truth(seq.str(), 640, 480);
  REQUIRE(truths.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(truths[i].pose == specs[i].phonePose);
    CHECK(truths[i].handMask == render(specs[i]).truth.handMask);
  }
}

TEST_CASE("orbit truth re-projects onto its marker corners") {
  SceneSpec base;
  const auto specs = orbit_sequence(base, 13, -30, 30, 0.30, 0.30);
  for (const auto& s : specs) {
    const RenderResult r = render(s);
    const GroundTruth back = truth_from_json(truth_to_json(r.truth, 0), 640, 480);
    for (const auto& m : s.phoneGeometry.markers) {
      const auto it = back.markerCornersPx.find(m.id);
      if (it == back.markerCornersPx.end()) continue;
      for (int i = 0; i < 4; ++i) {
        const Vec2 p = project(s.intrinsics, back.pose.rotation * m.corners[i] + back.pose.translation);
        CHECK((p - it->second[i]).norm() < 0.5);
      }
    }
  }
}

TEST_CASE("polygon helpers") {
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(polygon_is_simple(square));
  CHECK(point_in_polygon(square, {0.5, 0.5}));
  CHECK_FALSE(point_in_polygon(square, {1.5, 0.5}));
  const std::vector<Vec2> bowtie{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  CHECK_FALSE(polygon_is_simple(bowtie));
}

TEST_CASE("scene config expands frames and orbits") {
  const auto j = nlohmann::json::parse(R"({
    "glossyScreen": true,
    "hand": {"finger": {"cx": 0.0, "cy": -0.02}},
    "frames": [{"T": [0, 0, 0.3]}, {"T": [0.01, 0, 0.3], "yawDeg": 10, "handOffset": [0.01, 0]}]
  })");
  const auto specs = scene_specs_from_json(j);
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].glossyScreen);
  CHECK(specs[1].timestampUs == 33333);
  CHECK(specs[1].handSpec->outline[0].x() == doctest::Approx(specs[0].handSpec->outline[0].x() + 0.01));

  const auto orbit = scene_specs_from_json(nlohmann::json::parse(R"({"orbit": {"count": 5}})"));
  CHECK(orbit.size() == 5);
  CHECK_THROWS_AS(scene_specs_from_json(nlohmann::json::object()), ConfigError);
}
