#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "empathd/errors.hpp"
#include "empathd/homography.hpp"
#include "empathd/scenegen.hpp"
#include "empathd/tracker.hpp"

using namespace empathd;

namespace {

Vec2 project(const CameraIntrinsics& k, const Pose& pose, const Vec3& phone) {
  const Vec3 p = pose.rotation * phone + pose.translation;
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

std::vector<MarkerDetection> synthetic_detections(const PhoneGeometry& g, const CameraIntrinsics& k, const Pose& pose) {
  std::vector<MarkerDetection> out;
  for (const auto& m : g.markers) {
    MarkerDetection d;
    d.markerId = m.id;
    for (int i = 0; i < 4; ++i) d.corners[i] = project(k, pose, m.corners[i]);
    out.push_back(d);
  }
  return out;
}

double angle_deg(const Mat3& a, const Mat3& b) { return rotation_angle_between(a, b) * 180.0 / M_PI; }

}  // namespace

TEST_CASE("uniform frame has no markers") {
  const Image flat(640, 480, {0.4f, 0.4f, 0.4f});
  CHECK(detect_markers(flat, PhoneGeometry::default_layout()).empty());
  const Image cyan(640, 480, {0.f, 1.f, 1.f});
  CHECK(detect_markers(cyan, PhoneGeometry::default_layout()).empty());
}

TEST_CASE("frontal scene: every marker found at its true corners") {
  SceneSpec spec;
  const RenderResult r = render(spec);
  const auto dets = detect_markers(r.frame.color, spec.phoneGeometry);
  REQUIRE(dets.size() == spec.phoneGeometry.markers.size());
  std::set<int> ids;
  for (const auto& d : dets) {
    ids.insert(d.markerId);
    const auto& truth = r.truth.markerCornersPx.at(d.markerId);
    for (int i = 0; i < 4; ++i) CHECK((d.corners[i] - truth[i]).norm() < 0.5);
  }
  CHECK(ids.size() == dets.size());
}

TEST_CASE("occluding hand hides exactly the covered markers") {
  SceneSpec spec;
  HandSpec hand;
  hand.outline = {{-0.045, 0.036}, {0.045, 0.036}, {0.045, 0.08}, {-0.045, 0.08}};
  hand.textureAmplitude = 0;
  spec.handSpec = hand;
  const RenderResult r = render(spec);

  std::set<int> expected;
  for (const auto& m : spec.phoneGeometry.markers) {
    double top = -1;
    for (const auto& c : m.corners) top = std::max(top, c.y());
    if (top < 0.036) expected.insert(m.id);
  }
  REQUIRE(expected.size() == spec.phoneGeometry.markers.size() - 2);

  std::set<int> found;
  for (const auto& d : detect_markers(r.frame.color, spec.phoneGeometry)) found.insert(d.markerId);
  CHECK(found == expected);
}

TEST_CASE("pose from synthesised corners") {
  const PhoneGeometry g = PhoneGeometry::default_layout();
  const CameraIntrinsics k;
  const Pose truth = Pose::frontal(Vec3(0, 0, 0.30));
  const PoseEstimate e = estimate_pose(synthetic_detections(g, k, truth), g, k);
  CHECK((e.pose.translation - truth.translation).norm() < 1e-4);
  CHECK(rotation_angle_between(e.pose.rotation, truth.rotation) < 1e-3);
  CHECK(e.rmsResidualPx < 1e-6);
  CHECK(e.pose.valid());
}

TEST_CASE("fewer than four corners cannot be solved") {
  const CameraIntrinsics k;
  const Pose truth = Pose::frontal(Vec3(0, 0, 0.30));
  std::vector<Vec3> obj{{0, 0, 0}, {0.02, 0, 0}, {0, 0.02, 0}};
  std::vector<Vec2> img;
  for (const auto& o : obj) img.push_back(project(k, truth, o));
  CHECK_THROWS_AS(estimate_pose_from_points(obj, img, k), EstimationError);
  CHECK_THROWS_AS(estimate_pose({}, PhoneGeometry::default_layout(), k), EstimationError);

  std::vector<Vec3> line{{0, 0, 0}, {0.01, 0, 0}, {0.02, 0, 0}, {0.03, 0, 0}};
  std::vector<Vec2> lineImg;
  for (const auto& o : line) lineImg.push_back(project(k, truth, o));
  CHECK_THROWS_AS(estimate_pose_from_points(line, lineImg, k), EstimationError);
}

TEST_CASE("pose is invariant to detection order") {
  const PhoneGeometry g = PhoneGeometry::default_layout();
  const CameraIntrinsics k;
  const Pose truth = Pose::from_yaw_pitch_roll(Vec3(0.01, 0.02, 0.33), 0.4, -0.2, 0.1);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0, 0.3);
  auto dets = synthetic_detections(g, k, truth);
  for (auto& d : dets)
    for (auto& c : d.corners) c += Vec2(noise(rng), noise(rng));
  const Pose ref = estimate_pose(dets, g, k).pose;
  for (int i = 0; i < 10; ++i) {
    std::shuffle(dets.begin(), dets.end(), rng);
    const Pose p = estimate_pose(dets, g, k).pose;
    CHECK((p.translation - ref.translation).norm() < 1e-6);
    CHECK(rotation_angle_between(p.rotation, ref.rotation) < 1e-6);
  }
}

TEST_CASE("estimate is at least as good as the truth on noisy corners") {
  const PhoneGeometry g = PhoneGeometry::default_layout();
  const CameraIntrinsics k;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0, 0.7);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose truth = Pose::from_yaw_pitch_roll(Vec3(0.0, 0.0, 0.27 + 0.005 * trial), 0.5 * std::sin(trial), 0.2, 0);
    std::vector<Vec3> obj;
    std::vector<Vec2> img;
    auto dets = synthetic_detections(g, k, truth);
    for (auto& d : dets) {
      for (int i = 0; i < 4; ++i) {
        d.corners[i] += Vec2(noise(rng), noise(rng));
        obj.push_back(g.find(d.markerId)->corners[i]);
        img.push_back(d.corners[i]);
      }
    }
    const PoseEstimate e = estimate_pose(dets, g, k);
    CHECK(rms_reprojection_error(e.pose, obj, img, k) <= rms_reprojection_error(truth, obj, img, k) + 1e-3);
  }
}

TEST_CASE("corner noise never improves the median translation error") {
  const PhoneGeometry g = PhoneGeometry::default_layout();
  const CameraIntrinsics k;
  std::vector<double> medians;
  for (double sigma : {0.0, 0.5, 1.0}) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> noise(0, 1);
    std::vector<double> errs;
    for (int trial = 0; trial < 120; ++trial) {
      const Pose truth = Pose::from_yaw_pitch_roll(Vec3(0.01, -0.01, 0.30), 0.3, 0.1, 0.0);
      auto dets = synthetic_detections(g, k, truth);
      for (auto& d : dets)
        for (auto& c : d.corners) c += sigma * Vec2(noise(rng), noise(rng));
      errs.push_back((estimate_pose(dets, g, k).pose.translation - truth.translation).norm());
    }
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
    medians.push_back(errs[errs.size() / 2]);
  }
  CHECK(medians[0] <= medians[1]);
  CHECK(medians[1] <= medians[2]);
}

TEST_CASE("rendered frame gives a noiseless-grade pose") {
  SceneSpec spec;
  spec.phonePose = Pose::from_yaw_pitch_roll(Vec3(0.005, -0.01, 0.31), 0.2, 0.1, 0.0);
  const RenderResult r = render(spec);
  const PoseEstimate e = estimate_pose(detect_markers(r.frame.color, spec.phoneGeometry), spec.phoneGeometry,
                                       spec.intrinsics);
  CHECK((e.pose.translation - spec.phonePose.translation).norm() <= 1e-3);
  CHECK(angle_deg(e.pose.rotation, spec.phonePose.rotation) <= 0.1);
}

TEST_CASE("screen border projection") {
  const PhoneGeometry g = PhoneGeometry::default_layout();
  const CameraIntrinsics k;
  const auto front = project_screen_border(Pose::frontal(Vec3(0, 0, 0.30)), g, k);
  REQUIRE(front.size() == 4);
  double minX = 1e9, maxX = -1e9, minY = 1e9, maxY = -1e9, sx = 0, sy = 0;
  for (const auto& p : front) {
    minX = std::min(minX, p.x());
    maxX = std::max(maxX, p.x());
    minY = std::min(minY, p.y());
    maxY = std::max(maxY, p.y());
    sx += p.x() / 4;
    sy += p.y() / 4;
  }
  CHECK(maxX - minX == doctest::Approx(140).epsilon(1.0 / 140));
  CHECK(sx == doctest::Approx(k.cx));
  CHECK(sy == doctest::Approx(k.cy));
  for (const auto& p : front) {
    CHECK((std::abs(p.x() - minX) < 1e-9 || std::abs(p.x() - maxX) < 1e-9));
    CHECK((std::abs(p.y() - minY) < 1e-9 || std::abs(p.y() - maxY) < 1e-9));
  }

  const Pose yawed = Pose::from_yaw_pitch_roll(Vec3(0, 0, 0.30), M_PI / 4, 0, 0);
  const auto trap = project_screen_border(yawed, g, k);
  REQUIRE(trap.size() == 4);
  const auto corners = g.screen_corners();
  for (int i = 0; i < 4; ++i) CHECK((trap[i] - project(k, yawed, corners[i])).norm() < 0.5);
  const double leftH = std::abs(trap[3].y() - trap[0].y());
  const double rightH = std::abs(trap[2].y() - trap[1].y());
  CHECK(std::abs(leftH - rightH) > 5.0);

  CHECK_THROWS_AS(project_screen_border(Pose::frontal(Vec3(0, 0, -0.3)), g, k), GeometryError);
}

TEST_CASE("border is clipped to the image") {
  const PhoneGeometry g = PhoneGeometry::default_layout();
  const CameraIntrinsics k;
  const auto poly = project_screen_border(Pose::frontal(Vec3(0.1, 0, 0.30)), g, k);
  REQUIRE(!poly.empty());
  for (const auto& p : poly) {
    CHECK(p.x() >= -0.5);
    CHECK(p.x() <= k.width - 0.5);
  }
}

TEST_CASE("homography from four points is exact") {
  const std::array<Vec2, 4> src{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  const std::array<Vec2, 4> dst{Vec2(10, 12), Vec2(50, 8), Vec2(55, 60), Vec2(6, 40)};
  const Mat3 H = homography_from_4(src, dst);
  for (int i = 0; i < 4; ++i) CHECK((apply_homography(H, src[i]) - dst[i]).norm() < 1e-9);
  const Mat3 L = homography_dlt({src.begin(), src.end()}, {dst.begin(), dst.end()});
  for (int i = 0; i < 4; ++i) CHECK((apply_homography(L, src[i]) - dst[i]).norm() < 1e-6);
}

TEST_CASE("marker dictionary is rotation distinct") {
  const auto dict = marker_dictionary(8);
  for (std::size_t a = 0; a < dict.size(); ++a) {
    MarkerBits r = dict[a];
    for (int rot = 1; rot < 4; ++rot) {
      r = rotate_bits_cw(r);
      CHECK(hamming(r, dict[a]) > 0);
    }
    for (std::size_t b = a + 1; b < dict.size(); ++b) {
      MarkerBits rb = dict[b];
      for (int rot = 0; rot < 4; ++rot, rb = rotate_bits_cw(rb)) CHECK(hamming(dict[a], rb) >= 3);
    }
  }
}
