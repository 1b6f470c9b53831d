#include <doctest.h>

#include <fstream>
#include <random>

#include "empathd/errors.hpp"
#include "empathd/geometry.hpp"
#include "empathd/image.hpp"
#include "empathd/io.hpp"
#include "empathd/profile.hpp"
#include "tmpdir.hpp"

using namespace empathd;

namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
  Pose p;
  p.rotation = q.toRotationMatrix();
  p.translation = Vec3(u(rng), u(rng), 0.5 + u(rng));
  return p;
}

}  // namespace

TEST_CASE("to_phone_coords of the translation is the origin") {
  std::mt19937_64 rng(3);
  const Pose p = random_pose(rng);
  CHECK(to_phone_coords(p.translation, p).norm() < 1e-12);

  Pose frontal;
  frontal.translation = Vec3(0, 0, 0.3);
  CHECK(to_phone_coords(Vec3(0, 0, 0.3), frontal).norm() == 0.0);
}

TEST_CASE("to_phone_coords inverts the forward transform over random poses") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Pose p = random_pose(rng);
    const Vec3 x(u(rng), u(rng), u(rng));
    // Forward map written out independently of the library.
    const Vec3 cam = p.rotation * x + p.translation;
    worst = std::max(worst, (to_phone_coords(cam, p) - x).norm());
    worst = std::max(worst, (to_phone_coords(from_phone_coords(x, p), p) - x).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("pose algebra keeps rotations orthonormal") {
  std::mt19937_64 rng(5);
  Pose acc = Pose::identity();
  for (int i = 0; i < 200; ++i) acc = acc.compose(random_pose(rng)).inverse();
  const double err = (acc.rotation.transpose() * acc.rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  CHECK(err < 1e-6);
  CHECK(acc.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(acc.valid());
}

TEST_CASE("frontal pose faces the camera") {
  const Pose p = Pose::frontal(Vec3(0, 0, 0.3));
  CHECK(p.valid());
  // Phone +z (toward the viewer) points back at the camera.
  CHECK((p.rotation * Vec3(0, 0, 1)).z() == doctest::Approx(-1.0));
  // Phone +y (up) is image up, which is camera -y.
  CHECK((p.rotation * Vec3(0, 1, 0)).y() == doctest::Approx(-1.0));
}

TEST_CASE("camera intrinsics validation") {
  CameraIntrinsics k;
  CHECK(k.valid());
  k.cx = 640;
  CHECK_FALSE(k.valid());
  CHECK_THROWS_AS(k.validate(), ConfigError);
  CameraIntrinsics z;
  z.fx = 0;
  CHECK_FALSE(z.valid());
}

TEST_CASE("virtual display config invariants") {
  VirtualDisplayConfig d;
  CHECK(d.valid());
  d.magnification = 0.9;
  CHECK_FALSE(d.valid());
  VirtualDisplayConfig square{500, 500, 1.5};
  CHECK_FALSE(square.valid());
}

TEST_CASE("validate_profile") {
  CHECK(validate_profile(ImpairmentProfile{}).empty());

  ImpairmentProfile bad;
  bad.filters.push_back(GlaucomaParams{0.8, 0.5, 3.0, std::nullopt});
  const auto v = validate_profile(bad);
  REQUIRE(v.size() == 1);
  CHECK(v[0].message == "innerRadiusFrac < outerRadiusFrac violated");
  CHECK(v[0].filterIndex == 0);

  ImpairmentProfile hearing;
  hearing.filters.push_back(HearingLossParams{2000, 8000, 40});
  CHECK(validate_profile(hearing).empty());

  ImpairmentProfile several;
  several.filters.push_back(CataractParams{2.0, 1.5, std::nullopt});
  several.filters.push_back(TremorParams{0.0, 2.0});
  several.filters.push_back(HearingLossParams{8000, 2000, -1});
  const auto vs = validate_profile(several);
  CHECK(vs.size() >= 4);
  CHECK(vs.front().filterIndex == 0);
  CHECK(vs.back().filterIndex == 2);
}

TEST_CASE("profile JSON round trip and severity mapping") {
  ImpairmentProfile p;
  p.filters.push_back(GlaucomaParams{0.2, 0.6, 2.5, std::nullopt});
  p.filters.push_back(CataractParams{3.0, 0.5, std::nullopt});
  p.filters.push_back(TremorParams{4.0, 2.0});
  p.filters.push_back(HearingLossParams{2000, 8000, 35});
  CHECK(profile_from_json(profile_to_json(p)) == p);

  const auto j = nlohmann::json::parse(R"({"filters":[{"type":"Glaucoma","severity":1.0},{"type":"Cataract","severity":0.5}]})");
  const ImpairmentProfile s = profile_from_json(j);
  const auto& g = std::get<GlaucomaParams>(s.filters[0]);
  CHECK(g.innerRadiusFrac == doctest::Approx(0.05));
  CHECK(g.outerRadiusFrac == doctest::Approx(0.30));
  const auto& c = std::get<CataractParams>(s.filters[1]);
  CHECK(c.blurSigmaPx == doctest::Approx(4.0));
  CHECK(c.contrastFactor == doctest::Approx(0.7));

  CHECK_THROWS_AS(profile_from_json(nlohmann::json::parse(R"({"filters":[{"type":"Sepia"}]})")), ConfigError);
}

TEST_CASE("rgbd sequence loading") {
  testutil::TempDir dir;
  CHECK(load_rgbd_sequence(dir.str()).empty());

  RgbdFrame f;
  f.color = Image(640, 480, {0.2f, 0.4f, 0.6f});
  f.depth = Plane(640, 480, 0.f);
  f.depth.at(10, 20) = 0.300f;
  f.depth.at(11, 20) = 1.234f;
  write_intrinsics(f.intrinsics, dir.str());
  write_rgbd_frame(f, dir.str(), 0);

  const auto frames = load_rgbd_sequence(dir.str());
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].color.width == 640);
  CHECK(frames[0].color.height == 480);
  CHECK(frames[0].depth.at(10, 20) == 300.0f / 1000.0f);
  CHECK(frames[0].depth.at(11, 20) == doctest::Approx(1.234).epsilon(1e-6));
  CHECK(frames[0].depth.at(0, 0) == 0.0f);
  CHECK(frames[0].color.pixel(3, 3)[1] == doctest::Approx(quantize_channel(0.4f)));

  SUBCASE("missing partner image names the file") {
    std::filesystem::copy_file(dir.file("000000.color.png"), dir.file("000001.color.png"));
    try {
      load_rgbd_sequence(dir.str());
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("000001") != std::string::npos);
    }
  }
  SUBCASE("missing intrinsics is a config error") {
    std::filesystem::remove(dir.file("intrinsics.json"));
    CHECK_THROWS_AS(load_rgbd_sequence(dir.str()), ConfigError);
  }
  SUBCASE("odd-sized image is a format error") {
    write_png(Image(320, 240), dir.file("000000.color.png"));
    CHECK_THROWS_AS(load_rgbd_sequence(dir.str()), FormatError);
  }
}

TEST_CASE("depth png stores millimetres") {
  testutil::TempDir dir;
  Plane d(4, 2, 0.f);
  d.at(1, 1) = 0.3f;
  write_depth_png(d, dir.file("d.png"));
  const Plane r = read_depth_png(dir.file("d.png"));
  CHECK(r.at(1, 1) == doctest::Approx(0.3));
  CHECK(r.at(0, 0) == 0.f);
}

TEST_CASE("core types survive serialisation") {
  std::mt19937_64 rng(9);
  const Pose p = random_pose(rng);
  CHECK(pose_from_json(pose_to_json(p)) == p);

  CameraIntrinsics k{512.5, 498.25, 300.5, 211.75, 600, 420};
  CHECK(intrinsics_from_json(intrinsics_to_json(k)) == k);

  const PhoneGeometry g = PhoneGeometry::default_layout();
  CHECK(geometry_from_json(geometry_to_json(g)) == g);

  testutil::TempDir dir;
  Image img(7, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) img.set(x, y, {quantize_channel(x / 7.f), quantize_channel(y / 5.f), 0.5f});
  img = decode_png_rgb(encode_png(img));
  write_png(img, dir.file("i.png"));
  CHECK(read_png_rgb(dir.file("i.png")) == img);
}

TEST_CASE("default geometry is well formed") {
  const PhoneGeometry g = PhoneGeometry::default_layout();
  CHECK(g.markers.size() == 8);
  CHECK_NOTHROW(g.validate());
  for (const auto& m : g.markers) {
    for (const auto& c : m.corners) CHECK(c.z() == 0.0);
  }
  PhoneGeometry dup = g;
  dup.markers[1].id = dup.markers[0].id;
  CHECK_THROWS_AS(dup.validate(), ConfigError);
}

TEST_CASE("mask RLE round trip") {
  std::mt19937_64 rng(1);
  SegmentMask m(37, 23);
  for (auto& b : m.bits) b = (rng() % 3 == 0);
  CHECK(mask_from_rle(mask_to_rle(m), 37, 23) == m);
  SegmentMask lead(3, 1);
  lead.set(0, 0, true);
  CHECK(mask_to_rle(lead).front() == 0u);
}

TEST_CASE("image digest sees single-pixel changes") {
  Image a(20, 10, {0.1f, 0.2f, 0.3f});
  Image b = a;
  CHECK(image_digest(a) == image_digest(b));
  b.at(19, 9)[2] = 0.31f;
  CHECK(image_digest(a) != image_digest(b));
  CHECK(image_digest(Image(10, 20)) != image_digest(Image(20, 10)));
}
