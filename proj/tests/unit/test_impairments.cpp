#include <doctest.h>

#include <chrono>
#include <random>

#include "empathd/errors.hpp"
#include "empathd/impairments.hpp"
#include "oracles.hpp"
#include "tmpdir.hpp"

using namespace empathd;

namespace {

Image noise_image(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0, 1);
  Image img(w, h);
  for (auto& v : img.data) v = u(rng);
  return img;
}

AudioBuffer tone(double freq, double rate = 48000, std::size_t n = 48000, double amp = 0.5) {
  AudioBuffer a;
  a.sampleRateHz = rate;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.samples[i] = amp * std::sin(2 * M_PI * freq * i / rate);
  return a;
}

double gain_db(double freq, const HearingLossParams& p) {
  const AudioBuffer in = tone(freq);
  const AudioBuffer out = apply_hearing_loss(in, p);
  REQUIRE(out.samples.size() == in.samples.size());
  const std::size_t begin = 8192, len = 16384;
  return 10 * std::log10(oracle::tone_power(out.samples, begin, len, freq, 48000) /
                         oracle::tone_power(in.samples, begin, len, freq, 48000));
}

double radius(int x, int y, int w, int h) {
  const double dx = (x + 0.5) - w / 2.0, dy = (y + 0.5) - h / 2.0;
  return std::sqrt(dx * dx + dy * dy) / std::sqrt(w * w / 4.0 + h * h / 4.0);
}

HandMesh small_mesh() {
  HandMesh m;
  m.vertices = {{0, 0, 0.4}, {0.01, 0, 0.4}, {0, 0.01, 0.4}};
  m.uv = {{1, 1}, {5, 1}, {1, 5}};
  m.triangles = {{0, 1, 2}};
  return m;
}

}  // namespace

TEST_CASE("glaucoma regions") {
  const Image in = noise_image(97, 61, 1);
  const GlaucomaParams p{0.3, 0.8, 2.0, std::nullopt};
  const Image out = apply_glaucoma(in, p);
  CHECK(out.width == in.width);
  CHECK(out.height == in.height);
  CHECK(out.pixel(48, 30) == in.pixel(48, 30));
  CHECK(out.pixel(0, 0) == Rgb{0, 0, 0});
  CHECK(out.pixel(96, 60) == Rgb{0, 0, 0});

  int inner = 0, ring = 0, outer = 0;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const double r = radius(x, y, in.width, in.height);
      if (r <= 0.3) {
        CHECK(out.pixel(x, y) == in.pixel(x, y));
        ++inner;
      } else if (r >= 0.8) {
        CHECK(out.pixel(x, y) == Rgb{0, 0, 0});
        ++outer;
      } else if ((x + y) % 5 == 0) {
        const double w = (0.8 - r) / 0.5;
        for (int c = 0; c < 3; ++c) CHECK(std::abs(out.at(x, y)[c] - oracle::blurred_at(in, x, y, c, 2.0) * w) < 1e-5);
        ++ring;
      }
    }
  }
  CHECK(inner > 0);
  CHECK(ring > 0);
  CHECK(outer > 0);
}

TEST_CASE("glaucoma with both radii at 1 is the identity") {
  const Image in = noise_image(40, 30, 2);
  CHECK(apply_glaucoma(in, GlaucomaParams{1.0, 1.0, 3.0, std::nullopt}) == in);
}

TEST_CASE("cataract") {
  const Image in = noise_image(50, 40, 3);
  CHECK(apply_cataract(in, CataractParams{0.0, 1.0, std::nullopt}) == in);

  const Image grey = apply_cataract(in, CataractParams{2.0, 0.0, std::nullopt});
  for (float v : grey.data) CHECK(v == doctest::Approx(0.5));

  Image impulse(41, 41);
  impulse.set(20, 20, {1, 1, 1});
  impulse.set(2, 3, {0.5f, 0.2f, 0.9f});
  const Image b = apply_cataract(impulse, CataractParams{3.0, 1.0, std::nullopt});
  double worst = 0;
  for (int y = 0; y < 41; ++y)
    for (int x = 0; x < 41; ++x)
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(b.at(x, y)[c] - oracle::blurred_at(impulse, x, y, c, 3.0)));
  CHECK(worst < 1e-4);

  const Image contrast = apply_cataract(in, CataractParams{0.0, 0.4, std::nullopt});
  for (std::size_t i = 0; i < in.data.size(); i += 7) CHECK(contrast.data[i] == doctest::Approx((in.data[i] - 0.5) * 0.4 + 0.5));
}

TEST_CASE("tremor") {
  const TremorParams p{5.0, 4.0};
  const double a = 0.004;
  const Vec3 d0 = tremor_offset(p, 0.0);
  CHECK(d0.x() == doctest::Approx(0.0));
  CHECK(d0.y() == doctest::Approx(a * std::sin(2 * M_PI / 3)));
  CHECK(d0.z() == 0.0);

  const HandMesh m = small_mesh();
  const HandMesh moved = apply_tremor(m, p, 0.0137);
  CHECK(moved.triangles == m.triangles);
  CHECK(moved.uv == m.uv);
  const Vec3 off = tremor_offset(p, 0.0137);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK((moved.vertices[i] - m.vertices[i] - off).norm() < 1e-15);

  const HandMesh still = apply_tremor(m, TremorParams{5.0, 0.0}, 0.3);
  CHECK(still.vertices == m.vertices);

  // One period sampled at 1 kHz.
  const int n = 200;
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = apply_tremor(m, p, i / 1000.0).vertices[0] - m.vertices[0];
    sx += d.x() * d.x();
    sy += d.y() * d.y();
  }
  CHECK(std::sqrt(sx / n) == doctest::Approx(a / std::sqrt(2.0)).epsilon(0.01));
  CHECK(std::sqrt(sy / n) == doctest::Approx(a / std::sqrt(2.0)).epsilon(0.01));
}

TEST_CASE("hearing loss band attenuation") {
  const HearingLossParams p{2000, 8000, 40};
  CHECK(gain_db(4000, p) <= -30.0);
  CHECK(gain_db(5000, p) <= -30.0);
  CHECK(std::abs(gain_db(1000, p)) < 1.0);
  CHECK(std::abs(gain_db(500, p)) < 1.0);
  CHECK(std::abs(gain_db(12000, p)) < 1.0);
  CHECK(std::abs(gain_db(16000, p)) < 1.0);

  const AudioBuffer in = tone(1000);
  const AudioBuffer out = apply_hearing_loss(in, p);
  const double ratio = oracle::rms(out.samples, 4096, 32768) / oracle::rms(in.samples, 4096, 32768);
  CHECK(std::abs(20 * std::log10(ratio)) < 1.0);
}

TEST_CASE("hearing loss edge cases") {
  const HearingLossParams p{2000, 8000, 40};
  AudioBuffer silence;
  silence.samples.assign(5000, 0.0);
  const AudioBuffer s = apply_hearing_loss(silence, p);
  CHECK(s.samples.size() == 5000);
  for (double v : s.samples) CHECK(v == doctest::Approx(0.0));

  AudioBuffer odd = tone(1000, 48000, 1234);
  CHECK(apply_hearing_loss(odd, p).samples.size() == 1234);

  AudioBuffer narrow = tone(1000, 16000, 1000);
  CHECK_THROWS_AS(apply_hearing_loss(narrow, p), ConfigError);
}

TEST_CASE("apply_profile") {
  MediaBundle media;
  media.image = noise_image(60, 40, 4);
  media.mesh = small_mesh();
  media.audio = tone(4000, 48000, 4096);

  const MediaBundle same = apply_profile(media, ImpairmentProfile{}, 0.5);
  CHECK(*same.image == *media.image);
  CHECK(same.mesh->vertices == media.mesh->vertices);
  CHECK(*same.audio == *media.audio);

  ImpairmentProfile hearing;
  hearing.filters.push_back(HearingLossParams{});
  const MediaBundle h = apply_profile(media, hearing, 0.5);
  CHECK(*h.image == *media.image);
  CHECK(h.mesh->vertices == media.mesh->vertices);
  CHECK_FALSE(*h.audio == *media.audio);

  ImpairmentProfile gc, cg;
  gc.filters = {GlaucomaParams{0.2, 0.6, 3.0, std::nullopt}, CataractParams{3.0, 0.6, std::nullopt}};
  cg.filters = {CataractParams{3.0, 0.6, std::nullopt}, GlaucomaParams{0.2, 0.6, 3.0, std::nullopt}};
  CHECK_FALSE(apply_visual_profile(*media.image, gc) == apply_visual_profile(*media.image, cg));

  ImpairmentProfile tremor;
  tremor.filters.push_back(TremorParams{3.0, 2.0});
  const MediaBundle t = apply_profile(media, tremor, 0.1);
  CHECK(*t.image == *media.image);
  CHECK_FALSE(t.mesh->vertices == media.mesh->vertices);
}

TEST_CASE("visual profile throughput at stream resolution") {
  const Image frame = noise_image(485, 863, 6);
  ImpairmentProfile p;
  p.filters = {GlaucomaParams::from_severity(0.5), CataractParams::from_severity(0.5)};
  apply_visual_profile(frame, p);
  const int n = 10;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i) apply_visual_profile(frame, p);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("visual profile fps: " << n / s);
  CHECK(n / s >= 30.0);
}

TEST_CASE("wav round trip") {
  testutil::TempDir dir;
  const AudioBuffer a = tone(440, 44100, 2000, 0.25);
  write_wav(a, dir.file("t.wav"));
  const AudioBuffer b = read_wav(dir.file("t.wav"));
  CHECK(b.sampleRateHz == 44100);
  REQUIRE(b.samples.size() == a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(std::abs(b.samples[i] - a.samples[i]) <= 1.0 / 32767);
}
