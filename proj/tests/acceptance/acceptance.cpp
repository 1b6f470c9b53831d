// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "empathd/errors.hpp"
#include "empathd/impairments.hpp"
#include "empathd/log.hpp"
#include "empathd/meshgen.hpp"
#include "empathd/orchestrator.hpp"
#include "empathd/scenegen.hpp"
#include "empathd/segmenter.hpp"
#include "empathd/tracker.hpp"
#include "empathd/wire.hpp"
#include "message_gen.hpp"
#include "oracles.hpp"

using namespace empathd;
using Seconds = std::chrono::duration<double>;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double elapsed(Clock::time_point t0) { return Seconds(Clock::now() - t0).count(); }

Outcome pose_accuracy() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto specs = orbit_sequence(SceneSpec{}, 50, -30, 30, 0.25, 0.40);
  double worstT = 0, worstR = 0;
  int solved = 0;
  for (const auto& s : specs) {
    const RenderResult r = render(s);
    try {
      const PoseEstimate e = estimate_pose(detect_markers(r.frame.color, s.phoneGeometry), s.phoneGeometry, s.intrinsics);
      worstT = std::max(worstT, (e.pose.translation - r.truth.pose.translation).norm());
      worstR = std::max(worstR, rotation_angle_between(e.pose.rotation, r.truth.pose.rotation) * 180 / M_PI);
      ++solved;
    } catch (const Error& e) {
      o.detail << " frame error: " << e.what();
    }
  }
  const double secs = elapsed(t0);
  o.detail << "frames=" << solved << "/50 maxTransErr=" << worstT * 1000 << "mm maxRotErr=" << worstR
           << "deg runtime=" << secs << "s";
  o.require(solved == 50, "all frames solved");
  o.require(worstT <= 0.005, "translation <= 5 mm");
  o.require(worstR <= 2.0, "rotation <= 2 deg");
  o.require(secs < 30, "runtime < 30 s");
  return o;
}

std::vector<SceneSpec> segmentation_scenes() {
  std::vector<SceneSpec> out;
  for (int i = 0; i < 20; ++i) {
    SceneSpec s;
    s.glossyScreen = true;
    s.seed = 100 + i;
    const double yaw = (-15 + 1.5 * i) * M_PI / 180;
    s.phonePose = Pose::from_yaw_pitch_roll(Vec3(0.0, 0.0, 0.28 + 0.004 * i), yaw, 0.08, 0.0);
    const int kind = i % 3;
    const double jitter = 0.002 * (i / 3);
    if (kind == 0) {
      // Over the screen.
      s.handSpec = HandSpec::finger(-0.01 + jitter, -0.03 + jitter, 0.02, 0.08);
    } else if (kind == 1) {
      // Beside the screen, inside the planar margin.
      s.handSpec = HandSpec::finger(0.065 + jitter / 2, -0.02 + jitter, 0.02, 0.07);
    } else {
      // Straddling the right edge.
      HandSpec h = HandSpec::finger(0.0, 0.0, 0.02, 0.07);
      h.outline = {{0.012 + jitter, -0.05}, {0.07, -0.05}, {0.07, 0.01 + jitter}, {0.012 + jitter, 0.01 + jitter}};
      s.handSpec = h;
    }
    out.push_back(s);
  }
  return out;
}

Outcome segmentation_fidelity() {
  Outcome o;
  const auto scenes = segmentation_scenes();
  std::vector<RenderResult> rendered;
  for (const auto& s : scenes) rendered.push_back(render(s));
  const auto t0 = Clock::now();
  double worst = 1.0;
  int straddleBoth = 0, straddle = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes[i];
    const auto& r = rendered[i];
    const PoseEstimate e = estimate_pose(detect_markers(r.frame.color, s.phoneGeometry), s.phoneGeometry, s.intrinsics);
    const SegmentResult seg = segment_detailed(r.frame, e.pose, s.phoneGeometry);
    worst = std::min(worst, mask_iou(seg.mask, r.truth.handMask));
    if (i % 3 == 2) {
      ++straddle;
      const double fg = static_cast<double>(seg.mask.count());
      straddleBoth += seg.colorForeground >= 0.1 * fg && seg.depthForeground >= 0.1 * fg;
    }
  }
  const double secs = elapsed(t0);
  o.detail << "frames=20 minIoU=" << worst << " straddleBothBranches=" << straddleBoth << "/" << straddle
           << " runtime=" << secs << "s";
  o.require(worst >= 0.95, "IoU >= 0.95");
  o.require(straddleBoth == straddle, "straddling frames use both branches");
  o.require(secs < 10, "runtime < 10 s");
  return o;
}

Outcome subsampling_quality() {
  Outcome o;
  SceneSpec spec;
  spec.handSpec = HandSpec::finger(0.005, -0.02, 0.022, 0.09);
  const RenderResult r = render(spec);
  const SegmentMask& mask = r.truth.handMask;
  auto timed = [&](int stride, Raster& out) {
    MeshOptions m;
    m.stride = stride;
    double best = 1e9;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = Clock::now();
      out = rasterize(build_mesh(mask, r.frame, m), r.frame.color);
      best = std::min(best, elapsed(t0));
    }
    return best;
  };
  Raster fine, coarse;
  const double tFine = timed(1, fine);
  const double tCoarse = timed(32, coarse);
  const auto b = *mask_bbox(mask);
  const double s = ssim(crop(fine.color, b[0], b[1], b[2], b[3]), crop(coarse.color, b[0], b[1], b[2], b[3]));
  o.detail << "ssim=" << s << " stride1=" << tFine * 1000 << "ms stride32=" << tCoarse * 1000
           << "ms speedup=" << tFine / tCoarse << "x";
  o.require(s >= 0.97, "SSIM >= 0.97");
  o.require(tFine / tCoarse >= 5.0, "speedup >= 5x");
  return o;
}

Outcome latency_attribution() {
  Outcome o;
  const auto t0 = Clock::now();
  const Scenario sc = load_scenario(EMPATHD_SOURCE_DIR "/scenarios/paper.json");
  BenchOptions bo;
  bo.touchTrials = std::max(20, sc.trials);
  bo.handTrials = std::max(20, sc.trials);
  const LatencyReport rep = bench(sc, bo);
  const double secs = elapsed(t0);
  const StageStats* touch = rep.find(stage::kEndToEndTouch);
  const StageStats* net = rep.find(stage::kNetwork);
  const StageStats* hand = rep.find(stage::kEndToEndHand);
  o.require(touch && net && hand, "all stages reported");
  if (!touch || !net || !hand) return o;
  o.detail << "endToEndTouch=" << touch->mean << "ms (n=" << touch->count << ") network=" << net->mean
           << "ms endToEndHand=" << hand->mean << "ms (n=" << hand->count << ") runtime=" << secs << "s";
  o.require(touch->count >= 20 && hand->count >= 20, ">= 20 trials");
  o.require(std::abs(touch->mean - 237.7) <= 10, "touch 237.7 +- 10 ms");
  o.require(std::abs(net->mean - 87) <= 5, "network 87 +- 5 ms");
  o.require(std::abs(hand->mean - 117.5) <= 10, "hand 117.5 +- 10 ms");
  o.require(secs < 120, "runtime < 2 min");
  return o;
}

Outcome differential_streaming() {
  Outcome o;
  Scenario sc;
  sc.app = "grid";
  std::uint64_t staticFrames = 0, tapFrames = 0, changes = 0, ups = 0;
  {
    LiveSession::Options lo;
    lo.scenario = sc;
    lo.frameIntervalMs = 50;
    LiveSession s(lo);
    s.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(1000));
    s.orchestrator().wait_frame_acks(1, 3000);
    staticFrames = s.orchestrator().frames_emitted();
    s.stop();
  }
  {
    LiveSession::Options lo;
    lo.scenario = sc;
    LiveSession s(lo);
    s.start();
    GridApp app;
    const auto trace = random_tap_trace(app, 100, 2024, 40, sc.mapping);
    s.agent().play(trace);
    s.agent().wait_done(30000);
    s.orchestrator().wait_touch_events(trace.size(), 10000);
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    tapFrames = s.orchestrator().frames_emitted();
    changes = s.orchestrator().state_changes();
    ups = s.orchestrator().ups_received();
    s.stop();
  }
  o.detail << "staticFrames=" << staticFrames << " taps=" << ups << " stateChanges=" << changes
           << " frames=" << tapFrames;
  o.require(staticFrames == 1, "static run emits exactly 1 frame");
  o.require(ups == 100, "100 taps delivered");
  o.require(tapFrames == 1 + changes, "frames = 1 + state changes");
  return o;
}

Outcome filter_contracts() {
  Outcome o;
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(0, 1);
  Image img(485, 863);
  for (auto& v : img.data) v = u(rng);

  const GlaucomaParams g{0.3, 0.7, 3.0, std::nullopt};
  const Image gl = apply_glaucoma(img, g);
  std::size_t innerDiff = 0, outerLit = 0;
  const double hd = std::hypot(485 / 2.0, 863 / 2.0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double r = std::hypot(x + 0.5 - 485 / 2.0, y + 0.5 - 863 / 2.0) / hd;
      if (r <= g.innerRadiusFrac) innerDiff += !(gl.pixel(x, y) == img.pixel(x, y));
      if (r >= g.outerRadiusFrac) outerLit += !(gl.pixel(x, y) == Rgb{0, 0, 0});
    }
  }
  const bool cataractIdentity = apply_cataract(img, CataractParams{0.0, 1.0, std::nullopt}) == img;

  const HearingLossParams hl{2000, 8000, 40};
  auto level = [&](double f) {
    AudioBuffer a;
    a.samples.resize(48000);
    for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] = 0.5 * std::sin(2 * M_PI * f * i / 48000.0);
    const AudioBuffer b = apply_hearing_loss(a, hl);
    return 10 * std::log10(oracle::tone_power(b.samples, 8192, 16384, f, 48000) /
                           oracle::tone_power(a.samples, 8192, 16384, f, 48000));
  };
  const double at4k = level(4000), at1k = level(1000);
  o.detail << "glaucomaInnerChanged=" << innerDiff << " glaucomaOuterNonBlack=" << outerLit
           << " cataractIdentity=" << cataractIdentity << " gain4k=" << at4k << "dB gain1k=" << at1k << "dB";
  o.require(innerDiff == 0, "glaucoma inner bit-identical");
  o.require(outerLit == 0, "glaucoma outer black");
  o.require(cataractIdentity, "cataract identity");
  o.require(at4k <= -30, "4 kHz attenuated >= 30 dB");
  o.require(std::abs(at1k) <= 1, "1 kHz within 1 dB");
  return o;
}

Outcome protocol() {
  Outcome o;
  gen::MessageGen g(20240);
  int ok = 0;
  for (int i = 0; i < 10000; ++i) {
    const wire::Message m = g.next();
    const auto bytes = wire::encode(m);
    const auto r = wire::decode(bytes);
    if (const auto* d = std::get_if<wire::Decoded>(&r)) {
      ok += d->consumed == bytes.size() && d->message == m && wire::encode(d->message) == bytes;
    }
  }
  auto bytes = wire::encode(wire::TouchEvent{});
  bool badMagic = false;
  auto bad = bytes;
  bad[0] = 0x00;
  try {
    wire::decode(bad);
  } catch (const ProtocolError&) {
    badMagic = true;
  }
  const std::vector<std::uint8_t> header(bytes.begin(), bytes.begin() + 3);
  const auto h = wire::decode(header);
  const bool truncHeader = std::holds_alternative<wire::NeedMore>(h) && std::get<wire::NeedMore>(h).count >= 4;
  const std::vector<std::uint8_t> body(bytes.begin(), bytes.end() - 1);
  const auto t = wire::decode(body);
  const bool truncBody = std::holds_alternative<wire::NeedMore>(t) && std::get<wire::NeedMore>(t).count == 1;
  o.detail << "roundTrips=" << ok << "/10000 badMagic=" << badMagic << " truncatedHeader=" << truncHeader
           << " truncatedPayload=" << truncBody;
  o.require(ok == 10000, "bit-exact round trips");
  o.require(badMagic, "bad magic -> protocol error");
  o.require(truncHeader && truncBody, "truncation -> need more bytes");
  return o;
}

Outcome delaunay_property() {
  Outcome o;
  std::mt19937_64 rng(99);
  int bad = 0, countMismatch = 0;
  for (int set = 0; set < 100; ++set) {
    std::uniform_int_distribution<int> n(3, 250);
    std::uniform_real_distribution<double> u(-100, 100);
    std::vector<Vec2> pts(static_cast<std::size_t>(n(rng)));
    for (auto& p : pts) p = Vec2(u(rng), u(rng));
    const auto tris = delaunay(pts);
    bad += oracle::circumcircle_violations(pts, tris) > 0;
    countMismatch += tris.size() != 2 * pts.size() - 2 - oracle::hull_size(pts);
  }
  o.detail << "sets=100 violatingSets=" << bad << " incompleteSets=" << countMismatch;
  o.require(bad == 0, "empty circumcircle");
  o.require(countMismatch == 0, "complete triangulation");
  return o;
}

}  // namespace

int main() {
  set_log_level(LogLevel::kError);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"pose-accuracy", pose_accuracy},
      {"segmentation-fidelity", segmentation_fidelity},
      {"subsampling-quality", subsampling_quality},
      {"latency-attribution", latency_attribution},
      {"differential-streaming", differential_streaming},
      {"filter-contracts", filter_contracts},
      {"protocol", protocol},
      {"delaunay-property", delaunay_property},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "exception: " << e.what();
    }
    failures += !out.pass;
    std::printf("%s %s: %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
