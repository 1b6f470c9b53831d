#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "empathd/errors.hpp"
#include "empathd/io.hpp"
#include "empathd/log.hpp"
#include "empathd/orchestrator.hpp"

namespace empathd {

namespace fs = std::filesystem;

// ---- SharedState ---------------------------------------------------------------------

SharedState::SharedState() : profile_(std::make_shared<VersionedProfile>()) {}

std::shared_ptr<const VersionedProfile> SharedState::profile() const {
  std::lock_guard lock(m_);
  return profile_;
}

std::vector<Violation> SharedState::set_profile(const ImpairmentProfile& p) {
  auto violations = validate_profile(p);
  if (!violations.empty()) return violations;
  std::shared_ptr<const Preview> prev;
  std::uint64_t version;
  {
    std::lock_guard lock(m_);
    version = profile_->version + 1;
    profile_ = std::make_shared<VersionedProfile>(VersionedProfile{version, p});
    prev = preview_;
  }
  // Refilter the last frame so previews reflect the new profile at once.
  if (prev) publish_preview(prev->raw, apply_visual_profile(prev->raw, p), version);
  return {};
}

void SharedState::publish_preview(Image raw, Image filtered, std::uint64_t profileVersion) {
  auto p = std::make_shared<Preview>();
  p->raw = std::move(raw);
  p->filtered = std::move(filtered);
  p->profileVersion = profileVersion;
  std::lock_guard lock(m_);
  // A frame filtered under an older profile never replaces a newer preview.
  if (preview_ && preview_->profileVersion > profileVersion) return;
  p->seq = ++previewSeq_;
  preview_ = std::move(p);
}

std::shared_ptr<const Preview> SharedState::preview() const {
  std::lock_guard lock(m_);
  return preview_;
}

// ---- HandPipeline --------------------------------------------------------------------

std::optional<Pose> HandPipeline::track(const RgbdFrame& frame, bool& dropout) {
  dropout = false;
  try {
    const auto detections = detect_markers(frame.color, geometry_);
    last_ = estimate_pose(detections, geometry_, frame.intrinsics).pose;
    return last_;
  } catch (const EstimationError& e) {
    log_debug(std::string("tracker: ") + e.what());
  } catch (const GeometryError& e) {
    log_debug(std::string("tracker: ") + e.what());
  }
  if (!last_) return std::nullopt;
  dropout = true;
  ++dropouts_;
  return last_;
}

SegmentMask HandPipeline::segment_hand(const RgbdFrame& frame, const Pose& pose) const {
  return segment(frame, pose, geometry_);
}

HandMesh HandPipeline::mesh(const SegmentMask& mask, const RgbdFrame& frame, const Pose& pose) const {
  MeshOptions o;
  o.stride = stride_;
  o.eyeOffset = eyeOffset_;
  o.inpaint = InpaintContext{pose, RoiBox{}.depthExtent / 2};
  return build_mesh(mask, frame, o);
}

HandFrameResult HandPipeline::process(const RgbdFrame& frame) {
  using Ms = std::chrono::duration<double, std::milli>;
  HandFrameResult r;
  auto t = Clock::now();
  r.pose = track(frame, r.poseDropout);
  r.timings.phoneTrackingMs = Ms(Clock::now() - t).count();
  if (!r.pose) {
    r.skipped = true;
    return r;
  }
  t = Clock::now();
  r.mask = segment_hand(frame, *r.pose);
  r.timings.handTrackingMs = Ms(Clock::now() - t).count();
  t = Clock::now();
  r.mesh = mesh(r.mask, frame, *r.pose);
  r.timings.meshBuildMs = Ms(Clock::now() - t).count();
  return r;
}

// ---- inputs --------------------------------------------------------------------------

CompositorConfig compositor_for(const CameraIntrinsics& view, const VirtualDisplayConfig& display,
                                const PhoneGeometry& geometry) {
  CompositorConfig c;
  c.view = view;
  c.display = display;
  c.geometry = geometry;
  return c;
}

std::vector<RgbdFrame> frames_from_scene_config(const std::string& path) {
  std::vector<RgbdFrame> frames;
  for (const auto& spec : load_scene_config(path)) frames.push_back(render(spec).frame);
  return frames;
}

std::vector<RgbdFrame> default_hand_frames(int count) {
  std::vector<RgbdFrame> frames;
  for (int i = 0; i < count; ++i) {
    const double s = count > 1 ? static_cast<double>(i) / (count - 1) : 0.5;
    SceneSpec spec;
    spec.handSpec = HandSpec::finger(-0.015 + 0.03 * s, -0.06 + 0.05 * s, 0.018, 0.09);
    spec.timestampUs = std::int64_t{i} * 33333;
    spec.seed = static_cast<std::uint64_t>(i + 1);
    frames.push_back(render(spec).frame);
  }
  return frames;
}

// ---- offline run ---------------------------------------------------------------------

namespace {

void write_debug(const std::string& dir, int index, const RgbdFrame& frame, const HandFrameResult& r,
                 const PhoneGeometry& geometry) {
  fs::create_directories(dir);
  const fs::path stem = fs::path(dir) / frame_stem(index);
  write_detection_overlay(frame.color, detect_markers(frame.color, geometry), stem.string() + ".overlay.png");
  if (!r.pose) return;
  const SegmentResult seg = segment_detailed(frame, *r.pose, geometry);
  write_mask_png(seg.mask, stem.string() + ".mask.png");
  write_png(branch_attribution_image(seg), stem.string() + ".branch.png");
  std::ofstream(stem.string() + ".mesh.json") << mesh_to_json(r.mesh).dump() << "\n";
}

}  // namespace

OfflineResult run_offline(const OfflineInputs& in, const std::string& outDir) {
  using Ms = std::chrono::duration<double, std::milli>;
  if (in.frames.empty()) throw ConfigError("offline run: no input frames");
  fs::create_directories(outDir);

  const Scenario& sc = in.scenario;
  const StageDelays& d = sc.delays;
  LatencyRecorder rec;
  HandPipeline pipeline(in.geometry);
  auto app = make_app(sc.app, sc.seed, sc.mapping.appWidth, sc.mapping.appHeight);
  std::vector<wire::TouchEvent> trace;
  if (!sc.tracePath.empty()) trace = wire::load_touch_trace(sc.tracePath);
  std::stable_sort(trace.begin(), trace.end(), [](const auto& a, const auto& b) { return a.tMicros < b.tMicros; });
  std::size_t nextEvent = 0;
  Image stream = wire::scale_display(app->render(), sc.display);

  OfflineResult result;
  for (std::size_t i = 0; i < in.frames.size(); ++i) {
    const RgbdFrame& frame = in.frames[i];
    bool changed = false;
    for (; nextEvent < trace.size() && trace[nextEvent].tMicros <= frame.timestampUs; ++nextEvent) {
      wire::TouchEvent ev = trace[nextEvent];
      const Vec2 p = sc.mapping.map(ev.x, ev.y);
      ev.x = p.x();
      ev.y = p.y();
      changed = app->handle_touch(ev).changed || changed;
    }
    if (changed) stream = wire::scale_display(app->render(), sc.display);

    const HandFrameResult r = pipeline.process(frame);
    if (!in.debugDir.empty()) write_debug(in.debugDir, static_cast<int>(i), frame, r, in.geometry);
    if (r.skipped) {
      log_warn("offline: frame " + std::to_string(i) + " skipped, no phone pose available");
      ++result.framesSkipped;
      continue;
    }

    const auto t = Clock::now();
    const double tSeconds = static_cast<double>(frame.timestampUs) / 1e6;
    MediaBundle b;
    b.mesh = r.mesh;
    b = apply_profile(std::move(b), in.profile, tSeconds);
    const CompositorConfig cfg = compositor_for(frame.intrinsics, sc.display, in.geometry);
    const Image raw = composite(cfg, stream, r.pose, b.mesh->empty() ? nullptr : &*b.mesh, &frame.color);
    const Image out = apply_visual_profile(raw, in.profile);
    const double renderMs = Ms(Clock::now() - t).count();

    const std::string path = (fs::path(outDir) / (frame_stem(static_cast<int>(i)) + ".png")).string();
    write_png(out, path);
    result.outputs.push_back(path);
    ++result.framesWritten;

    const double read = d.rgbdRead;
    const double track = std::max(r.timings.phoneTrackingMs, d.phoneTracking);
    const double build = r.timings.meshBuildMs;
    const double seg = std::max(r.timings.handTrackingMs + build, d.handTracking + d.meshBuild) - build;
    const double render = std::max(renderMs, d.meshRender);
    rec.record(stage::kRgbdRead, read);
    rec.record(stage::kPhoneTracking, track);
    rec.record(stage::kHandTracking, seg);
    rec.record(stage::kMeshBuild, build);
    rec.record(stage::kMeshDownlink, d.meshDownlink);
    rec.record(stage::kMeshRender, render);
    rec.record(stage::kEndToEndHand, read + track + seg + build + d.meshDownlink + render);
  }
  result.poseDropouts = pipeline.dropouts();
  rec.set("frames", in.frames.size());
  rec.set("framesWritten", static_cast<std::uint64_t>(result.framesWritten));
  rec.set("framesSkipped", static_cast<std::uint64_t>(result.framesSkipped));
  rec.set("poseDropouts", result.poseDropouts);
  result.report = rec.report();
  return result;
}

OfflineResult run_offline(const PipelineConfig& cfg) {
  if (cfg.outDir.empty()) throw ConfigError("offline run: an output directory is required");
  OfflineInputs in;
  std::string sceneDir;
  if (!cfg.scenarioPath.empty()) {
    if (!fs::exists(cfg.scenarioPath)) throw ConfigError("scenario file not found: " + cfg.scenarioPath);
    in.scenario = load_scenario(cfg.scenarioPath);
  }
  if (!cfg.profilePath.empty()) {
    in.profile = load_profile(cfg.profilePath);
  } else if (!in.scenario.profilePath.empty()) {
    in.profile = load_profile(in.scenario.profilePath);
  }
  if (const auto v = validate_profile(in.profile); !v.empty()) {
    throw ConfigError("profile filter " + std::to_string(v.front().filterIndex) + ": " + v.front().message);
  }
  if (!cfg.framesDir.empty()) {
    if (!fs::is_directory(cfg.framesDir)) throw ConfigError("frame directory not found: " + cfg.framesDir);
    in.frames = load_rgbd_sequence(cfg.framesDir);
  } else if (!in.scenario.scenePath.empty()) {
    in.frames = frames_from_scene_config(in.scenario.scenePath);
  } else {
    throw ConfigError("offline run: give a frame directory or a scenario with a scene config");
  }

  in.debugDir = cfg.debugDir;
  OfflineResult r = run_offline(in, cfg.outDir);
  const std::string reportPath =
      cfg.reportPath.empty() ? (fs::path(cfg.outDir) / "report.json").string() : cfg.reportPath;
  std::ofstream f(reportPath);
  if (!f) throw IoError("cannot write report " + reportPath);
  f << r.report.to_json().dump(2) << "\n";
  return r;
}

}  // namespace empathd
