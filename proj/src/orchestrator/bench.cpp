#include "empathd/errors.hpp"
#include "empathd/log.hpp"
#include "empathd/orchestrator.hpp"

namespace empathd {

std::vector<std::string> changing_tap_sequence(int n) {
  // Nine digits grow the display, then C clears it; no tap is a no-op.
  static const char* kCycle[] = {"1", "2", "3", "4", "5", "6", "7", "8", "9", "C"};
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.emplace_back(kCycle[i % 10]);
  return ids;
}

LatencyReport bench(const Scenario& scenario, const BenchOptions& options) {
  const int touchTrials = options.touchTrials > 0 ? options.touchTrials : scenario.trials;
  const int handTrials = options.handTrials > 0 ? options.handTrials : scenario.trials;

  std::vector<RgbdFrame> frames;
  if (options.runHand) {
    frames = scenario.scenePath.empty() ? default_hand_frames(8) : frames_from_scene_config(scenario.scenePath);
    if (frames.empty()) throw ConfigError("bench: the scene config produced no frames");
  }

  LiveSession::Options lo;
  lo.scenario = scenario;
  if (!scenario.profilePath.empty()) lo.profile = load_profile(scenario.profilePath);
  if (!frames.empty()) lo.view = frames.front().intrinsics;
  LiveSession session(lo);
  session.start();
  Orchestrator& orch = session.orchestrator();

  if (options.runTouch && touchTrials > 0) {
    auto app = make_app(scenario.app, scenario.seed, scenario.mapping.appWidth, scenario.mapping.appHeight);
    std::vector<std::string> ids;
    if (app->kind() == "grid") {
      ids = changing_tap_sequence(touchTrials);
    } else {
      const auto& widgets = app->widgets();
      for (int i = 0; i < touchTrials; ++i) ids.push_back(widgets[static_cast<std::size_t>(i) % widgets.size()].id);
    }
    const auto trace = taps_on(*app, ids, scenario.tapIntervalMs, scenario.mapping);
    const std::uint64_t before = orch.frames_emitted();
    session.agent().play(trace);
    const int budgetMs = touchTrials * scenario.tapIntervalMs + 10000;
    if (!session.agent().wait_done(budgetMs)) log_warn("bench: touch replay did not finish in time");
    orch.wait_touch_events(trace.size(), 5000);
    if (!orch.wait_frame_acks(before + static_cast<std::uint64_t>(touchTrials), 5000)) {
      log_warn("bench: not every touch frame was acknowledged");
    }
  }

  if (options.runHand && handTrials > 0) {
    orch.play_hand_frames(frames, handTrials, options.handIntervalMs);
    if (!orch.wait_hand_idle(handTrials * options.handIntervalMs + 10000)) log_warn("bench: hand replay timed out");
    if (!orch.wait_mesh_acks(orch.meshes_sent(), 5000)) log_warn("bench: not every mesh was acknowledged");
  }

  session.stop();
  return session.report();
}

LatencyReport bench(const std::string& scenarioPath, const BenchOptions& options) {
  return bench(load_scenario(scenarioPath), options);
}

}  // namespace empathd
