#include "commands.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "empathd/api_server.hpp"
#include "empathd/errors.hpp"
#include "empathd/io.hpp"
#include "empathd/log.hpp"
#include "empathd/orchestrator.hpp"

namespace empathd::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> gStop{false};

void on_signal(int) { gStop = true; }

// Blocks until SIGINT/SIGTERM or, when positive, the duration elapses.
void wait_for_stop(double durationS) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(durationS));
  while (!gStop) {
    if (durationS > 0 && Clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

void write_report(const LatencyReport& r, const std::string& path) {
  if (path.empty()) return;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(path);
  if (!f) throw IoError("cannot write report " + path);
  f << r.to_json().dump(2) << "\n";
}

Scenario scenario_or_default(const std::string& path) { return path.empty() ? Scenario{} : load_scenario(path); }

ImpairmentProfile profile_for(const std::string& path, const Scenario& sc) {
  if (!path.empty()) return load_profile(path);
  if (!sc.profilePath.empty()) return load_profile(sc.profilePath);
  return {};
}

std::vector<RgbdFrame> scenario_frames(const Scenario& sc) {
  return sc.scenePath.empty() ? default_hand_frames(8) : frames_from_scene_config(sc.scenePath);
}

struct RunArgs {
  std::string mode = "offline";
  std::string role = "all";
  std::string scenario, profile, out, frames, report, debug;
  double durationS = 0;
  bool noApi = false;
};

int run_live(const RunArgs& a) {
  Scenario sc = scenario_or_default(a.scenario);
  const ImpairmentProfile profile = profile_for(a.profile, sc);
  std::vector<RgbdFrame> frames = scenario_frames(sc);
  const std::string reportPath = !a.report.empty() ? a.report : a.out.empty() ? "" : (fs::path(a.out) / "report.json").string();

  std::unique_ptr<LiveSession> session;
  std::unique_ptr<Orchestrator> orch;
  std::shared_ptr<SharedState> shared;
  if (a.role == "all") {
    LiveSession::Options o;
    o.scenario = sc;
    o.profile = profile;
    o.ephemeralPorts = false;
    o.sinkOutDir = a.out.empty() ? "" : (fs::path(a.out) / "frames").string();
    o.view = frames.front().intrinsics;
    session = std::make_unique<LiveSession>(o);
    session->start();
    shared = session->shared();
    if (!sc.tracePath.empty()) session->agent().play(wire::load_touch_trace(sc.tracePath));
  } else if (a.role == "orchestrator") {
    shared = std::make_shared<SharedState>();
    shared->display = sc.display;
    if (const auto v = shared->set_profile(profile); !v.empty()) throw ConfigError("profile: " + v.front().message);
    Orchestrator::Options o;
    o.ioPort = sc.ports.io;
    o.sinkPort = sc.ports.sink;
    o.scenario = sc;
    o.shared = shared;
    orch = std::make_unique<Orchestrator>(o);
    orch->start();
  } else {
    throw ConfigError("unknown role '" + a.role + "' (expected all or orchestrator)");
  }
  Orchestrator& o = session ? session->orchestrator() : *orch;
  o.play_hand_frames(frames, 1 << 30, 100);

  std::unique_ptr<ApiServer> api;
  if (!a.noApi) {
    api = std::make_unique<ApiServer>(shared, sc.ports.api);
    api->start();
    std::cerr << "dashboard API on http://127.0.0.1:" << api->port() << "/api/\n";
  }
  wait_for_stop(a.durationS);
  if (api) api->stop();
  if (session) session->stop();
  if (orch) orch->stop();
  const LatencyReport r = shared->recorder().report();
  write_report(r, reportPath);
  std::cout << r.table();
  return 0;
}

int run_cmd(const RunArgs& a) {
  if (a.mode == "live") return run_live(a);
  if (a.mode != "offline") throw ConfigError("unknown mode '" + a.mode + "' (expected offline or live)");
  PipelineConfig cfg;
  cfg.scenarioPath = a.scenario;
  cfg.profilePath = a.profile;
  cfg.framesDir = a.frames;
  cfg.outDir = a.out;
  cfg.reportPath = a.report;
  cfg.debugDir = a.debug;
  const OfflineResult r = run_offline(cfg);
  std::cout << r.report.table();
  std::cout << "wrote " << r.framesWritten << " frames (" << r.framesSkipped << " skipped, " << r.poseDropouts
            << " pose dropouts) to " << a.out << "\n";
  return 0;
}

int serve_cmd(int port, const std::string& scenarioPath, const std::string& profilePath, double durationS) {
  Scenario sc = scenario_or_default(scenarioPath);
  LiveSession::Options o;
  o.scenario = sc;
  o.profile = profile_for(profilePath, sc);
  std::vector<RgbdFrame> frames = scenario_frames(sc);
  o.view = frames.front().intrinsics;
  LiveSession session(o);
  session.start();
  session.orchestrator().play_hand_frames(frames, 1 << 30, 100);
  ApiServer api(session.shared(), port);
  api.start();
  std::cerr << "dashboard API on http://127.0.0.1:" << api.port() << "/api/\n";
  wait_for_stop(durationS);
  api.stop();
  session.stop();
  return 0;
}

int sink_cmd(int port, const std::string& scenarioPath, const std::string& out, double durationS) {
  Scenario sc = scenario_or_default(scenarioPath);
  Sink::Options o;
  o.port = port >= 0 ? port : sc.ports.sink;
  o.delays = sc.delays;
  o.compositor = compositor_for(CameraIntrinsics{}, sc.display);
  o.outDir = out;
  Sink sink(o);
  sink.start();
  std::cerr << "sink listening on port " << sink.port() << "\n";
  wait_for_stop(durationS);
  sink.stop();
  std::cout << "rendered " << sink.frames_rendered() << " frames, " << sink.meshes_rendered() << " meshes, "
            << sink.drops() << " dropped\n";
  return 0;
}

int agent_cmd(const std::string& host, int port, const std::string& tracePath, const std::string& scenarioPath,
              int taps) {
  Scenario sc = scenario_or_default(scenarioPath);
  std::vector<wire::TouchEvent> trace;
  if (!tracePath.empty()) {
    trace = wire::load_touch_trace(tracePath);
  } else if (!sc.tracePath.empty()) {
    trace = wire::load_touch_trace(sc.tracePath);
  } else {
    auto app = make_app(sc.app, sc.seed, sc.mapping.appWidth, sc.mapping.appHeight);
    trace = random_tap_trace(*app, taps, sc.seed, sc.tapIntervalMs, sc.mapping);
  }
  IoAgent::Options o;
  o.host = host;
  o.port = port >= 0 ? port : sc.ports.io;
  o.delays = sc.delays;
  IoAgent agent(o);
  agent.connect();
  agent.play(trace);
  const std::int64_t span = trace.empty() ? 0 : trace.back().tMicros - trace.front().tMicros;
  agent.wait_done(static_cast<int>(span / 1000) + 10000);
  agent.stop();
  std::cout << "sent " << agent.sent() << " events\n";
  return 0;
}

int impair_cmd(const std::string& profilePath, const std::string& in, const std::string& out, double t) {
  const ImpairmentProfile profile = load_profile(profilePath);
  if (const auto v = validate_profile(profile); !v.empty()) {
    throw ConfigError("profile filter " + std::to_string(v.front().filterIndex) + ": " + v.front().message);
  }
  const std::string ext = fs::path(in).extension().string();
  MediaBundle b;
  if (ext == ".wav") {
    b.audio = read_wav(in);
  } else if (ext == ".png") {
    b.image = read_png_rgb(in);
  } else {
    throw ConfigError("impair: input must be .png or .wav");
  }
  b = apply_profile(std::move(b), profile, t);
  if (b.audio) write_wav(*b.audio, out);
  if (b.image) write_png(*b.image, out);
  return 0;
}

int scenegen_cmd(const std::string& config, const std::string& out) {
  const auto specs = load_scene_config(config);
  render_sequence(specs, out);
  std::cout << "rendered " << specs.size() << " frames to " << out << "\n";
  return 0;
}

}  // namespace

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

std::function<int()> register_scenegen(CLI::App& app) {
  auto config = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  app.add_option("--config", *config, "scene configuration JSON")->required();
  app.add_option("--out", *out, "output directory")->required();
  return [config, out] { return scenegen_cmd(*config, *out); };
}

std::function<int()> register_commands(CLI::App& app) {
  auto selected = std::make_shared<std::function<int()>>();
  app.require_subcommand(1);

  auto run = std::make_shared<RunArgs>();
  auto* r = app.add_subcommand("run", "run the pipeline offline or live");
  r->add_option("--mode", run->mode, "offline or live")->check(CLI::IsMember({"offline", "live"}));
  r->add_option("--scenario", run->scenario, "scenario JSON");
  r->add_option("--profile", run->profile, "impairment profile JSON");
  r->add_option("--out", run->out, "output directory");
  r->add_option("--frames", run->frames, "RGB-D frame directory (offline)");
  r->add_option("--report", run->report, "report path (default OUT/report.json)");
  r->add_option("--debug", run->debug, "write overlays, masks and meshes here (offline)");
  r->add_option("--role", run->role, "live role: all or orchestrator");
  r->add_option("--duration-s", run->durationS, "stop after this many seconds (live)");
  r->add_flag("--no-api", run->noApi, "do not serve the dashboard API (live)");
  r->callback([selected, run] { *selected = [run] { return run_cmd(*run); }; });

  auto bench = std::make_shared<std::tuple<std::string, std::string, BenchOptions>>();
  auto* b = app.add_subcommand("bench", "measure touch and hand latency over live loopback tiers");
  b->add_option("--scenario", std::get<0>(*bench), "scenario JSON")->required();
  b->add_option("--out", std::get<1>(*bench), "report JSON path");
  b->add_option("--touch-trials", std::get<2>(*bench).touchTrials, "touch repetitions (default: scenario trials)");
  b->add_option("--hand-trials", std::get<2>(*bench).handTrials, "hand repetitions (default: scenario trials)");
  b->add_option("--hand-interval-ms", std::get<2>(*bench).handIntervalMs, "spacing of hand frames");
  b->callback([selected, bench] {
    *selected = [bench] {
      const LatencyReport r = empathd::bench(std::get<0>(*bench), std::get<2>(*bench));
      write_report(r, std::get<1>(*bench));
      std::cout << r.table();
      return 0;
    };
  });

  auto serve = std::make_shared<std::tuple<int, std::string, std::string, double>>(8080, "", "", 0.0);
  auto* s = app.add_subcommand("serve", "run a live session and serve the dashboard API");
  s->add_option("--port", std::get<0>(*serve), "API port");
  s->add_option("--scenario", std::get<1>(*serve), "scenario JSON");
  s->add_option("--profile", std::get<2>(*serve), "impairment profile JSON");
  s->add_option("--duration-s", std::get<3>(*serve), "stop after this many seconds");
  s->callback([selected, serve] {
    *selected = [serve] {
      return serve_cmd(std::get<0>(*serve), std::get<1>(*serve), std::get<2>(*serve), std::get<3>(*serve));
    };
  });

  auto* g = app.add_subcommand("scenegen", "render a synthetic RGB-D sequence");
  auto sg = register_scenegen(*g);
  g->callback([selected, sg] { *selected = sg; });

  auto sink = std::make_shared<std::tuple<int, std::string, std::string, double>>(-1, "", "", 0.0);
  auto* k = app.add_subcommand("sink", "run the VR-sink tier");
  k->add_option("--port", std::get<0>(*sink), "listen port (default: scenario sink port)");
  k->add_option("--scenario", std::get<1>(*sink), "scenario JSON");
  k->add_option("--out", std::get<2>(*sink), "write rendered frames here");
  k->add_option("--duration-s", std::get<3>(*sink), "stop after this many seconds");
  k->callback([selected, sink] {
    *selected = [sink] { return sink_cmd(std::get<0>(*sink), std::get<1>(*sink), std::get<2>(*sink), std::get<3>(*sink)); };
  });

  auto agent = std::make_shared<std::tuple<std::string, int, std::string, std::string, int>>("127.0.0.1", -1, "", "", 20);
  auto* ag = app.add_subcommand("io-agent", "replay a touch trace to the orchestrator");
  ag->add_option("--host", std::get<0>(*agent), "orchestrator host");
  ag->add_option("--port", std::get<1>(*agent), "orchestrator IO port (default: scenario io port)");
  ag->add_option("--trace", std::get<2>(*agent), "touch trace JSONL");
  ag->add_option("--scenario", std::get<3>(*agent), "scenario JSON");
  ag->add_option("--taps", std::get<4>(*agent), "random taps when no trace is given");
  ag->callback([selected, agent] {
    *selected = [agent] {
      return agent_cmd(std::get<0>(*agent), std::get<1>(*agent), std::get<2>(*agent), std::get<3>(*agent),
                       std::get<4>(*agent));
    };
  });

  auto impair = std::make_shared<std::tuple<std::string, std::string, std::string, double>>("", "", "", 0.0);
  auto* im = app.add_subcommand("impair", "apply a profile to a PNG image or WAV file");
  im->add_option("--profile", std::get<0>(*impair), "impairment profile JSON")->required();
  im->add_option("--in", std::get<1>(*impair), "input .png or .wav")->required();
  im->add_option("--out", std::get<2>(*impair), "output path")->required();
  im->add_option("--t", std::get<3>(*impair), "time in seconds (tremor phase)");
  im->callback([selected, impair] {
    *selected = [impair] {
      return impair_cmd(std::get<0>(*impair), std::get<1>(*impair), std::get<2>(*impair), std::get<3>(*impair));
    };
  });

  return [selected] { return (*selected)(); };
}

}  // namespace empathd::cli
