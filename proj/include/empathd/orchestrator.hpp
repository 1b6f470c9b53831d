#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "empathd/appsim.hpp"
#include "empathd/compositor.hpp"
#include "empathd/impairments.hpp"
#include "empathd/latency.hpp"
#include "empathd/net.hpp"
#include "empathd/profile.hpp"
#include "empathd/scenegen.hpp"
#include "empathd/segmenter.hpp"
#include "empathd/tracker.hpp"

namespace empathd {

// ---- shared, versioned state -------------------------------------------------

struct VersionedProfile {
  std::uint64_t version = 0;
  ImpairmentProfile profile;
};

struct Preview {
  std::uint64_t seq = 0;
  std::uint64_t profileVersion = 0;
  Image raw;       // composited, before impairments
  Image filtered;  // after impairments
};

// State read by the API server and written by the pipeline. Readers get
// immutable snapshots; a profile swap publishes a new version atomically.
class SharedState {
 public:
  SharedState();

  std::shared_ptr<const VersionedProfile> profile() const;
  // Validates first; on violations nothing changes and they are returned.
  std::vector<Violation> set_profile(const ImpairmentProfile& p);

  void publish_preview(Image raw, Image filtered, std::uint64_t profileVersion);
  std::shared_ptr<const Preview> preview() const;

  LatencyRecorder& recorder() { return recorder_; }
  const LatencyRecorder& recorder() const { return recorder_; }

  VirtualDisplayConfig display;

 private:
  mutable std::mutex m_;
  std::shared_ptr<const VersionedProfile> profile_;
  std::shared_ptr<const Preview> preview_;
  std::uint64_t previewSeq_ = 0;
  LatencyRecorder recorder_;
};

// ---- per-frame hand path -------------------------------------------------------

struct HandTimings {
  double phoneTrackingMs = 0;
  double handTrackingMs = 0;
  double meshBuildMs = 0;
};

struct HandFrameResult {
  std::optional<Pose> pose;
  bool poseDropout = false;  // tracker failed; previous pose reused
  bool skipped = false;      // tracker failed with no previous pose
  SegmentMask mask;
  HandMesh mesh;
  HandTimings timings;
};

// Track, segment and mesh one RGB-D frame. Keeps the last good pose.
class HandPipeline {
 public:
  explicit HandPipeline(PhoneGeometry geometry, int stride = 32, double eyeOffset = kDefaultEyeOffset)
      : geometry_(std::move(geometry)), stride_(stride), eyeOffset_(eyeOffset) {}

  HandFrameResult process(const RgbdFrame& frame);
  // Stages split so callers can pad each one.
  std::optional<Pose> track(const RgbdFrame& frame, bool& dropout);
  SegmentMask segment_hand(const RgbdFrame& frame, const Pose& pose) const;
  HandMesh mesh(const SegmentMask& mask, const RgbdFrame& frame, const Pose& pose) const;

  const PhoneGeometry& geometry() const { return geometry_; }
  std::uint64_t dropouts() const { return dropouts_; }

 private:
  PhoneGeometry geometry_;
  int stride_;
  double eyeOffset_;
  std::optional<Pose> last_;
  std::uint64_t dropouts_ = 0;
};

// ---- offline mode ----------------------------------------------------------------

struct PipelineConfig {
  std::string mode = "offline";
  std::string scenarioPath;
  std::string profilePath;
  std::string framesDir;  // offline input; falls back to the scenario's scene config
  std::string outDir;
  std::string reportPath;  // defaults to outDir/report.json
  std::string debugDir;    // when set, per-frame overlays, masks and meshes go here
};

struct OfflineResult {
  LatencyReport report;
  int framesWritten = 0;
  int framesSkipped = 0;
  std::uint64_t poseDropouts = 0;
  std::vector<std::string> outputs;
};

struct OfflineInputs {
  Scenario scenario;
  ImpairmentProfile profile;
  std::vector<RgbdFrame> frames;
  PhoneGeometry geometry = PhoneGeometry::default_layout();
  std::string debugDir;
};

// Collapses the three tiers into one process. Configured stage delays are
// added to the report arithmetically (pad-to) instead of slept.
OfflineResult run_offline(const OfflineInputs& in, const std::string& outDir);
OfflineResult run_offline(const PipelineConfig& cfg);

// Frames from a scene config, rendered in memory.
std::vector<RgbdFrame> frames_from_scene_config(const std::string& path);
std::vector<RgbdFrame> default_hand_frames(int count);

CompositorConfig compositor_for(const CameraIntrinsics& view, const VirtualDisplayConfig& display,
                                const PhoneGeometry& geometry = PhoneGeometry::default_layout());

// ---- live mode -----------------------------------------------------------------

// VR-sink tier: receives frames, meshes and poses, composites, applies the
// current profile and acknowledges each rendered update.
class Sink {
 public:
  struct Options {
    int port = 0;
    StageDelays delays;
    CompositorConfig compositor;
    std::optional<Pose> defaultPose = Pose::frontal(Vec3(0, 0, 0.30));
    std::string outDir;  // when set, every rendered frame is written as PNG
    std::shared_ptr<SharedState> shared;
  };

  explicit Sink(Options o);
  ~Sink();
  int port() const { return port_; }
  void start();
  void stop();

  std::uint64_t frames_received() const { return framesReceived_.load(); }
  std::uint64_t frames_rendered() const { return framesRendered_.load(); }
  std::uint64_t meshes_rendered() const { return meshesRendered_.load(); }
  std::uint64_t drops() const { return queue_.drops(); }
  SharedState& shared() { return *opts_.shared; }

 private:
  struct Item {
    wire::Message msg;
    std::int64_t recvMicros;
  };
  void accept_loop();
  void render_loop();
  void on_message(wire::Message&& m, std::int64_t recv);
  void render_item(Item& item);
  Image compose_locked(const ImpairmentProfile& profile, double tSeconds);
  void send(const wire::Message& m);

  Options opts_;
  net::TcpListener listener_;
  int port_;
  std::atomic<bool> running_{false};
  std::thread acceptThread_, renderThread_;
  std::mutex connMutex_;
  std::shared_ptr<net::Connection> conn_;
  net::BoundedQueue<Item> queue_{3};
  std::mutex stateMutex_;
  Image stream_;
  std::optional<Pose> pose_;
  HandMesh mesh_;
  Image handSource_;
  std::int64_t startMicros_ = 0;
  std::atomic<std::uint64_t> framesReceived_{0}, framesRendered_{0}, meshesRendered_{0};
  std::uint64_t outIndex_ = 0;
};

// Orchestrator tier: accepts IO-agent events, drives the app, streams
// diff-gated frames and hand meshes to the sink and attributes latency.
class Orchestrator {
 public:
  struct Options {
    int ioPort = 0;
    std::string sinkHost = "127.0.0.1";
    int sinkPort = 7002;
    Scenario scenario;
    int frameIntervalMs = 100;  // periodic re-render; 0 renders only on state changes
    wire::FrameEncoding encoding = wire::FrameEncoding::kPng;
    std::shared_ptr<SharedState> shared;
    PhoneGeometry geometry = PhoneGeometry::default_layout();
  };

  explicit Orchestrator(Options o);
  ~Orchestrator();
  int io_port() const { return listener_.port(); }
  void start();  // connects to the sink; throws IoError when it is unreachable
  void stop();

  // Plays `count` hand frames (cycling through `frames`), one every intervalMs.
  void play_hand_frames(std::vector<RgbdFrame> frames, int count, int intervalMs);
  bool wait_hand_idle(int timeoutMs);

  std::uint64_t frames_emitted() const;
  std::uint64_t frames_suppressed() const;
  std::uint64_t touch_events() const { return touchEvents_.load(); }
  std::uint64_t ups_received() const { return upsReceived_.load(); }
  std::uint64_t state_changes() const { return stateChanges_.load(); }
  std::uint64_t meshes_sent() const { return meshesSent_.load(); }
  std::uint64_t seq_gaps() const;
  std::int64_t sink_offset_micros() const { return sinkOffset_.load(); }
  bool wait_frame_acks(std::uint64_t n, int timeoutMs);
  bool wait_mesh_acks(std::uint64_t n, int timeoutMs);
  // Waits until at least n touch events were consumed by the app.
  bool wait_touch_events(std::uint64_t n, int timeoutMs);
  SharedState& shared() { return *opts_.shared; }

 private:
  struct TouchRecord {
    std::int64_t t0 = 0;  // touch instant, local clock
    double ioForwardMs = 0;
    double uplinkMs = 0;
    double emulationMs = 0;
    double encodeMs = 0;
    std::int64_t frameSent = 0;
  };
  struct HandRecord {
    std::int64_t t0 = 0;
    double rgbdReadMs = 0, phoneTrackingMs = 0, handTrackingMs = 0, meshBuildMs = 0;
    std::int64_t meshSent = 0;
  };
  using Offset = std::shared_ptr<std::atomic<std::int64_t>>;
  struct Event {
    wire::TouchEvent touch;
    std::int64_t recv = 0;
    Offset offset;
  };

  void connect_sink(int timeoutMs);
  std::shared_ptr<net::Connection> sink() const;
  void accept_loop();
  void app_loop();
  void hand_loop();
  void process_event(const Event& ev);
  void push_config_if_changed();
  void on_sink_message(wire::Message&& m, std::int64_t recv);
  void on_agent_message(const Offset& offset, wire::Message&& m, std::int64_t recv);
  void on_ack(const wire::Ack& ack);
  void on_sync_reply(const wire::TimeSync& t, std::int64_t recv);
  std::int64_t sync_clock(net::Connection& c);
  void render_and_gate(const std::optional<TouchRecord>& cause, std::int64_t stageStart);

  Options opts_;
  net::TcpListener listener_;
  std::atomic<bool> running_{false};
  mutable std::mutex sinkMutex_;
  std::shared_ptr<net::Connection> sink_;
  std::atomic<std::int64_t> sinkOffset_{0};
  std::vector<std::shared_ptr<net::Connection>> agents_;
  std::thread acceptThread_, appThread_, handThread_;

  std::unique_ptr<App> app_;
  std::unique_ptr<HandPipeline> hand_;
  wire::DiffGateState gate_;
  wire::SeqTracker touchSeq_;
  mutable std::mutex gateMutex_;
  std::uint64_t configVersionSent_ = 0;
  std::string renderedState_;  // app state behind renderedFrame_
  Image renderedFrame_;        // scaled app screen

  std::mutex eventMutex_;
  std::condition_variable eventCv_;
  std::deque<Event> events_;
  std::uint64_t eventsProcessed_ = 0;

  std::mutex syncMutex_;
  std::condition_variable syncCv_;
  std::map<std::uint64_t, std::pair<wire::TimeSync, std::int64_t>> syncReplies_;
  std::uint64_t syncSeq_ = 0;

  std::mutex pendingMutex_;
  std::condition_variable ackCv_;
  std::map<std::uint64_t, TouchRecord> pendingTouch_;
  std::map<std::uint64_t, HandRecord> pendingHand_;
  std::uint64_t frameAcks_ = 0, meshAcks_ = 0;

  std::mutex handMutex_;
  std::condition_variable handCv_;
  std::vector<RgbdFrame> handFrames_;
  int handRemaining_ = 0;
  std::size_t handIndex_ = 0;
  int handIntervalMs_ = 100;
  bool handBusy_ = false;
  std::uint64_t meshSeq_ = 0, poseSeq_ = 0;

  std::atomic<std::uint64_t> touchEvents_{0}, upsReceived_{0}, stateChanges_{0}, acks_{0}, meshesSent_{0};
};

// IO-phone agent: replays a touch trace to the orchestrator.
class IoAgent {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 7001;
    StageDelays delays;  // ioEventForward and uplink are used
    int leadMs = 100;
  };

  explicit IoAgent(Options o);
  ~IoAgent();
  void connect(int timeoutMs = 5000);
  // Replays with the trace's relative timing. Returns at once.
  void play(std::vector<wire::TouchEvent> trace);
  bool wait_done(int timeoutMs);
  void stop();
  std::uint64_t sent() const { return sent_.load(); }

 private:
  void on_message(wire::Message&& m, std::int64_t recv);

  Options opts_;
  std::shared_ptr<net::Connection> conn_;
  std::thread player_;
  std::mutex doneMutex_;
  std::condition_variable doneCv_;
  bool done_ = true;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> sent_{0};
  std::uint64_t nextSeq_ = 0;
};

// The three tiers in one process over loopback TCP.
class LiveSession {
 public:
  struct Options {
    Scenario scenario;
    ImpairmentProfile profile;
    int frameIntervalMs = 100;
    bool ephemeralPorts = true;
    std::string sinkOutDir;
    wire::FrameEncoding encoding = wire::FrameEncoding::kPng;
    CameraIntrinsics view;  // sink view; matches the RGB-D camera
    PhoneGeometry geometry = PhoneGeometry::default_layout();
  };

  explicit LiveSession(Options o);
  ~LiveSession();
  void start();
  void stop();

  Sink& sink() { return *sink_; }
  Orchestrator& orchestrator() { return *orch_; }
  IoAgent& agent() { return *agent_; }
  std::shared_ptr<SharedState> shared() { return shared_; }
  LatencyReport report() const;

 private:
  Options opts_;
  std::shared_ptr<SharedState> shared_;
  std::unique_ptr<Sink> sink_;
  std::unique_ptr<Orchestrator> orch_;
  std::unique_ptr<IoAgent> agent_;
  bool started_ = false;
};

// ---- bench -----------------------------------------------------------------------

struct BenchOptions {
  int touchTrials = 0;  // 0 uses the scenario's trials
  int handTrials = 0;
  int handIntervalMs = 250;
  bool runTouch = true;
  bool runHand = true;
};

// Touch-to-frame and hand-to-mesh latency over live loopback tiers.
LatencyReport bench(const Scenario& scenario, const BenchOptions& options = {});
LatencyReport bench(const std::string& scenarioPath, const BenchOptions& options = {});

// Calculator keys that change the display on every tap.
std::vector<std::string> changing_tap_sequence(int n);

// ---- calibration chart ------------------------------------------------------------

// Rows of letters at decreasing sizes; the row at targetSp is marked.
Image calibration_chart(int targetSp, const VirtualDisplayConfig& display);
int sp_to_glyph_scale(double sp, const VirtualDisplayConfig& display);

}  // namespace empathd
