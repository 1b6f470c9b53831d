#include <filesystem>

#include "empathd/errors.hpp"
#include "empathd/io.hpp"
#include "empathd/log.hpp"
#include "empathd/orchestrator.hpp"

namespace empathd {

namespace {

using net::now_micros;

Clock::time_point to_time_point(std::int64_t micros) { return Clock::time_point(std::chrono::microseconds(micros)); }

double ms_between(std::int64_t a, std::int64_t b) { return static_cast<double>(b - a) / 1000.0; }

void pad_from(std::int64_t startMicros, double ms) { LatencyPolicy::pad_to(to_time_point(startMicros), ms); }

wire::PoseUpdate pose_message(const Pose& p, std::uint64_t seq, std::int64_t t) {
  wire::PoseUpdate u;
  u.seq = seq;
  u.tMicros = t;
  for (int i = 0; i < 3; ++i) u.T[i] = p.translation[i];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) u.R[r * 3 + c] = p.rotation(r, c);
  }
  return u;
}

Pose pose_from_message(const wire::PoseUpdate& u) {
  Pose p;
  p.translation = Vec3(u.T[0], u.T[1], u.T[2]);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = u.R[r * 3 + c];
  }
  return p;
}

// Answers a clock probe in place.
bool answer_sync(wire::TimeSync& t, std::int64_t recv) {
  if (t.receiveMicros != 0 || t.transmitMicros != 0) return false;
  t.receiveMicros = recv;
  t.transmitMicros = now_micros();
  return true;
}

}  // namespace

// ---- Sink -------------------------------------------------------------------------

Sink::Sink(Options o) : opts_(std::move(o)), listener_(opts_.port), port_(listener_.port()) {
  if (!opts_.shared) opts_.shared = std::make_shared<SharedState>();
  pose_ = opts_.defaultPose;
  stream_ = Image(opts_.compositor.display.streamWidth, opts_.compositor.display.streamHeight);
  if (!opts_.outDir.empty()) std::filesystem::create_directories(opts_.outDir);
}

Sink::~Sink() { stop(); }

void Sink::start() {
  if (running_.exchange(true)) return;
  startMicros_ = now_micros();
  acceptThread_ = std::thread([this] { accept_loop(); });
  renderThread_ = std::thread([this] { render_loop(); });
}

void Sink::stop() {
  if (!running_.exchange(false)) return;
  queue_.close();
  if (acceptThread_.joinable()) acceptThread_.join();
  if (renderThread_.joinable()) renderThread_.join();
  std::shared_ptr<net::Connection> c;
  {
    std::lock_guard lock(connMutex_);
    c = std::move(conn_);
  }
  if (c) c->close();
  listener_.close();
}

void Sink::send(const wire::Message& m) {
  std::shared_ptr<net::Connection> c;
  {
    std::lock_guard lock(connMutex_);
    c = conn_;
  }
  if (c) c->send(m, 0.0);
}

void Sink::accept_loop() {
  while (running_) {
    auto s = listener_.accept(100);
    if (!s) continue;
    auto c = std::make_shared<net::Connection>(
        std::move(*s), [this](wire::Message&& m, std::int64_t recv) { on_message(std::move(m), recv); },
        [](const std::string& why) { log_info("sink: upstream disconnected: " + why); });
    std::shared_ptr<net::Connection> old;
    {
      std::lock_guard lock(connMutex_);
      old = std::exchange(conn_, c);
    }
    c->start();
    if (old) old->close();
    log_info("sink: upstream connected");
  }
}

void Sink::on_message(wire::Message&& m, std::int64_t recv) {
  if (auto* t = std::get_if<wire::TimeSync>(&m)) {
    if (answer_sync(*t, recv)) send(*t);
    return;
  }
  if (auto* p = std::get_if<wire::PoseUpdate>(&m)) {
    std::lock_guard lock(stateMutex_);
    pose_ = pose_from_message(*p);
    return;
  }
  if (auto* c = std::get_if<wire::ConfigUpdate>(&m)) {
    try {
      const auto profile = profile_from_json(nlohmann::json::parse(c->profileJson));
      if (shared().profile()->profile != profile) {
        const auto v = shared().set_profile(profile);
        if (!v.empty()) log_warn("sink: rejected profile update: " + v.front().message);
      }
    } catch (const std::exception& e) {
      log_warn(std::string("sink: bad profile update: ") + e.what());
    }
    return;
  }
  if (std::holds_alternative<wire::FrameUpdate>(m) || std::holds_alternative<wire::MeshUpdate>(m)) {
    if (std::holds_alternative<wire::FrameUpdate>(m)) ++framesReceived_;
    if (queue_.push(Item{std::move(m), recv})) shared().recorder().set("sinkDrops", queue_.drops());
  }
}

void Sink::render_loop() {
  while (running_) {
    auto item = queue_.pop(std::chrono::milliseconds(100));
    if (!item) continue;
    try {
      render_item(*item);
    } catch (const std::exception& e) {
      log_warn(std::string("sink: dropping update: ") + e.what());
    }
  }
}

Image Sink::compose_locked(const ImpairmentProfile& profile, double tSeconds) {
  if (mesh_.empty()) return composite(opts_.compositor, stream_, pose_, nullptr, nullptr);
  MediaBundle b;
  b.mesh = mesh_;
  b = apply_profile(std::move(b), profile, tSeconds);
  return composite(opts_.compositor, stream_, pose_, &*b.mesh, &handSource_);
}

void Sink::render_item(Item& item) {
  const StageDelays& d = opts_.delays;
  const auto profile = shared().profile();
  const double tSeconds = static_cast<double>(now_micros() - startMicros_) / 1e6;
  wire::Ack ack;
  ack.recvMicros = item.recvMicros;
  double padMs = 0;
  Image raw;
  if (auto* f = std::get_if<wire::FrameUpdate>(&item.msg)) {
    Image stream = wire::decode_frame(*f);
    std::lock_guard lock(stateMutex_);
    stream_ = std::move(stream);
    raw = compose_locked(profile->profile, tSeconds);
    ack.seq = f->seq;
    ack.ackedType = wire::MsgType::kFrameUpdate;
    padMs = d.impairmentApply + d.sinkRender;
  } else if (auto* u = std::get_if<wire::MeshUpdate>(&item.msg)) {
    HandMesh shifted;
    Image texture = wire::mesh_texture(*u, &shifted);
    std::lock_guard lock(stateMutex_);
    mesh_ = std::move(shifted);
    handSource_ = std::move(texture);
    raw = compose_locked(profile->profile, tSeconds);
    ack.seq = u->seq;
    ack.ackedType = wire::MsgType::kMesh;
    padMs = d.meshRender;
  } else {
    return;
  }
  ack.composedMicros = now_micros();
  Image filtered = apply_visual_profile(raw, profile->profile);
  ack.appliedMicros = now_micros();
  pad_from(item.recvMicros, padMs);
  ack.renderedMicros = now_micros();
  send(ack);

  if (ack.ackedType == wire::MsgType::kFrameUpdate) {
    ++framesRendered_;
  } else {
    ++meshesRendered_;
  }
  if (!opts_.outDir.empty()) {
    write_png(filtered, (std::filesystem::path(opts_.outDir) / (frame_stem(static_cast<int>(outIndex_++)) + ".png")).string());
  }
  shared().publish_preview(std::move(raw), std::move(filtered), profile->version);
}

// ---- Orchestrator -------------------------------------------------------------------

Orchestrator::Orchestrator(Options o) : opts_(std::move(o)), listener_(opts_.ioPort) {
  if (!opts_.shared) opts_.shared = std::make_shared<SharedState>();
  app_ = make_app(opts_.scenario.app, opts_.scenario.seed, opts_.scenario.mapping.appWidth,
                  opts_.scenario.mapping.appHeight);
  hand_ = std::make_unique<HandPipeline>(opts_.geometry);
}

Orchestrator::~Orchestrator() { stop(); }

std::shared_ptr<net::Connection> Orchestrator::sink() const {
  std::lock_guard lock(sinkMutex_);
  return sink_;
}

void Orchestrator::connect_sink(int timeoutMs) {
  auto c = std::make_shared<net::Connection>(
      net::connect_tcp(opts_.sinkHost, opts_.sinkPort, timeoutMs),
      [this](wire::Message&& m, std::int64_t recv) { on_sink_message(std::move(m), recv); },
      [this](const std::string& why) {
        log_warn("orchestrator: sink connection lost: " + why);
        shared().recorder().set("sinkDown", 1);
      });
  {
    std::lock_guard lock(sinkMutex_);
    sink_ = c;
  }
  c->start();
  sinkOffset_ = sync_clock(*c);
  configVersionSent_ = 0;
  shared().recorder().set("sinkDown", 0);
}

void Orchestrator::start() {
  if (running_) return;
  connect_sink(5000);
  running_ = true;
  acceptThread_ = std::thread([this] { accept_loop(); });
  appThread_ = std::thread([this] { app_loop(); });
  handThread_ = std::thread([this] { hand_loop(); });
}

void Orchestrator::stop() {
  if (!running_.exchange(false)) return;
  eventCv_.notify_all();
  handCv_.notify_all();
  if (acceptThread_.joinable()) acceptThread_.join();
  if (appThread_.joinable()) appThread_.join();
  if (handThread_.joinable()) handThread_.join();
  for (auto& a : agents_) a->close();
  agents_.clear();
  if (auto s = sink()) s->close();
  listener_.close();
  shared().recorder().set("seqGaps", seq_gaps());
}

std::int64_t Orchestrator::sync_clock(net::Connection& c) {
  constexpr int kRounds = 5;
  std::optional<std::int64_t> bestRtt;
  std::int64_t bestOffset = 0;
  for (int i = 0; i < kRounds; ++i) {
    wire::TimeSync probe;
    {
      std::lock_guard lock(syncMutex_);
      probe.seq = ++syncSeq_;
    }
    probe.originMicros = now_micros();
    c.send(probe, 0.0);
    std::unique_lock lock(syncMutex_);
    if (!syncCv_.wait_for(lock, std::chrono::seconds(1), [&] { return syncReplies_.count(probe.seq) > 0; })) continue;
    const auto [reply, t4] = syncReplies_[probe.seq];
    syncReplies_.erase(probe.seq);
    const std::int64_t rtt = (t4 - reply.originMicros) - (reply.transmitMicros - reply.receiveMicros);
    const std::int64_t offset = ((reply.receiveMicros - reply.originMicros) + (reply.transmitMicros - t4)) / 2;
    if (!bestRtt || rtt < *bestRtt) {
      bestRtt = rtt;
      bestOffset = offset;
    }
  }
  if (!bestRtt) log_warn("orchestrator: clock sync got no replies; assuming zero offset");
  return bestOffset;
}

void Orchestrator::on_sync_reply(const wire::TimeSync& t, std::int64_t recv) {
  {
    std::lock_guard lock(syncMutex_);
    syncReplies_[t.seq] = {t, recv};
  }
  syncCv_.notify_all();
}

void Orchestrator::on_sink_message(wire::Message&& m, std::int64_t recv) {
  if (auto* t = std::get_if<wire::TimeSync>(&m)) {
    on_sync_reply(*t, recv);
  } else if (auto* a = std::get_if<wire::Ack>(&m)) {
    on_ack(*a);
  }
}

void Orchestrator::on_agent_message(const Offset& offset, wire::Message&& m, std::int64_t recv) {
  if (auto* e = std::get_if<wire::TouchEvent>(&m)) {
    {
      std::lock_guard lock(eventMutex_);
      events_.push_back(Event{*e, recv, offset});
    }
    eventCv_.notify_all();
  } else if (auto* t = std::get_if<wire::TimeSync>(&m)) {
    on_sync_reply(*t, recv);
  } else if (std::holds_alternative<wire::MotionEvent>(m)) {
    shared().recorder().add("motionEvents");
  }
}

void Orchestrator::on_ack(const wire::Ack& ack) {
  ++acks_;
  const std::int64_t off = sinkOffset_.load();
  auto& rec = shared().recorder();
  std::lock_guard lock(pendingMutex_);
  if (ack.ackedType == wire::MsgType::kFrameUpdate) {
    ++frameAcks_;
    if (auto it = pendingTouch_.find(ack.seq); it != pendingTouch_.end()) {
      const TouchRecord& t = it->second;
      const double downlink = ms_between(t.frameSent, ack.recvMicros - off);
      const double impairment = ms_between(ack.composedMicros, ack.appliedMicros);
      rec.record(stage::kIoEventForward, t.ioForwardMs);
      rec.record(stage::kEmulation, t.emulationMs);
      rec.record(stage::kFrameEncode, t.encodeMs);
      rec.record(stage::kNetworkUplink, t.uplinkMs);
      rec.record(stage::kNetworkDownlink, downlink);
      rec.record(stage::kNetwork, t.uplinkMs + downlink);
      rec.record(stage::kImpairmentApply, impairment);
      rec.record(stage::kSinkRender, ms_between(ack.recvMicros, ack.renderedMicros) - impairment);
      rec.record(stage::kEndToEndTouch, ms_between(t.t0, ack.renderedMicros - off));
      pendingTouch_.erase(it);
    }
  } else if (ack.ackedType == wire::MsgType::kMesh) {
    ++meshAcks_;
    if (auto it = pendingHand_.find(ack.seq); it != pendingHand_.end()) {
      const HandRecord& h = it->second;
      rec.record(stage::kRgbdRead, h.rgbdReadMs);
      rec.record(stage::kPhoneTracking, h.phoneTrackingMs);
      rec.record(stage::kHandTracking, h.handTrackingMs);
      rec.record(stage::kMeshBuild, h.meshBuildMs);
      rec.record(stage::kMeshDownlink, ms_between(h.meshSent, ack.recvMicros - off));
      rec.record(stage::kMeshRender, ms_between(ack.recvMicros, ack.renderedMicros));
      rec.record(stage::kEndToEndHand, ms_between(h.t0, ack.renderedMicros - off));
      pendingHand_.erase(it);
    }
  }
  ackCv_.notify_all();
}

void Orchestrator::accept_loop() {
  int backoffMs = 100;
  std::int64_t nextRetry = 0;
  while (running_) {
    if (auto s = listener_.accept(100)) {
      auto offset = std::make_shared<std::atomic<std::int64_t>>(0);
      auto c = std::make_shared<net::Connection>(
          std::move(*s),
          [this, offset](wire::Message&& m, std::int64_t recv) { on_agent_message(offset, std::move(m), recv); },
          [](const std::string& why) { log_info("orchestrator: IO agent disconnected: " + why); });
      agents_.push_back(c);
      c->start();
      offset->store(sync_clock(*c));
      log_info("orchestrator: IO agent connected");
    }
    auto s = sink();
    if ((!s || !s->open()) && now_micros() >= nextRetry) {
      try {
        if (s) s->close();
        connect_sink(200);
        shared().recorder().add("sinkReconnects");
        backoffMs = 100;
      } catch (const std::exception&) {
        nextRetry = now_micros() + backoffMs * 1000;
        backoffMs = std::min(backoffMs * 2, 5000);
      }
    }
  }
}

void Orchestrator::push_config_if_changed() {
  const auto p = shared().profile();
  if (p->version == configVersionSent_) return;
  auto s = sink();
  if (!s || !s->open()) return;
  s->send(wire::ConfigUpdate{p->version, profile_to_json(p->profile).dump()}, 0.0);
  configVersionSent_ = p->version;
}

void Orchestrator::app_loop() {
  render_and_gate(std::nullopt, now_micros());
  std::int64_t lastTick = now_micros();
  const std::int64_t tickMicros = std::int64_t{opts_.frameIntervalMs} * 1000;
  while (running_) {
    std::optional<Event> ev;
    {
      std::unique_lock lock(eventMutex_);
      const auto wait = tickMicros > 0 ? std::chrono::microseconds(tickMicros) : std::chrono::microseconds(100000);
      eventCv_.wait_for(lock, wait, [&] { return !events_.empty() || !running_; });
      if (!events_.empty()) {
        ev = std::move(events_.front());
        events_.pop_front();
      }
    }
    push_config_if_changed();
    if (ev) {
      process_event(*ev);
      {
        std::lock_guard lock(eventMutex_);
        ++eventsProcessed_;
      }
      eventCv_.notify_all();
    }
    if (tickMicros > 0 && now_micros() - lastTick >= tickMicros) {
      render_and_gate(std::nullopt, now_micros());
      lastTick = now_micros();
    }
  }
}

void Orchestrator::process_event(const Event& ev) {
  ++touchEvents_;
  {
    std::lock_guard lock(gateMutex_);
    touchSeq_.observe(ev.touch.seq);
  }
  if (ev.touch.action == wire::TouchAction::kUp) ++upsReceived_;
  const std::int64_t off = ev.offset ? ev.offset->load() : 0;

  TouchRecord rec;
  rec.t0 = ev.touch.tMicros - off;
  rec.ioForwardMs = ms_between(ev.touch.tMicros, ev.touch.sentMicros);
  rec.uplinkMs = ms_between(ev.touch.sentMicros - off, ev.recv);

  wire::TouchEvent mapped = ev.touch;
  const Vec2 p = opts_.scenario.mapping.map(ev.touch.x, ev.touch.y);
  mapped.x = p.x();
  mapped.y = p.y();
  if (app_->handle_touch(mapped).changed) {
    ++stateChanges_;
    render_and_gate(rec, ev.recv);
  }
}

void Orchestrator::render_and_gate(const std::optional<TouchRecord>& cause, std::int64_t stageStart) {
  // Rendering is a pure function of app state.
  if (renderedFrame_.empty() || app_->state_id() != renderedState_) {
    renderedFrame_ = wire::scale_display(app_->render(), opts_.scenario.display);
    renderedState_ = app_->state_id();
  }
  const Image& scaled = renderedFrame_;
  const std::int64_t encStart = now_micros();
  std::optional<wire::FrameUpdate> fu;
  {
    std::lock_guard lock(gateMutex_);
    fu = wire::diff_gate(gate_, scaled, encStart, cause ? cause->t0 : -1, opts_.encoding);
  }
  const std::int64_t encEnd = now_micros();
  auto& rec = shared().recorder();
  rec.set("framesEmitted", frames_emitted());
  rec.set("framesSuppressed", frames_suppressed());
  if (!fu) return;

  const StageDelays& d = opts_.scenario.delays;
  if (cause) pad_from(stageStart, d.emulation + d.frameEncode);
  const std::int64_t sent = now_micros();
  fu->tMicros = sent;
  if (cause) {
    TouchRecord r = *cause;
    r.encodeMs = ms_between(encStart, encEnd);
    r.emulationMs = ms_between(stageStart, sent) - r.encodeMs;
    r.frameSent = sent;
    std::lock_guard lock(pendingMutex_);
    pendingTouch_[fu->seq] = r;
  }
  auto s = sink();
  if (s && s->open()) {
    s->send(*fu, d.frameDownlink);
  } else {
    rec.add("framesUnsent");
  }
}

void Orchestrator::play_hand_frames(std::vector<RgbdFrame> frames, int count, int intervalMs) {
  {
    std::lock_guard lock(handMutex_);
    handFrames_ = std::move(frames);
    handRemaining_ = handFrames_.empty() ? 0 : count;
    handIndex_ = 0;
    handIntervalMs_ = intervalMs;
    handBusy_ = handRemaining_ > 0;
  }
  handCv_.notify_all();
}

bool Orchestrator::wait_hand_idle(int timeoutMs) {
  std::unique_lock lock(handMutex_);
  return handCv_.wait_for(lock, std::chrono::milliseconds(timeoutMs), [&] { return !handBusy_; });
}

void Orchestrator::hand_loop() {
  const StageDelays& d = opts_.scenario.delays;
  while (running_) {
    std::size_t index;
    int intervalMs;
    {
      std::unique_lock lock(handMutex_);
      handCv_.wait_for(lock, std::chrono::milliseconds(100), [&] { return handRemaining_ > 0 || !running_; });
      if (!running_) break;
      if (handRemaining_ <= 0) continue;
      index = handIndex_++ % handFrames_.size();
      --handRemaining_;
      intervalMs = handIntervalMs_;
    }
    const std::int64_t t0 = now_micros();
    HandRecord rec;
    rec.t0 = t0;
    try {
      RgbdFrame frame;
      {
        std::lock_guard lock(handMutex_);
        frame = handFrames_[index];
      }
      pad_from(t0, d.rgbdRead);
      const std::int64_t t1 = now_micros();

      bool dropout = false;
      const auto pose = hand_->track(frame, dropout);
      pad_from(t1, d.phoneTracking);
      const std::int64_t t2 = now_micros();
      shared().recorder().set("poseDropouts", hand_->dropouts());
      if (!pose) {
        shared().recorder().add("handFramesSkipped");
        log_warn("orchestrator: no phone pose yet; hand frame skipped");
      } else {
        const SegmentMask mask = hand_->segment_hand(frame, *pose);
        const std::int64_t t3 = now_micros();

        wire::MeshUpdate u;
        u.mesh = hand_->mesh(mask, frame, *pose);
        if (const auto bbox = mask_bbox(mask)) wire::attach_texture(u, frame.color, *bbox);
        const std::int64_t built = now_micros();
        // Segmentation and meshing share one budget.
        pad_from(t2, d.handTracking + d.meshBuild);
        const std::int64_t t4 = now_micros();

        rec.rgbdReadMs = ms_between(t0, t1);
        rec.phoneTrackingMs = ms_between(t1, t2);
        rec.meshBuildMs = ms_between(t3, built);
        rec.handTrackingMs = ms_between(t2, t4) - rec.meshBuildMs;
        u.seq = meshSeq_++;
        u.causeMicros = t0;
        u.tMicros = rec.meshSent = now_micros();
        {
          std::lock_guard lock(pendingMutex_);
          pendingHand_[u.seq] = rec;
        }
        if (auto s = sink(); s && s->open()) {
          s->send(pose_message(*pose, poseSeq_++, u.tMicros), d.meshDownlink);
          s->send(u, d.meshDownlink);
          ++meshesSent_;
        }
      }
    } catch (const std::exception& e) {
      log_warn(std::string("orchestrator: hand frame failed: ") + e.what());
    }
    std::this_thread::sleep_until(to_time_point(t0 + std::int64_t{intervalMs} * 1000));
    {
      std::lock_guard lock(handMutex_);
      if (handRemaining_ <= 0) handBusy_ = false;
    }
    handCv_.notify_all();
  }
  {
    std::lock_guard lock(handMutex_);
    handBusy_ = false;
  }
  handCv_.notify_all();
}

std::uint64_t Orchestrator::frames_emitted() const {
  std::lock_guard lock(gateMutex_);
  return gate_.emitted;
}

std::uint64_t Orchestrator::frames_suppressed() const {
  std::lock_guard lock(gateMutex_);
  return gate_.suppressed;
}

std::uint64_t Orchestrator::seq_gaps() const {
  std::lock_guard lock(gateMutex_);
  return touchSeq_.gaps();
}

bool Orchestrator::wait_frame_acks(std::uint64_t n, int timeoutMs) {
  std::unique_lock lock(pendingMutex_);
  return ackCv_.wait_for(lock, std::chrono::milliseconds(timeoutMs), [&] { return frameAcks_ >= n; });
}

bool Orchestrator::wait_mesh_acks(std::uint64_t n, int timeoutMs) {
  std::unique_lock lock(pendingMutex_);
  return ackCv_.wait_for(lock, std::chrono::milliseconds(timeoutMs), [&] { return meshAcks_ >= n; });
}

bool Orchestrator::wait_touch_events(std::uint64_t n, int timeoutMs) {
  std::unique_lock lock(eventMutex_);
  return eventCv_.wait_for(lock, std::chrono::milliseconds(timeoutMs), [&] { return eventsProcessed_ >= n; });
}

// ---- IoAgent ----------------------------------------------------------------------

IoAgent::IoAgent(Options o) : opts_(std::move(o)) {}

IoAgent::~IoAgent() { stop(); }

void IoAgent::connect(int timeoutMs) {
  conn_ = std::make_shared<net::Connection>(
      net::connect_tcp(opts_.host, opts_.port, timeoutMs),
      [this](wire::Message&& m, std::int64_t recv) { on_message(std::move(m), recv); },
      [](const std::string& why) { log_info("io-agent: orchestrator disconnected: " + why); });
  conn_->start();
}

void IoAgent::on_message(wire::Message&& m, std::int64_t recv) {
  if (auto* t = std::get_if<wire::TimeSync>(&m)) {
    if (answer_sync(*t, recv)) conn_->send(*t, 0.0);
  }
}

void IoAgent::play(std::vector<wire::TouchEvent> trace) {
  if (!conn_) throw IoError("io-agent: not connected");
  if (player_.joinable()) player_.join();
  {
    std::lock_guard lock(doneMutex_);
    done_ = false;
  }
  stop_ = false;
  player_ = std::thread([this, trace = std::move(trace)] {
    if (!trace.empty()) {
      const std::int64_t base = now_micros() + std::int64_t{opts_.leadMs} * 1000 - trace.front().tMicros;
      for (const auto& ev : trace) {
        if (stop_) break;
        std::this_thread::sleep_until(to_time_point(base + ev.tMicros));
        const std::int64_t t0 = now_micros();
        pad_from(t0, opts_.delays.ioEventForward);
        wire::TouchEvent e = ev;
        e.seq = nextSeq_++;
        e.tMicros = t0;
        e.sentMicros = now_micros();
        conn_->send(e, opts_.delays.uplink);
        ++sent_;
      }
    }
    {
      std::lock_guard lock(doneMutex_);
      done_ = true;
    }
    doneCv_.notify_all();
  });
}

bool IoAgent::wait_done(int timeoutMs) {
  std::unique_lock lock(doneMutex_);
  return doneCv_.wait_for(lock, std::chrono::milliseconds(timeoutMs), [&] { return done_; });
}

void IoAgent::stop() {
  stop_ = true;
  if (player_.joinable()) player_.join();
  if (conn_) conn_->close();
}

// ---- LiveSession --------------------------------------------------------------------

LiveSession::LiveSession(Options o) : opts_(std::move(o)) {
  shared_ = std::make_shared<SharedState>();
  shared_->display = opts_.scenario.display;
  if (!opts_.profile.empty()) {
    const auto v = shared_->set_profile(opts_.profile);
    if (!v.empty()) throw ConfigError("profile filter " + std::to_string(v.front().filterIndex) + ": " + v.front().message);
  }

  Sink::Options so;
  so.port = opts_.ephemeralPorts ? 0 : opts_.scenario.ports.sink;
  so.delays = opts_.scenario.delays;
  so.compositor = compositor_for(opts_.view, opts_.scenario.display, opts_.geometry);
  so.outDir = opts_.sinkOutDir;
  so.shared = shared_;
  sink_ = std::make_unique<Sink>(std::move(so));

  Orchestrator::Options oo;
  oo.ioPort = opts_.ephemeralPorts ? 0 : opts_.scenario.ports.io;
  oo.sinkPort = sink_->port();
  oo.scenario = opts_.scenario;
  oo.frameIntervalMs = opts_.frameIntervalMs;
  oo.encoding = opts_.encoding;
  oo.shared = shared_;
  oo.geometry = opts_.geometry;
  orch_ = std::make_unique<Orchestrator>(std::move(oo));

  IoAgent::Options ao;
  ao.port = orch_->io_port();
  ao.delays = opts_.scenario.delays;
  agent_ = std::make_unique<IoAgent>(ao);
}

LiveSession::~LiveSession() { stop(); }

void LiveSession::start() {
  if (started_) return;
  sink_->start();
  orch_->start();
  agent_->connect();
  started_ = true;
}

void LiveSession::stop() {
  if (!started_) return;
  agent_->stop();
  orch_->stop();
  sink_->stop();
  started_ = false;
}

LatencyReport LiveSession::report() const { return shared_->recorder().report(); }

}  // namespace empathd
