#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"
#include "empathd/meshgen.hpp"

namespace empathd::wire {

inline constexpr std::uint8_t kMagic = 0xED;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 7;
inline constexpr std::size_t kMaxPayload = std::size_t{1} << 24;

enum class MsgType : std::uint8_t {
  kTouch = 1,
  kMotion = 2,
  kFrameUpdate = 3,
  kAudioChunk = 4,
  kPose = 5,
  kMesh = 6,
  kConfig = 7,
  kTimeSync = 8,
  kAck = 9,
};

enum class TouchAction : std::uint8_t { kDown = 0, kMove = 1, kUp = 2 };

// Times are microseconds on the sender's monotonic clock. sentMicros is
// stamped at transmission so the receiver can attribute hop latency.
struct TouchEvent {
  std::uint64_t seq = 0;
  double x = 0, y = 0;  // IO-phone screen pixels
  TouchAction action = TouchAction::kDown;
  std::int64_t tMicros = 0;
  std::int64_t sentMicros = 0;
  bool operator==(const TouchEvent&) const = default;
};

struct MotionEvent {
  std::uint64_t seq = 0;
  std::array<double, 3> accel{};
  std::array<double, 3> gyro{};
  std::int64_t tMicros = 0;
  std::int64_t sentMicros = 0;
  bool operator==(const MotionEvent&) const = default;
};

enum class FrameEncoding : std::uint8_t { kPng = 0, kRawRgb8 = 1 };

struct FrameUpdate {
  std::uint64_t seq = 0;
  std::int64_t tMicros = 0;
  std::int64_t causeMicros = -1;  // tMicros of the input that caused the change, -1 if none
  std::uint32_t width = 0, height = 0;
  FrameEncoding encoding = FrameEncoding::kPng;
  std::vector<std::uint8_t> payload;
  bool operator==(const FrameUpdate&) const = default;
};

struct AudioChunk {
  std::uint64_t seq = 0;
  std::int64_t tMicros = 0;
  double sampleRateHz = 48000.0;
  std::vector<double> samples;
  bool operator==(const AudioChunk&) const = default;
};

struct PoseUpdate {
  std::uint64_t seq = 0;
  std::int64_t tMicros = 0;
  std::array<double, 3> T{};
  std::array<double, 9> R{};  // row-major
  bool operator==(const PoseUpdate&) const = default;
};

struct MeshUpdate {
  std::uint64_t seq = 0;
  std::int64_t tMicros = 0;
  std::int64_t causeMicros = -1;
  HandMesh mesh;
  // RGB8 crop of the source colour image; uv are relative to the full frame.
  std::uint32_t texX = 0, texY = 0, texWidth = 0, texHeight = 0;
  std::vector<std::uint8_t> texture;
  bool operator==(const MeshUpdate& o) const;
};

struct ConfigUpdate {
  std::uint64_t version = 0;
  std::string profileJson;
  bool operator==(const ConfigUpdate&) const = default;
};

// NTP-style offset estimation.
struct TimeSync {
  std::uint64_t seq = 0;
  std::int64_t originMicros = 0;
  std::int64_t receiveMicros = 0;
  std::int64_t transmitMicros = 0;
  bool operator==(const TimeSync&) const = default;
};

// Sent by the sink once an update is on screen.
struct Ack {
  std::uint64_t seq = 0;
  MsgType ackedType = MsgType::kFrameUpdate;
  std::int64_t recvMicros = 0;
  std::int64_t composedMicros = 0;  // scene composed, before impairments
  std::int64_t appliedMicros = 0;   // impairments applied
  std::int64_t renderedMicros = 0;
  bool operator==(const Ack&) const = default;
};

using Message = std::variant<TouchEvent, MotionEvent, FrameUpdate, AudioChunk, PoseUpdate, MeshUpdate, ConfigUpdate,
                             TimeSync, Ack>;

MsgType type_of(const Message& m);
std::string type_name(MsgType t);

std::vector<std::uint8_t> encode(const Message& m);  // throws SizeError
void encode_into(const Message& m, std::vector<std::uint8_t>& out);

struct Decoded {
  Message message;
  std::size_t consumed = 0;
};
struct NeedMore {
  std::size_t count = 0;  // additional bytes required before decoding can progress
};
using DecodeResult = std::variant<Decoded, NeedMore>;

// Decodes one message starting at offset. Throws ProtocolError on bad
// magic, version, type, oversize length or a malformed payload.
DecodeResult decode(std::span<const std::uint8_t> bytes, std::size_t offset = 0);

// Incremental framing over a byte stream.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Message> next();  // throws ProtocolError; the stream must then be reset
  void reset();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

// Detects gaps in a per-sender sequence.
class SeqTracker {
 public:
  void observe(std::uint64_t seq);
  // Discontinuities seen, and the sequence numbers they skipped.
  std::uint64_t gaps() const { return gaps_; }
  std::uint64_t missing() const { return missing_; }
  std::uint64_t received() const { return received_; }

 private:
  std::optional<std::uint64_t> last_;
  std::uint64_t gaps_ = 0;
  std::uint64_t missing_ = 0;
  std::uint64_t received_ = 0;
};

struct DiffGateState {
  std::optional<std::uint64_t> lastDigest;
  std::uint64_t nextSeq = 0;
  std::uint64_t emitted = 0;
  std::uint64_t suppressed = 0;
};

// Emits a FrameUpdate only when the image digest differs from the last one sent.
std::optional<FrameUpdate> diff_gate(DiffGateState& state, const Image& image, std::int64_t tMicros,
                                     std::int64_t causeMicros = -1, FrameEncoding encoding = FrameEncoding::kPng);

Image decode_frame(const FrameUpdate& f);

// Texture crop helpers for MeshUpdate.
void attach_texture(MeshUpdate& u, const Image& source, const std::array<int, 4>& bbox);
// Texture as an image plus the mesh with uv shifted into it.
Image mesh_texture(const MeshUpdate& u, HandMesh* shiftedMesh = nullptr);

struct ScaleResult {
  Image image;
  bool upscaled = false;
};

// Bilinear resample to the stream size (pixel-centre aligned).
ScaleResult scale_display_checked(const Image& image, const VirtualDisplayConfig& cfg);
Image scale_display(const Image& image, const VirtualDisplayConfig& cfg);
Image resize_bilinear(const Image& image, int width, int height);

// Touch trace replay files: JSON Lines of {tMicros, x, y, action}.
std::vector<TouchEvent> load_touch_trace(const std::string& path);
void save_touch_trace(const std::vector<TouchEvent>& events, const std::string& path);
std::string action_name(TouchAction a);
TouchAction action_from_name(const std::string& s);

}  // namespace empathd::wire
