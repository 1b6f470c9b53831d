#include <bit>
#include <cstring>

#include "empathd/errors.hpp"
#include "empathd/wire.hpp"

namespace empathd::wire {

namespace {

static_assert(std::endian::native == std::endian::little, "wire codec assumes a little-endian host");

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void i64(std::int64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  template <std::size_t N>
  void f64s(const std::array<double, N>& a) {
    for (double v : a) f64(v);
  }
  void count(std::size_t n) {
    if (n > 0xFFFFFFFFu) throw SizeError("wire: element count exceeds 32 bits");
    u32(static_cast<std::uint32_t>(n));
  }
  void bytes(const std::uint8_t* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::uint8_t u8() { return pod<std::uint8_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int64_t i64() { return pod<std::int64_t>(); }
  double f64() { return pod<double>(); }
  template <std::size_t N>
  std::array<double, N> f64s() {
    std::array<double, N> a;
    for (auto& v : a) v = f64();
    return a;
  }
  // Element count checked against the bytes left.
  std::size_t count(std::size_t elementSize) {
    const std::size_t n = u32();
    if (elementSize > 0 && n > remaining() / elementSize) throw ProtocolError("wire: element count exceeds payload");
    return n;
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> v(p_ + pos_, p_ + pos_ + n);
    pos_ += n;
    return v;
  }
  std::size_t remaining() const { return n_ - pos_; }
  void finish() const {
    if (pos_ != n_) throw ProtocolError("wire: trailing bytes in payload");
  }

 private:
  void need(std::size_t k) const {
    if (k > n_ - pos_) throw ProtocolError("wire: payload shorter than its fields");
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void write_payload(const Message& m, Writer& w) {
  std::visit(Overloaded{
                 [&](const TouchEvent& e) {
                   w.u64(e.seq);
                   w.f64(e.x);
                   w.f64(e.y);
                   w.u8(static_cast<std::uint8_t>(e.action));
                   w.i64(e.tMicros);
                   w.i64(e.sentMicros);
                 },
                 [&](const MotionEvent& e) {
                   w.u64(e.seq);
                   w.f64s(e.accel);
                   w.f64s(e.gyro);
                   w.i64(e.tMicros);
                   w.i64(e.sentMicros);
                 },
                 [&](const FrameUpdate& f) {
                   w.u64(f.seq);
                   w.i64(f.tMicros);
                   w.i64(f.causeMicros);
                   w.u32(f.width);
                   w.u32(f.height);
                   w.u8(static_cast<std::uint8_t>(f.encoding));
                   w.count(f.payload.size());
                   w.bytes(f.payload.data(), f.payload.size());
                 },
                 [&](const AudioChunk& a) {
                   w.u64(a.seq);
                   w.i64(a.tMicros);
                   w.f64(a.sampleRateHz);
                   w.count(a.samples.size());
                   for (double s : a.samples) w.f64(s);
                 },
                 [&](const PoseUpdate& p) {
                   w.u64(p.seq);
                   w.i64(p.tMicros);
                   w.f64s(p.T);
                   w.f64s(p.R);
                 },
                 [&](const MeshUpdate& u) {
                   w.u64(u.seq);
                   w.i64(u.tMicros);
                   w.i64(u.causeMicros);
                   w.i64(u.mesh.sourceFrameId);
                   w.count(u.mesh.vertices.size());
                   for (std::size_t i = 0; i < u.mesh.vertices.size(); ++i) {
                     const auto& v = u.mesh.vertices[i];
                     w.f64(v.x());
                     w.f64(v.y());
                     w.f64(v.z());
                     const Vec2 uv = i < u.mesh.uv.size() ? u.mesh.uv[i] : Vec2::Zero();
                     w.f64(uv.x());
                     w.f64(uv.y());
                   }
                   w.count(u.mesh.triangles.size());
                   for (const auto& t : u.mesh.triangles) {
                     w.u32(t[0]);
                     w.u32(t[1]);
                     w.u32(t[2]);
                   }
                   w.u32(u.texX);
                   w.u32(u.texY);
                   w.u32(u.texWidth);
                   w.u32(u.texHeight);
                   w.count(u.texture.size());
                   w.bytes(u.texture.data(), u.texture.size());
                 },
                 [&](const ConfigUpdate& c) {
                   w.u64(c.version);
                   w.count(c.profileJson.size());
                   w.bytes(reinterpret_cast<const std::uint8_t*>(c.profileJson.data()), c.profileJson.size());
                 },
                 [&](const TimeSync& t) {
                   w.u64(t.seq);
                   w.i64(t.originMicros);
                   w.i64(t.receiveMicros);
                   w.i64(t.transmitMicros);
                 },
                 [&](const Ack& a) {
                   w.u64(a.seq);
                   w.u8(static_cast<std::uint8_t>(a.ackedType));
                   w.i64(a.recvMicros);
                   w.i64(a.composedMicros);
                   w.i64(a.appliedMicros);
                   w.i64(a.renderedMicros);
                 },
             },
             m);
}

Message read_payload(MsgType type, Reader& r) {
  switch (type) {
    case MsgType::kTouch: {
      TouchEvent e;
      e.seq = r.u64();
      e.x = r.f64();
      e.y = r.f64();
      const auto action = r.u8();
      if (action > 2) throw ProtocolError("wire: unknown touch action " + std::to_string(action));
      e.action = static_cast<TouchAction>(action);
      e.tMicros = r.i64();
      e.sentMicros = r.i64();
      return e;
    }
    case MsgType::kMotion: {
      MotionEvent e;
      e.seq = r.u64();
      e.accel = r.f64s<3>();
      e.gyro = r.f64s<3>();
      e.tMicros = r.i64();
      e.sentMicros = r.i64();
      return e;
    }
    case MsgType::kFrameUpdate: {
      FrameUpdate f;
      f.seq = r.u64();
      f.tMicros = r.i64();
      f.causeMicros = r.i64();
      f.width = r.u32();
      f.height = r.u32();
      const auto enc = r.u8();
      if (enc > 1) throw ProtocolError("wire: unknown frame encoding " + std::to_string(enc));
      f.encoding = static_cast<FrameEncoding>(enc);
      f.payload = r.bytes(r.count(1));
      return f;
    }
    case MsgType::kAudioChunk: {
      AudioChunk a;
      a.seq = r.u64();
      a.tMicros = r.i64();
      a.sampleRateHz = r.f64();
      a.samples.resize(r.count(8));
      for (auto& s : a.samples) s = r.f64();
      return a;
    }
    case MsgType::kPose: {
      PoseUpdate p;
      p.seq = r.u64();
      p.tMicros = r.i64();
      p.T = r.f64s<3>();
      p.R = r.f64s<9>();
      return p;
    }
    case MsgType::kMesh: {
      MeshUpdate u;
      u.seq = r.u64();
      u.tMicros = r.i64();
      u.causeMicros = r.i64();
      u.mesh.sourceFrameId = r.i64();
      const std::size_t nv = r.count(40);
      u.mesh.vertices.reserve(nv);
      u.mesh.uv.reserve(nv);
      for (std::size_t i = 0; i < nv; ++i) {
        const double x = r.f64(), y = r.f64(), z = r.f64();
        u.mesh.vertices.emplace_back(x, y, z);
        const double uu = r.f64(), vv = r.f64();
        u.mesh.uv.emplace_back(uu, vv);
      }
      const std::size_t nt = r.count(12);
      u.mesh.triangles.reserve(nt);
      for (std::size_t i = 0; i < nt; ++i) {
        Triangle t{r.u32(), r.u32(), r.u32()};
        for (auto idx : t) {
          if (idx >= nv) throw ProtocolError("wire: mesh triangle index out of range");
        }
        u.mesh.triangles.push_back(t);
      }
      u.texX = r.u32();
      u.texY = r.u32();
      u.texWidth = r.u32();
      u.texHeight = r.u32();
      u.texture = r.bytes(r.count(1));
      if (u.texture.size() != std::uint64_t{u.texWidth} * u.texHeight * 3) {
        throw ProtocolError("wire: mesh texture size does not match its dimensions");
      }
      return u;
    }
    case MsgType::kConfig: {
      ConfigUpdate c;
      c.version = r.u64();
      const auto b = r.bytes(r.count(1));
      c.profileJson.assign(b.begin(), b.end());
      return c;
    }
    case MsgType::kTimeSync: {
      TimeSync t;
      t.seq = r.u64();
      t.originMicros = r.i64();
      t.receiveMicros = r.i64();
      t.transmitMicros = r.i64();
      return t;
    }
    case MsgType::kAck: {
      Ack a;
      a.seq = r.u64();
      const auto t = r.u8();
      if (t < 1 || t > 9) throw ProtocolError("wire: ack of unknown type " + std::to_string(t));
      a.ackedType = static_cast<MsgType>(t);
      a.recvMicros = r.i64();
      a.composedMicros = r.i64();
      a.appliedMicros = r.i64();
      a.renderedMicros = r.i64();
      return a;
    }
  }
  throw ProtocolError("wire: unknown message type");
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

bool MeshUpdate::operator==(const MeshUpdate& o) const {
  if (seq != o.seq || tMicros != o.tMicros || causeMicros != o.causeMicros) return false;
  if (mesh.sourceFrameId != o.mesh.sourceFrameId || mesh.triangles != o.mesh.triangles) return false;
  if (texX != o.texX || texY != o.texY || texWidth != o.texWidth || texHeight != o.texHeight) return false;
  if (texture != o.texture) return false;
  if (mesh.vertices.size() != o.mesh.vertices.size() || mesh.uv.size() != o.mesh.uv.size()) return false;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (!same_bits(mesh.vertices[i][k], o.mesh.vertices[i][k])) return false;
    }
  }
  for (std::size_t i = 0; i < mesh.uv.size(); ++i) {
    for (int k = 0; k < 2; ++k) {
      if (!same_bits(mesh.uv[i][k], o.mesh.uv[i][k])) return false;
    }
  }
  return true;
}

MsgType type_of(const Message& m) { return static_cast<MsgType>(m.index() + 1); }

std::string type_name(MsgType t) {
  switch (t) {
    case MsgType::kTouch: return "Touch";
    case MsgType::kMotion: return "Motion";
    case MsgType::kFrameUpdate: return "FrameUpdate";
    case MsgType::kAudioChunk: return "AudioChunk";
    case MsgType::kPose: return "PoseUpdate";
    case MsgType::kMesh: return "MeshUpdate";
    case MsgType::kConfig: return "ConfigUpdate";
    case MsgType::kTimeSync: return "TimeSync";
    case MsgType::kAck: return "Ack";
  }
  return "Unknown";
}

void encode_into(const Message& m, std::vector<std::uint8_t>& out) {
  const std::size_t start = out.size();
  out.push_back(kMagic);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(type_of(m)));
  out.resize(start + kHeaderSize);
  Writer w(out);
  write_payload(m, w);
  const std::size_t len = out.size() - start - kHeaderSize;
  if (len > kMaxPayload) {
    out.resize(start);
    throw SizeError("wire: payload of " + std::to_string(len) + " bytes exceeds the 16 MiB limit");
  }
  const auto l = static_cast<std::uint32_t>(len);
  std::memcpy(out.data() + start + 3, &l, 4);
}

std::vector<std::uint8_t> encode(const Message& m) {
  std::vector<std::uint8_t> out;
  encode_into(m, out);
  return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset > bytes.size()) throw ProtocolError("wire: decode offset past the buffer");
  const std::uint8_t* p = bytes.data() + offset;
  const std::size_t avail = bytes.size() - offset;
  if (avail >= 1 && p[0] != kMagic) throw ProtocolError("wire: bad magic byte");
  if (avail >= 2 && p[1] != kVersion) throw ProtocolError("wire: unsupported version " + std::to_string(p[1]));
  if (avail >= 3 && (p[2] < 1 || p[2] > 9)) throw ProtocolError("wire: unknown message type " + std::to_string(p[2]));
  if (avail < kHeaderSize) return NeedMore{kHeaderSize - avail};
  std::uint32_t len;
  std::memcpy(&len, p + 3, 4);
  if (len > kMaxPayload) throw ProtocolError("wire: declared payload length " + std::to_string(len) + " exceeds limit");
  if (avail < kHeaderSize + len) return NeedMore{kHeaderSize + len - avail};
  Reader r(p + kHeaderSize, len);
  Message m = read_payload(static_cast<MsgType>(p[2]), r);
  r.finish();
  return Decoded{std::move(m), kHeaderSize + len};
}

void StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (pos_ > 0 && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> StreamDecoder::next() {
  auto r = decode(buf_, pos_);
  if (auto* d = std::get_if<Decoded>(&r)) {
    pos_ += d->consumed;
    return std::move(d->message);
  }
  return std::nullopt;
}

void StreamDecoder::reset() {
  buf_.clear();
  pos_ = 0;
}

void SeqTracker::observe(std::uint64_t seq) {
  ++received_;
  if (last_ && seq > *last_ + 1) {
    ++gaps_;
    missing_ += seq - *last_ - 1;
  }
  if (!last_ || seq > *last_) last_ = seq;
}

}  // namespace empathd::wire
