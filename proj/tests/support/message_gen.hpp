#pragma once

// Random well-formed wire messages for round-trip testing.

#include <cmath>
#include <cstring>
#include <random>

#include "empathd/wire.hpp"

namespace gen {

using namespace empathd;
using namespace empathd::wire;

class MessageGen {
 public:
  explicit MessageGen(std::uint64_t seed) : rng_(seed) {}

  // Any finite double, including subnormals and signed zero.
  double f64() {
    for (;;) {
      const std::uint64_t bits = rng_();
      double d;
      std::memcpy(&d, &bits, sizeof d);
      if (std::isfinite(d)) return d;
    }
  }
  std::int64_t i64() { return static_cast<std::int64_t>(rng_()); }
  std::uint64_t u64() { return rng_(); }
  std::size_t small(std::size_t n) { return rng_() % (n + 1); }

  Message next() {
    switch (rng_() % 9) {
      case 0: {
        TouchEvent e{u64(), f64(), f64(), static_cast<TouchAction>(rng_() % 3), i64(), i64()};
        return e;
      }
      case 1: {
        MotionEvent e;
        e.seq = u64();
        for (auto& v : e.accel) v = f64();
        for (auto& v : e.gyro) v = f64();
        e.tMicros = i64();
        e.sentMicros = i64();
        return e;
      }
      case 2: {
        FrameUpdate f;
        f.seq = u64();
        f.tMicros = i64();
        f.causeMicros = i64();
        f.width = static_cast<std::uint32_t>(rng_());
        f.height = static_cast<std::uint32_t>(rng_());
        f.encoding = static_cast<FrameEncoding>(rng_() % 2);
        f.payload.resize(small(300));
        for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng_());
        return f;
      }
      case 3: {
        AudioChunk a;
        a.seq = u64();
        a.tMicros = i64();
        a.sampleRateHz = f64();
        a.samples.resize(small(64));
        for (auto& s : a.samples) s = f64();
        return a;
      }
      case 4: {
        PoseUpdate p;
        p.seq = u64();
        p.tMicros = i64();
        for (auto& v : p.T) v = f64();
        for (auto& v : p.R) v = f64();
        return p;
      }
      case 5: {
        MeshUpdate u;
        u.seq = u64();
        u.tMicros = i64();
        u.causeMicros = i64();
        u.mesh.sourceFrameId = i64();
        const std::size_t nv = small(20);
        for (std::size_t i = 0; i < nv; ++i) {
          u.mesh.vertices.emplace_back(f64(), f64(), f64());
          u.mesh.uv.emplace_back(f64(), f64());
        }
        if (nv > 0) {
          const std::size_t nt = small(15);
          for (std::size_t i = 0; i < nt; ++i) {
            u.mesh.triangles.push_back({static_cast<std::uint32_t>(rng_() % nv), static_cast<std::uint32_t>(rng_() % nv),
                                        static_cast<std::uint32_t>(rng_() % nv)});
          }
        }
        u.texX = static_cast<std::uint32_t>(rng_());
        u.texY = static_cast<std::uint32_t>(rng_());
        u.texWidth = static_cast<std::uint32_t>(small(6));
        u.texHeight = static_cast<std::uint32_t>(small(6));
        u.texture.resize(std::size_t{u.texWidth} * u.texHeight * 3);
        for (auto& b : u.texture) b = static_cast<std::uint8_t>(rng_());
        return u;
      }
      case 6: {
        ConfigUpdate c;
        c.version = u64();
        c.profileJson.resize(small(80));
        for (auto& ch : c.profileJson) ch = static_cast<char>(rng_());
        return c;
      }
      case 7: {
        TimeSync t{u64(), i64(), i64(), i64()};
        return t;
      }
      default: {
        Ack a;
        a.seq = u64();
        a.ackedType = static_cast<MsgType>(1 + rng_() % 9);
        a.recvMicros = i64();
        a.composedMicros = i64();
        a.appliedMicros = i64();
        a.renderedMicros = i64();
        return a;
      }
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace gen
