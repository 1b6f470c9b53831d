#include <doctest.h>

#include <cstring>
#include <fstream>

#include "empathd/errors.hpp"
#include "empathd/wire.hpp"
#include "message_gen.hpp"
#include "tmpdir.hpp"

using namespace empathd;
using namespace empathd::wire;

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_le(out, bits, 8);
}

Decoded decoded(const DecodeResult& r) {
  REQUIRE(std::holds_alternative<Decoded>(r));
  return std::get<Decoded>(r);
}

}  // namespace

TEST_CASE("touch event byte layout") {
  TouchEvent e;
  e.seq = 3;
  e.x = 100;
  e.y = 200;
  e.action = TouchAction::kDown;
  e.tMicros = 0;
  e.sentMicros = 0x0102030405;

  std::vector<std::uint8_t> payload;
  put_le(payload, 3, 8);
  put_f64(payload, 100.0);
  put_f64(payload, 200.0);
  payload.push_back(0);
  put_le(payload, 0, 8);
  put_le(payload, 0x0102030405, 8);
  std::vector<std::uint8_t> expect{0xED, 0x01, 0x01};
  put_le(expect, payload.size(), 4);
  expect.insert(expect.end(), payload.begin(), payload.end());

  CHECK(encode(e) == expect);
  const auto d = decoded(decode(expect));
  CHECK(d.consumed == expect.size());
  CHECK(std::get<TouchEvent>(d.message) == e);
}

TEST_CASE("every message kind round trips") {
  gen::MessageGen g(1);
  int seen[10] = {};
  for (int i = 0; i < 2000; ++i) {
    const Message m = g.next();
    const auto bytes = encode(m);
    CHECK(bytes[0] == kMagic);
    CHECK(bytes[2] == static_cast<std::uint8_t>(type_of(m)));
    const auto d = decoded(decode(bytes));
    CHECK(d.consumed == bytes.size());
    CHECK(encode(d.message) == bytes);
    CHECK(d.message == m);
    ++seen[static_cast<int>(type_of(m))];
  }
  for (int t = 1; t <= 9; ++t) CHECK(seen[t] > 0);
}

TEST_CASE("partial buffers ask for more bytes") {
  TouchEvent e;
  const auto bytes = encode(e);
  const std::vector<std::uint8_t> three(bytes.begin(), bytes.begin() + 3);
  const auto r = decode(three);
  REQUIRE(std::holds_alternative<NeedMore>(r));
  CHECK(std::get<NeedMore>(r).count >= 4);

  const std::vector<std::uint8_t> body(bytes.begin(), bytes.end() - 5);
  const auto r2 = decode(body);
  REQUIRE(std::holds_alternative<NeedMore>(r2));
  CHECK(std::get<NeedMore>(r2).count == 5);

  CHECK(std::holds_alternative<NeedMore>(decode(std::vector<std::uint8_t>{})));
}

TEST_CASE("malformed headers are protocol errors") {
  auto bytes = encode(TouchEvent{});
  auto bad = bytes;
  bad[0] = 0x00;
  CHECK_THROWS_AS(decode(bad), ProtocolError);
  bad = bytes;
  bad[1] = 0x02;
  CHECK_THROWS_AS(decode(bad), ProtocolError);
  bad = bytes;
  bad[2] = 0x7F;
  CHECK_THROWS_AS(decode(bad), ProtocolError);
  bad = bytes;
  bad[3] = 0xFF;
  bad[4] = 0xFF;
  bad[5] = 0xFF;
  bad[6] = 0x7F;
  CHECK_THROWS_AS(decode(bad), ProtocolError);
  // Declared length longer than the fields it holds.
  bad = bytes;
  bad[3] = static_cast<std::uint8_t>(bad[3] + 1);
  bad.push_back(0);
  CHECK_THROWS_AS(decode(bad), ProtocolError);
  // Touch action outside the enum.
  bad = bytes;
  bad[kHeaderSize + 24] = 9;
  CHECK_THROWS_AS(decode(bad), ProtocolError);
}

TEST_CASE("oversize payload is a size error") {
  FrameUpdate f;
  f.payload.resize(kMaxPayload + 1);
  CHECK_THROWS_AS(encode(f), SizeError);
}

TEST_CASE("concatenated stream decodes message by message") {
  gen::MessageGen g(2);
  std::vector<Message> msgs;
  std::vector<std::uint8_t> stream;
  std::vector<std::size_t> sizes;
  for (int i = 0; i < 3; ++i) {
    msgs.push_back(g.next());
    const auto b = encode(msgs.back());
    sizes.push_back(b.size());
    stream.insert(stream.end(), b.begin(), b.end());
  }
  std::size_t off = 0;
  for (int i = 0; i < 3; ++i) {
    const auto d = decoded(decode(stream, off));
    CHECK(d.consumed == sizes[i]);
    CHECK(d.message == msgs[i]);
    off += d.consumed;
  }
  CHECK(off == stream.size());
}

TEST_CASE("stream decoder reassembles arbitrary chunking") {
  gen::MessageGen g(3);
  std::vector<Message> msgs;
  std::vector<std::uint8_t> stream;
  for (int i = 0; i < 200; ++i) {
    msgs.push_back(g.next());
    encode_into(msgs.back(), stream);
  }
  StreamDecoder dec;
  std::mt19937 rng(4);
  std::vector<Message> out;
  for (std::size_t pos = 0; pos < stream.size();) {
    const std::size_t n = std::min<std::size_t>(1 + rng() % 97, stream.size() - pos);
    dec.feed(std::span<const std::uint8_t>(stream.data() + pos, n));
    pos += n;
    while (auto m = dec.next()) out.push_back(std::move(*m));
  }
  CHECK(out == msgs);
  CHECK(dec.buffered() == 0);

  StreamDecoder broken;
  const std::uint8_t junk[] = {0x00, 0x01, 0x02};
  broken.feed(junk);
  CHECK_THROWS_AS(broken.next(), ProtocolError);
  broken.reset();
  const auto ok = encode(TouchEvent{});
  broken.feed(ok);
  CHECK(broken.next().has_value());
}

TEST_CASE("sequence gap tracking") {
  SeqTracker t;
  for (std::uint64_t s : {0, 1, 2, 5, 6, 9}) t.observe(s);
  CHECK(t.gaps() == 2);
  CHECK(t.missing() == 4);
  CHECK(t.received() == 6);
}

TEST_CASE("diff gate") {
  DiffGateState st;
  Image img(30, 20, {0.2f, 0.4f, 0.6f});
  const auto first = diff_gate(st, img, 10);
  REQUIRE(first.has_value());
  CHECK(first->seq == 0);
  CHECK(first->width == 30);
  CHECK(decode_frame(*first) == img);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(diff_gate(st, img, 20 + i).has_value());
  CHECK(st.emitted == 1);
  CHECK(st.suppressed == 100);

  img.at(29, 19)[0] = 1.0f;
  const auto changed = diff_gate(st, img, 200, 150);
  REQUIRE(changed.has_value());
  CHECK(changed->seq == 1);
  CHECK(changed->causeMicros == 150);

  const auto raw = diff_gate(st, Image(4, 4, {1, 0, 0}), 300, -1, FrameEncoding::kRawRgb8);
  REQUIRE(raw.has_value());
  CHECK(raw->payload.size() == 4 * 4 * 3);
  CHECK(decode_frame(*raw) == Image(4, 4, {1, 0, 0}));
}

TEST_CASE("mesh texture crop") {
  Image src(20, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) src.set(x, y, {x / 255.f, y / 255.f, 128 / 255.f});
  MeshUpdate u;
  u.mesh.vertices = {{0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
  u.mesh.uv = {{5, 3}, {9, 3}, {5, 7}};
  u.mesh.triangles = {{0, 1, 2}};
  attach_texture(u, src, {5, 3, 5, 5});
  CHECK(u.texWidth == 5);
  CHECK(u.texture.size() == 75);
  const auto back = std::get<MeshUpdate>(decoded(decode(encode(u))).message);
  HandMesh shifted;
  const Image tex = mesh_texture(back, &shifted);
  CHECK(tex == crop(src, 5, 3, 5, 5));
  CHECK(shifted.uv[0] == Vec2(0, 0));
  CHECK(shifted.uv[1] == Vec2(4, 0));
}

TEST_CASE("scale display") {
  const VirtualDisplayConfig cfg;
  const Image big(1080, 1920, {0.3f, 0.6f, 0.9f});
  const Image s = scale_display(big, cfg);
  CHECK(s.width == 485);
  CHECK(s.height == 863);
  for (std::size_t i = 0; i < s.data.size(); i += 3) {
    CHECK(s.data[i] == doctest::Approx(0.3f));
    CHECK(s.data[i + 2] == doctest::Approx(0.9f));
  }
  Image native(485, 863);
  for (std::size_t i = 0; i < native.data.size(); ++i) native.data[i] = static_cast<float>(i % 251) / 251.f;
  CHECK(scale_display(native, cfg) == native);

  const auto up = scale_display_checked(Image(100, 178), cfg);
  CHECK(up.upscaled);
  CHECK(up.image.width == 485);
  CHECK_FALSE(scale_display_checked(big, cfg).upscaled);
}

TEST_CASE("touch trace files") {
  testutil::TempDir dir;
  std::vector<TouchEvent> events;
  for (int i = 0; i < 5; ++i) {
    TouchEvent e;
    e.tMicros = i * 1000;
    e.x = 10 * i;
    e.y = 20 * i + 0.5;
    e.action = static_cast<TouchAction>(i % 3);
    events.push_back(e);
  }
  save_touch_trace(events, dir.file("t.jsonl"));
  const auto back = load_touch_trace(dir.file("t.jsonl"));
  REQUIRE(back.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(back[i].tMicros == events[i].tMicros);
    CHECK(back[i].x == events[i].x);
    CHECK(back[i].y == events[i].y);
    CHECK(back[i].action == events[i].action);
  }
  std::ofstream(dir.file("bad.jsonl")) << "{\"tMicros\": 0, \"x\": 1, \"y\": 2, \"action\": \"tap\"}\n";
  CHECK_THROWS(load_touch_trace(dir.file("bad.jsonl")));
}
