#include <algorithm>
#include <cmath>

#include "empathd/errors.hpp"
#include "empathd/io.hpp"
#include "empathd/wire.hpp"

namespace empathd::wire {

std::optional<FrameUpdate> diff_gate(DiffGateState& state, const Image& image, std::int64_t tMicros,
                                     std::int64_t causeMicros, FrameEncoding encoding) {
  const std::uint64_t digest = image_digest(image);
  if (state.lastDigest && *state.lastDigest == digest) {
    ++state.suppressed;
    return std::nullopt;
  }
  state.lastDigest = digest;
  ++state.emitted;

  FrameUpdate f;
  f.seq = state.nextSeq++;
  f.tMicros = tMicros;
  f.causeMicros = causeMicros;
  f.width = static_cast<std::uint32_t>(image.width);
  f.height = static_cast<std::uint32_t>(image.height);
  f.encoding = encoding;
  if (encoding == FrameEncoding::kPng) {
    f.payload = encode_png(image);
  } else {
    f.payload.resize(image.data.size());
    std::transform(image.data.begin(), image.data.end(), f.payload.begin(), [](float v) {
      return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
    });
  }
  return f;
}

Image decode_frame(const FrameUpdate& f) {
  if (f.encoding == FrameEncoding::kPng) {
    Image img = decode_png_rgb(f.payload);
    if (img.width != static_cast<int>(f.width) || img.height != static_cast<int>(f.height)) {
      throw FormatError("frame update: PNG size differs from the declared size");
    }
    return img;
  }
  const std::size_t expected = static_cast<std::size_t>(f.width) * f.height * 3;
  if (f.payload.size() != expected) throw FormatError("frame update: raw payload size mismatch");
  Image img(static_cast<int>(f.width), static_cast<int>(f.height));
  std::transform(f.payload.begin(), f.payload.end(), img.data.begin(), [](std::uint8_t v) { return v / 255.f; });
  return img;
}

void attach_texture(MeshUpdate& u, const Image& source, const std::array<int, 4>& bbox) {
  const int x0 = std::clamp(bbox[0], 0, source.width);
  const int y0 = std::clamp(bbox[1], 0, source.height);
  const int w = std::clamp(bbox[2], 0, source.width - x0);
  const int h = std::clamp(bbox[3], 0, source.height - y0);
  u.texX = static_cast<std::uint32_t>(x0);
  u.texY = static_cast<std::uint32_t>(y0);
  u.texWidth = static_cast<std::uint32_t>(w);
  u.texHeight = static_cast<std::uint32_t>(h);
  u.texture.resize(static_cast<std::size_t>(w) * h * 3);
  std::size_t k = 0;
  for (int y = y0; y < y0 + h; ++y) {
    const float* row = source.at(x0, y);
    for (int i = 0; i < w * 3; ++i) {
      u.texture[k++] = static_cast<std::uint8_t>(std::lround(std::clamp(row[i], 0.f, 1.f) * 255.f));
    }
  }
}

Image mesh_texture(const MeshUpdate& u, HandMesh* shiftedMesh) {
  Image img(static_cast<int>(u.texWidth), static_cast<int>(u.texHeight));
  std::transform(u.texture.begin(), u.texture.end(), img.data.begin(), [](std::uint8_t v) { return v / 255.f; });
  if (shiftedMesh) {
    *shiftedMesh = u.mesh;
    const Vec2 off(u.texX, u.texY);
    for (auto& uv : shiftedMesh->uv) uv -= off;
  }
  return img;
}

}  // namespace empathd::wire
