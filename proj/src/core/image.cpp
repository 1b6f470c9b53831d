#include "empathd/image.hpp"

#include <cmath>
#include <cstring>

#include "empathd/errors.hpp"

namespace empathd {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = fill[0];
    data[i + 1] = fill[1];
    data[i + 2] = fill[2];
  }
}

std::size_t SegmentMask::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b != 0;
  return n;
}

double mask_iou(const SegmentMask& a, const SegmentMask& b) {
  if (a.width != b.width || a.height != b.height) throw FormatError("mask_iou: dimension mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool x = a.bits[i] != 0, y = b.bits[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::uint32_t> mask_to_rle(const SegmentMask& m) {
  std::vector<std::uint32_t> runs;
  bool current = false;
  std::uint32_t run = 0;
  for (auto b : m.bits) {
    const bool v = b != 0;
    if (v != current) {
      runs.push_back(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  runs.push_back(run);
  return runs;
}

SegmentMask mask_from_rle(const std::vector<std::uint32_t>& runs, int width, int height) {
  SegmentMask m(width, height);
  std::size_t pos = 0;
  bool value = false;
  for (auto r : runs) {
    if (pos + r > m.bits.size()) throw FormatError("mask RLE overruns mask dimensions");
    std::memset(m.bits.data() + pos, value ? 1 : 0, r);
    pos += r;
    value = !value;
  }
  if (pos != m.bits.size()) throw FormatError("mask RLE does not cover the mask");
  return m;
}

void RgbdFrame::validate() const {
  const int w = intrinsics.width, h = intrinsics.height;
  if (color.width != w || color.height != h || depth.width != w || depth.height != h) {
    throw FormatError("RGB-D frame dimensions do not match intrinsics");
  }
  for (float d : depth.data) {
    if (!std::isfinite(d) || d < 0.f) throw FormatError("RGB-D frame has a negative or non-finite depth");
  }
}

float quantize_channel(float v) {
  const float c = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return std::round(c * 255.f) / 255.f;
}

float quantize_depth(float metres) {
  if (!(metres > 0.f)) return 0.f;
  const float mm = std::round(metres * 1000.f);
  if (mm > 65535.f) return 0.f;
  return mm / 1000.f;
}

std::uint64_t image_digest(const Image& img) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  mix(&img.width, sizeof img.width);
  mix(&img.height, sizeof img.height);
  mix(img.data.data(), img.data.size() * sizeof(float));
  return h;
}

Image crop(const Image& img, int x0, int y0, int w, int h) {
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    std::memcpy(out.at(0, y), img.at(x0, y0 + y), static_cast<std::size_t>(w) * 3 * sizeof(float));
  }
  return out;
}

}  // namespace empathd
