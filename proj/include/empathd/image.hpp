#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "empathd/geometry.hpp"

namespace empathd {

using Rgb = std::array<float, 3>;

// Interleaved RGB, linear [0,1] floats, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, Rgb fill = {0.f, 0.f, 0.f});

  bool empty() const { return width == 0 || height == 0; }
  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }
  float* at(int x, int y) { return data.data() + index(x, y); }
  const float* at(int x, int y) const { return data.data() + index(x, y); }
  Rgb pixel(int x, int y) const {
    const float* p = at(x, y);
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, const Rgb& c) {
    float* p = at(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  bool operator==(const Image&) const = default;
};

// Single-channel float image (used for depth in metres and scalar planes).
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Plane() = default;
  Plane(int w, int h, float fill = 0.f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Plane&) const = default;
};

// Boolean foreground grid (fgMask).
struct SegmentMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  SegmentMask() = default;
  SegmentMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool get(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  // Out-of-bounds reads as background.
  bool get_or_false(int x, int y) const { return in_bounds(x, y) && get(x, y); }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;

  bool operator==(const SegmentMask&) const = default;
};

double mask_iou(const SegmentMask& a, const SegmentMask& b);

// Row-major run lengths, starting with a (possibly zero) background run.
std::vector<std::uint32_t> mask_to_rle(const SegmentMask& m);
SegmentMask mask_from_rle(const std::vector<std::uint32_t>& runs, int width, int height);

struct RgbdFrame {
  CameraIntrinsics intrinsics;
  Image color;
  Plane depth;  // metres, 0 = invalid
  std::int64_t timestampUs = 0;

  void validate() const;  // throws FormatError

  bool operator==(const RgbdFrame&) const = default;
};

// Quantise colour to the 8-bit grid and depth to millimetres, matching the
// on-disk representation.
float quantize_channel(float v);
float quantize_depth(float metres);

// 64-bit FNV-1a over dimensions and raw pixel bytes.
std::uint64_t image_digest(const Image& img);

Image crop(const Image& img, int x0, int y0, int w, int h);

}  // namespace empathd
