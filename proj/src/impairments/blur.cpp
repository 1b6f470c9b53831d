#include <algorithm>
#include <cmath>
#include <cstring>

#include "empathd/errors.hpp"
#include "empathd/impairments.hpp"

namespace empathd {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace {

using Vec8 = float __attribute__((vector_size(32)));
using UnalignedVec8 = float __attribute__((vector_size(32), aligned(4), may_alias));

#define LOAD8(p) (*reinterpret_cast<const UnalignedVec8*>(p))
#define STORE8(p, v) (*reinterpret_cast<UnalignedVec8*>(p) = (v))

// Horizontal taps on one edge-padded interleaved RGB row.
__attribute__((target_clones("avx2", "default"))) void horizontal_row(float* __restrict dst, const float* c,
                                                                      const float* k, int r, std::size_t n) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    Vec8 acc = k[0] * LOAD8(c + j);
    for (int i = 1; i <= r; ++i) acc += k[i] * (LOAD8(c + j - 3 * i) + LOAD8(c + j + 3 * i));
    STORE8(dst + j, acc);
  }
  for (; j < n; ++j) {
    float acc = k[0] * c[j];
    for (int i = 1; i <= r; ++i) acc += k[i] * (c[j - 3 * i] + c[j + 3 * i]);
    dst[j] = acc;
  }
}

// Four vertically adjacent output rows from rows[0 .. 2r+3]; each input row is
// loaded once and feeds every output row it contributes to.
__attribute__((target_clones("avx2", "default"))) void vertical_rows4(float* const* dst, const float* const* rows,
                                                                      const float* full, int r, std::size_t n) {
  const int taps = 2 * r + 1;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    Vec8 a0{}, a1{}, a2{}, a3{};
    for (int t = 0; t < taps + 3; ++t) {
      const Vec8 v = LOAD8(rows[t] + j);
      if (t < taps) a0 += full[t] * v;
      if (t >= 1 && t - 1 < taps) a1 += full[t - 1] * v;
      if (t >= 2 && t - 2 < taps) a2 += full[t - 2] * v;
      if (t >= 3) a3 += full[t - 3] * v;
    }
    STORE8(dst[0] + j, a0);
    STORE8(dst[1] + j, a1);
    STORE8(dst[2] + j, a2);
    STORE8(dst[3] + j, a3);
  }
  for (; j < n; ++j) {
    for (int m = 0; m < 4; ++m) {
      float acc = 0.f;
      for (int t = 0; t < taps; ++t) acc += full[t] * rows[t + m][j];
      dst[m][j] = acc;
    }
  }
}

}  // namespace

#undef LOAD8
#undef STORE8

void gaussian_blur_rows(const Image& in, double sigma, int y0, int y1, Image& out) {
  if (out.width != in.width || out.height != in.height) throw FormatError("blur output size mismatch");
  y0 = std::max(y0, 0);
  y1 = std::min(y1, in.height);
  if (y0 >= y1) return;
  const auto kd = gaussian_kernel(sigma);
  const int r = static_cast<int>(kd.size() / 2);
  const int w = in.width, h = in.height;
  const std::size_t row = static_cast<std::size_t>(w) * 3;
  if (r == 0) {
    std::copy(in.at(0, y0), in.at(0, y0) + row * (y1 - y0), out.at(0, y0));
    return;
  }
  std::vector<float> full(kd.begin(), kd.end());
  std::vector<float> half(full.begin() + r, full.end());

  // Horizontal pass over the source rows the output rows depend on.
  const int s0 = std::max(0, y0 - r), s1 = std::min(h, y1 + r);
  thread_local std::vector<float> tmp, padded;
  if (tmp.size() < row * h) tmp.resize(row * h);
  padded.resize(static_cast<std::size_t>(w + 2 * r) * 3);
  for (int y = s0; y < s1; ++y) {
    const float* src = in.at(0, y);
    std::copy(src, src + row, &padded[static_cast<std::size_t>(r) * 3]);
    for (int x = 0; x < r; ++x) {
      std::copy(src, src + 3, &padded[static_cast<std::size_t>(x) * 3]);
      std::copy(src + row - 3, src + row, &padded[static_cast<std::size_t>(w + r + x) * 3]);
    }
    horizontal_row(&tmp[row * y], &padded[static_cast<std::size_t>(r) * 3], half.data(), r, row);
  }

  // Vertical pass, four output rows at a time; a short tail block writes to scratch.
  auto tmp_row = [&](int y) -> const float* { return &tmp[row * std::clamp(y, 0, h - 1)]; };
  thread_local std::vector<float> spill;
  spill.resize(row * 3);
  std::vector<const float*> rows(2 * r + 4);
  for (int y = y0; y < y1; y += 4) {
    for (int i = 0; i < 2 * r + 4; ++i) rows[i] = tmp_row(y - r + i);
    float* dst[4];
    for (int m = 0; m < 4; ++m) dst[m] = y + m < y1 ? out.at(0, y + m) : &spill[row * (m - 1)];
    vertical_rows4(dst, rows.data(), full.data(), r, row);
  }
}

Image gaussian_blur(const Image& in, double sigma) {
  if (!(sigma > 0.0) || in.empty()) return in;
  Image out(in.width, in.height);
  gaussian_blur_rows(in, sigma, 0, in.height, out);
  return out;
}

}  // namespace empathd
