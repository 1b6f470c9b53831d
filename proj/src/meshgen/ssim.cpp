#include <vector>

#include "empathd/errors.hpp"
#include "empathd/meshgen.hpp"

namespace empathd {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Summed-area table with a zero first row and column.
class Integral {
 public:
  Integral(int w, int h) : w_(w + 1), data_(static_cast<std::size_t>(w + 1) * (h + 1), 0.0) {}
  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * w_ + x]; }
  double box(int x, int y, int n) const {
    auto g = [&](int xx, int yy) { return data_[static_cast<std::size_t>(yy) * w_ + xx]; };
    return g(x + n, y + n) - g(x, y + n) - g(x + n, y) + g(x, y);
  }

 private:
  int w_;
  std::vector<double> data_;
};

// get(x, y) returns the two channel samples being compared.
template <typename Get>
double ssim_channel(int w, int h, int n, Get get) {
  Integral sa(w, h), sb(w, h), saa(w, h), sbb(w, h), sab(w, h);
  for (int y = 0; y < h; ++y) {
    double ra = 0, rb = 0, raa = 0, rbb = 0, rab = 0;
    for (int x = 0; x < w; ++x) {
      const auto [a, b] = get(x, y);
      ra += a;
      rb += b;
      raa += a * a;
      rbb += b * b;
      rab += a * b;
      sa.at(x + 1, y + 1) = sa.at(x + 1, y) + ra;
      sb.at(x + 1, y + 1) = sb.at(x + 1, y) + rb;
      saa.at(x + 1, y + 1) = saa.at(x + 1, y) + raa;
      sbb.at(x + 1, y + 1) = sbb.at(x + 1, y) + rbb;
      sab.at(x + 1, y + 1) = sab.at(x + 1, y) + rab;
    }
  }
  const double inv = 1.0 / (static_cast<double>(n) * n);
  double total = 0.0;
  for (int y = 0; y + n <= h; ++y) {
    for (int x = 0; x + n <= w; ++x) {
      const double ma = sa.box(x, y, n) * inv;
      const double mb = sb.box(x, y, n) * inv;
      const double va = saa.box(x, y, n) * inv - ma * ma;
      const double vb = sbb.box(x, y, n) * inv - mb * mb;
      const double cov = sab.box(x, y, n) * inv - ma * mb;
      total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
  }
  return total / (static_cast<double>(w - n + 1) * (h - n + 1));
}

void check(int wa, int ha, int wb, int hb, int window) {
  if (wa != wb || ha != hb) throw FormatError("ssim: image dimensions differ");
  if (window < 1) throw ConfigError("ssim: window must be >= 1");
  if (wa < window || ha < window) throw FormatError("ssim: image smaller than the window");
}

}  // namespace

double ssim_plane(const Plane& a, const Plane& b, int window) {
  check(a.width, a.height, b.width, b.height, window);
  return ssim_channel(a.width, a.height, window, [&](int x, int y) {
    return std::pair<double, double>(a.at(x, y), b.at(x, y));
  });
}

double ssim(const Image& a, const Image& b, int window) {
  check(a.width, a.height, b.width, b.height, window);
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    sum += ssim_channel(a.width, a.height, window, [&](int x, int y) {
      return std::pair<double, double>(a.at(x, y)[c], b.at(x, y)[c]);
    });
  }
  return sum / 3.0;
}

}  // namespace empathd
