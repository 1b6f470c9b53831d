#include <algorithm>
#include <cmath>

#include "empathd/appsim.hpp"
#include "empathd/errors.hpp"
#include "empathd/orchestrator.hpp"

namespace empathd {

namespace {

// App render space is 1080 px wide at 3 px per density-independent pixel.
constexpr double kPxPerSp = 3.0;
// Cap height of a font as a fraction of its nominal size.
constexpr double kCapHeight = 0.7;
constexpr int kAppWidth = 1080;
constexpr int kAppHeight = 1920;
constexpr int kChartSizes[] = {48, 36, 28, 24, 20, 16, 14, 12, 10, 8};
constexpr const char* kRows[] = {"E", "FP", "TOZ", "LPED", "PECFD", "EDFCZP", "FELOPZD", "DEFPOTEC", "LEFODPCT",
                                 "FDPLTCEO"};

}  // namespace

int sp_to_glyph_scale(double sp, const VirtualDisplayConfig&) {
  if (!(sp > 0)) throw ConfigError("font size must be positive");
  return std::max(1, static_cast<int>(std::lround(kCapHeight * sp * kPxPerSp / kGlyphHeight)));
}

Image calibration_chart(int targetSp, const VirtualDisplayConfig& display) {
  if (!display.valid()) throw ConfigError("invalid virtual display configuration");
  Image page(kAppWidth, kAppHeight, {1.f, 1.f, 1.f});
  const Rgb ink{0.f, 0.f, 0.f};
  const Rgb mark{0.85f, 0.1f, 0.1f};
  int y = 80;
  for (std::size_t i = 0; i < std::size(kChartSizes); ++i) {
    const int sp = kChartSizes[i];
    const int scale = sp_to_glyph_scale(sp, display);
    const std::string row = kRows[i];
    const int w = text_width(row, scale);
    const int x = (kAppWidth - w) / 2;
    draw_text(page, x, y, row, scale, ink);
    const std::string label = std::to_string(sp) + "SP";
    draw_text(page, 24, y + (kGlyphHeight * scale - kGlyphHeight * 3) / 2, label, 3, ink);
    if (sp == targetSp) fill_rect(page, kAppWidth - 60, y, 24, kGlyphHeight * scale, mark);
    y += kGlyphHeight * scale + std::max(24, 3 * scale);
  }
  return wire::scale_display(page, display);
}

}  // namespace empathd
