#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>

#include "empathd/appsim.hpp"
#include "empathd/errors.hpp"

namespace empathd {

namespace {

const Rgb kBackground{0.10f, 0.11f, 0.13f};
const Rgb kButton{0.24f, 0.27f, 0.33f};
const Rgb kPanel{0.86f, 0.88f, 0.82f};
const Rgb kInk{0.05f, 0.05f, 0.06f};
const Rgb kLabel{0.97f, 0.97f, 0.97f};

void draw_centered(Image& img, const Rect& r, const std::string& text, int scale, const Rgb& color) {
  const int tw = text_width(text, scale);
  const int th = kGlyphHeight * scale;
  draw_text(img, r.x + (r.w - tw) / 2, r.y + (r.h - th) / 2, text, scale, color);
}

std::vector<Widget> button_grid(const std::vector<std::string>& labels, int cols, int rows, Rect area, int gap) {
  std::vector<Widget> out;
  const int bw = (area.w - (cols - 1) * gap) / cols;
  const int bh = (area.h - (rows - 1) * gap) / rows;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      if (i >= labels.size()) break;
      out.push_back({labels[i], {area.x + c * (bw + gap), area.y + r * (bh + gap), bw, bh}, labels[i]});
    }
  }
  return out;
}

}  // namespace

Vec2 TouchMapping::map(double x, double y) const {
  const double s = std::min(static_cast<double>(appWidth) / ioWidth, static_cast<double>(appHeight) / ioHeight);
  const double ox = (appWidth - s * ioWidth) / 2.0, oy = (appHeight - s * ioHeight) / 2.0;
  return {x * s + ox, y * s + oy};
}

Vec2 TouchMapping::unmap(double x, double y) const {
  const double s = std::min(static_cast<double>(appWidth) / ioWidth, static_cast<double>(appHeight) / ioHeight);
  const double ox = (appWidth - s * ioWidth) / 2.0, oy = (appHeight - s * ioHeight) / 2.0;
  return {(x - ox) / s, (y - oy) / s};
}

const Widget* App::widget_at(double x, double y) const {
  for (const auto& w : widgets()) {
    if (w.rect.contains(x, y)) return &w;
  }
  return nullptr;
}

TouchResult App::handle_touch(const wire::TouchEvent& ev) {
  TouchResult r;
  if (ev.action != wire::TouchAction::kUp) return r;
  const Widget* w = widget_at(ev.x, ev.y);
  if (!w) return r;
  r.hit = w->id;
  const std::string before = state_id();
  on_tap(*w);
  r.changed = state_id() != before;
  return r;
}

Image App::render() const {
  Image img(width_, height_, kBackground);
  for (const auto& w : widgets()) {
    fill_rect(img, w.rect.x, w.rect.y, w.rect.w, w.rect.h, kButton);
    draw_centered(img, w.rect, w.label, std::max(1, std::min(w.rect.w, w.rect.h) / 24), kLabel);
  }
  draw_content(img);
  return img;
}

// ---- GridApp ---------------------------------------------------------------

GridApp::GridApp(int width, int height) : App(width, height) {
  const std::vector<std::string> labels = {"7", "8", "9", "/", "4", "5", "6", "*",
                                           "1", "2", "3", "-", "C", "0", "=", "+"};
  const int margin = width / 27;
  widgets_ = button_grid(labels, 4, 4, {margin, height * 5 / 16, width - 2 * margin, height * 5 / 8}, margin / 2);
}

std::string GridApp::state_id() const {
  return display_ + "|" + accumulator_ + "|" + (pendingOp_ ? std::string(1, pendingOp_) : "") + "|" +
         (fresh_ ? "1" : "0");
}

void GridApp::evaluate() {
  const double a = std::stod(accumulator_.empty() ? "0" : accumulator_);
  const double b = std::stod(display_.empty() ? "0" : display_);
  double v = 0;
  switch (pendingOp_) {
    case '+': v = a + b; break;
    case '-': v = a - b; break;
    case '*': v = a * b; break;
    case '/':
      if (b == 0) {
        display_ = "ERR";
        return;
      }
      v = a / b;
      break;
    default: v = b;
  }
  char buf[64];
  for (int prec = static_cast<int>(kMaxDigits); prec >= 1; --prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::string(buf).size() <= kMaxDigits) break;
  }
  display_ = buf;
}

void GridApp::on_tap(const Widget& w) {
  const char key = w.id[0];
  if (std::isdigit(static_cast<unsigned char>(key))) {
    if (fresh_ || display_ == "0" || display_ == "ERR") {
      display_ = std::string(1, key);
      fresh_ = false;
    } else if (display_.size() < kMaxDigits) {
      display_.push_back(key);
    }
  } else if (key == 'C') {
    display_.clear();
    accumulator_.clear();
    pendingOp_ = 0;
    fresh_ = false;
  } else if (key == '=') {
    if (pendingOp_ && !display_.empty() && display_ != "ERR") {
      evaluate();
      accumulator_.clear();
      pendingOp_ = 0;
      fresh_ = true;
    }
  } else {
    if (display_ == "ERR") return;
    if (!display_.empty()) {
      if (pendingOp_) {
        evaluate();
        if (display_ == "ERR") {
          accumulator_.clear();
          pendingOp_ = 0;
          fresh_ = true;
          return;
        }
      }
      accumulator_ = display_;
      display_.clear();
      fresh_ = false;
    } else if (accumulator_.empty()) {
      return;
    }
    pendingOp_ = key;
  }
}

void GridApp::draw_content(Image& img) const {
  const int margin = width_ / 27;
  const Rect panel{margin, height_ / 10, width_ - 2 * margin, height_ / 6};
  fill_rect(img, panel.x, panel.y, panel.w, panel.h, kPanel);
  const int scale = std::max(1, panel.w / static_cast<int>((kMaxDigits + 1) * (kGlyphWidth + 1)));
  const int pad = panel.h / 10;
  draw_text(img, panel.x + panel.w - pad - text_width(display_, scale), panel.y + panel.h - pad - kGlyphHeight * scale,
            display_, scale, kInk);
  std::string status = accumulator_;
  if (pendingOp_) status += std::string(" ") + pendingOp_;
  if (fresh_) status += " =";
  draw_text(img, panel.x + pad, panel.y + pad, status, std::max(1, scale / 3), kInk);
}

// ---- PointingApp -------------------------------------------------------------

PointingApp::PointingApp(std::uint64_t seed, int width, int height, int cols, int rows)
    : App(width, height), rng_(seed) {
  std::vector<std::string> labels;
  for (int i = 1; i <= cols * rows; ++i) labels.push_back(std::to_string(i));
  const int margin = width / 27;
  widgets_ = button_grid(labels, cols, rows, {margin, height / 4, width - 2 * margin, height * 7 / 10}, margin / 2);
  stimulus_ = draw_stimulus();
}

int PointingApp::draw_stimulus() { return 1 + static_cast<int>(rng_() % widgets_.size()); }

Rect PointingApp::stimulus_rect() const { return {width_ / 2 - width_ / 5, height_ / 24, 2 * (width_ / 5), height_ / 8}; }

std::string PointingApp::state_id() const { return std::to_string(stimulus_) + "|" + std::to_string(trial_); }

void PointingApp::on_tap(const Widget& w) {
  log_.push_back({trial_, stimulus_, w.id, w.id == std::to_string(stimulus_)});
  ++trial_;
  stimulus_ = draw_stimulus();
}

void PointingApp::draw_content(Image& img) const {
  const Rect s = stimulus_rect();
  fill_rect(img, s.x, s.y, s.w, s.h, kPanel);
  draw_centered(img, s, std::to_string(stimulus_), std::max(1, s.h / 10), kInk);
  const int scale = std::max(1, width_ / 216);
  const std::string trial = "TRIAL " + std::to_string(trial_);
  draw_text(img, (width_ - text_width(trial, scale)) / 2, s.y + s.h + scale * 4, trial, scale, kLabel);
}

std::unique_ptr<App> make_app(const std::string& kind, std::uint64_t seed, int width, int height) {
  if (kind == "grid") return std::make_unique<GridApp>(width, height);
  if (kind == "pointing") return std::make_unique<PointingApp>(seed, width, height);
  throw ConfigError("unknown app '" + kind + "' (expected grid or pointing)");
}

}  // namespace empathd
