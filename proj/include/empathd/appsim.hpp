#pragma once

#include <array>
#include <chrono>
#include <memory>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"
#include "empathd/wire.hpp"

namespace empathd {

// ---- bitmap font -------------------------------------------------------

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

// Rows top to bottom, bit 4 is the leftmost column. Unknown characters map to '?'.
const std::array<std::uint8_t, kGlyphHeight>& glyph(char c);

// Advance is (kGlyphWidth + 1) * scale per character; the width omits the trailing gap.
int text_width(const std::string& text, int scale);
void draw_text(Image& img, int x, int y, const std::string& text, int scale, const Rgb& color);
void fill_rect(Image& img, int x, int y, int w, int h, const Rgb& color);

// ---- apps --------------------------------------------------------------

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
  bool contains(double px, double py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool operator==(const Rect&) const = default;
};

struct Widget {
  std::string id;
  Rect rect;
  std::string label;
};

struct TouchResult {
  bool changed = false;
  std::optional<std::string> hit;
};

// IO-phone screen to app render space: uniform scale, centred (letterboxed).
struct TouchMapping {
  int ioWidth = 1080, ioHeight = 1920;
  int appWidth = 1080, appHeight = 1920;

  Vec2 map(double x, double y) const;
  Vec2 unmap(double x, double y) const;
};

class App {
 public:
  virtual ~App() = default;
  virtual std::string kind() const = 0;
  virtual const std::vector<Widget>& widgets() const = 0;
  // Serialised state; two screens render identically iff their states match.
  virtual std::string state_id() const = 0;
  // Coordinates are app render space. Only `up` events inside a widget act.
  TouchResult handle_touch(const wire::TouchEvent& ev);
  Image render() const;
  int width() const { return width_; }
  int height() const { return height_; }
  const Widget* widget_at(double x, double y) const;

 protected:
  App(int width, int height) : width_(width), height_(height) {}
  virtual void on_tap(const Widget& w) = 0;
  virtual void draw_content(Image& img) const = 0;

  int width_, height_;
};

// Calculator-style button grid.
class GridApp : public App {
 public:
  static constexpr std::size_t kMaxDigits = 12;

  explicit GridApp(int width = 1080, int height = 1920);
  std::string kind() const override { return "grid"; }
  const std::vector<Widget>& widgets() const override { return widgets_; }
  std::string state_id() const override;
  const std::string& display() const { return display_; }

 protected:
  void on_tap(const Widget& w) override;
  void draw_content(Image& img) const override;

 private:
  void evaluate();

  std::vector<Widget> widgets_;
  std::string display_;
  std::string accumulator_;
  char pendingOp_ = 0;
  bool fresh_ = false;  // next digit starts a new entry
};

struct PointingTrial {
  int trial = 0;
  int stimulus = 0;
  std::string tapped;
  bool correct = false;
};

// Number-search task: a stimulus number at the top, numbered buttons below.
class PointingApp : public App {
 public:
  PointingApp(std::uint64_t seed, int width = 1080, int height = 1920, int cols = 4, int rows = 5);
  std::string kind() const override { return "pointing"; }
  const std::vector<Widget>& widgets() const override { return widgets_; }
  std::string state_id() const override;
  int stimulus() const { return stimulus_; }
  int trial() const { return trial_; }
  const std::vector<PointingTrial>& log() const { return log_; }
  Rect stimulus_rect() const;

 protected:
  void on_tap(const Widget& w) override;
  void draw_content(Image& img) const override;

 private:
  int draw_stimulus();

  std::vector<Widget> widgets_;
  std::mt19937_64 rng_;
  int stimulus_ = 0;
  int trial_ = 0;
  std::vector<PointingTrial> log_;
};

std::unique_ptr<App> make_app(const std::string& kind, std::uint64_t seed, int width = 1080, int height = 1920);

// ---- stage latency synthesis ---------------------------------------------

// Configured per-stage delays in milliseconds. A stage's output is released
// no earlier than stage start + delay (pad-to), so measured stage time is
// max(actual work, configured delay).
struct StageDelays {
  double ioEventForward = 0;
  double emulation = 0;
  double frameEncode = 0;
  double uplink = 0;         // IO-agent -> orchestrator hop
  double frameDownlink = 0;  // orchestrator -> sink hop for frames
  double impairmentApply = 0;
  double sinkRender = 0;
  double rgbdRead = 0;
  double phoneTracking = 0;
  double handTracking = 0;
  double meshBuild = 0;
  double meshDownlink = 0;
  double meshRender = 0;

  bool operator==(const StageDelays&) const = default;
};

StageDelays stage_delays_from_json(const nlohmann::json& j);  // throws ConfigError on negative values
nlohmann::json stage_delays_to_json(const StageDelays& d);

using Clock = std::chrono::steady_clock;

class LatencyPolicy {
 public:
  LatencyPolicy() = default;
  explicit LatencyPolicy(StageDelays d) : delays_(d) {}

  const StageDelays& delays() const { return delays_; }
  // Sleeps until start + ms. Returns immediately when already past.
  static void pad_to(Clock::time_point start, double ms);
  static Clock::time_point deadline(Clock::time_point start, double ms);

 private:
  StageDelays delays_;
};

LatencyPolicy synthesize_latency(const StageDelays& d);

// ---- scenario file ---------------------------------------------------------

struct Ports {
  int io = 7001;
  int sink = 7002;
  int api = 8080;
};

struct Scenario {
  std::string app = "grid";
  StageDelays delays;
  VirtualDisplayConfig display;
  std::string tracePath;  // resolved against the scenario directory
  std::string scenePath;  // scene config for the hand path
  std::string profilePath;
  std::uint64_t seed = 1;
  TouchMapping mapping;
  Ports ports;
  int trials = 20;
  int tapIntervalMs = 400;

  nlohmann::json to_json() const;
};

Scenario scenario_from_json(const nlohmann::json& j, const std::string& baseDir = ".");
Scenario load_scenario(const std::string& path);

// Down/up pairs at the centres of the given widget ids, spaced intervalMs apart.
std::vector<wire::TouchEvent> taps_on(const App& app, const std::vector<std::string>& ids, int intervalMs,
                                      const TouchMapping& mapping);
// Random taps over the IO screen, some hitting widgets and some not.
std::vector<wire::TouchEvent> random_tap_trace(const App& app, int taps, std::uint64_t seed, int intervalMs,
                                               const TouchMapping& mapping);

}  // namespace empathd
