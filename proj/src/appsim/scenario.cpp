#include <filesystem>
#include <random>

#include "empathd/appsim.hpp"
#include "empathd/errors.hpp"
#include "empathd/io.hpp"

namespace empathd {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& baseDir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(baseDir) / p).lexically_normal().string();
}

}  // namespace

nlohmann::json Scenario::to_json() const {
  return {
      {"app", app},
      {"stageDelaysMs", stage_delays_to_json(delays)},
      {"displayConfig",
       {{"streamWidth", display.streamWidth},
        {"streamHeight", display.streamHeight},
        {"magnification", display.magnification}}},
      {"trace", tracePath},
      {"scene", scenePath},
      {"profile", profilePath},
      {"seed", seed},
      {"ioScreen", {{"width", mapping.ioWidth}, {"height", mapping.ioHeight}}},
      {"appSize", {{"width", mapping.appWidth}, {"height", mapping.appHeight}}},
      {"ports", {{"io", ports.io}, {"sink", ports.sink}, {"api", ports.api}}},
      {"trials", trials},
      {"tapIntervalMs", tapIntervalMs},
  };
}

Scenario scenario_from_json(const nlohmann::json& j, const std::string& baseDir) {
  try {
    Scenario s;
    s.app = j.value("app", s.app);
    if (s.app != "grid" && s.app != "pointing") throw ConfigError("scenario app must be grid or pointing");
    if (j.contains("stageDelaysMs")) s.delays = stage_delays_from_json(j.at("stageDelaysMs"));
    if (j.contains("displayConfig")) {
      const auto& d = j.at("displayConfig");
      s.display.streamWidth = d.value("streamWidth", s.display.streamWidth);
      s.display.streamHeight = d.value("streamHeight", s.display.streamHeight);
      s.display.magnification = d.value("magnification", s.display.magnification);
      if (!s.display.valid()) throw ConfigError("displayConfig must be 9:16 within 1% with magnification >= 1");
    }
    s.tracePath = resolve(baseDir, j.value("trace", std::string()));
    s.scenePath = resolve(baseDir, j.value("scene", std::string()));
    s.profilePath = resolve(baseDir, j.value("profile", std::string()));
    s.seed = j.value("seed", s.seed);
    if (j.contains("ioScreen")) {
      s.mapping.ioWidth = j.at("ioScreen").value("width", s.mapping.ioWidth);
      s.mapping.ioHeight = j.at("ioScreen").value("height", s.mapping.ioHeight);
    }
    if (j.contains("appSize")) {
      s.mapping.appWidth = j.at("appSize").value("width", s.mapping.appWidth);
      s.mapping.appHeight = j.at("appSize").value("height", s.mapping.appHeight);
    }
    if (s.mapping.ioWidth <= 0 || s.mapping.ioHeight <= 0 || s.mapping.appWidth <= 0 || s.mapping.appHeight <= 0) {
      throw ConfigError("screen sizes must be positive");
    }
    if (j.contains("ports")) {
      s.ports.io = j.at("ports").value("io", s.ports.io);
      s.ports.sink = j.at("ports").value("sink", s.ports.sink);
      s.ports.api = j.at("ports").value("api", s.ports.api);
      if (s.ports.io == s.ports.sink || s.ports.io == s.ports.api || s.ports.sink == s.ports.api) {
        throw ConfigError("ports must be distinct");
      }
    }
    s.trials = j.value("trials", s.trials);
    if (s.trials < 1) throw ConfigError("trials must be >= 1");
    s.tapIntervalMs = j.value("tapIntervalMs", s.tapIntervalMs);
    if (s.tapIntervalMs < 1) throw ConfigError("tapIntervalMs must be >= 1");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("scenario file not found: " + path);
  const auto j = read_json_file(path);
  return scenario_from_json(j, fs::path(path).parent_path().string());
}

namespace {

void push_tap(std::vector<wire::TouchEvent>& out, const Vec2& io, std::int64_t t) {
  wire::TouchEvent down;
  down.seq = out.size();
  down.x = io.x();
  down.y = io.y();
  down.action = wire::TouchAction::kDown;
  down.tMicros = t;
  out.push_back(down);
  wire::TouchEvent up = down;
  up.seq = out.size();
  up.action = wire::TouchAction::kUp;
  up.tMicros = t + 50'000;
  out.push_back(up);
}

}  // namespace

std::vector<wire::TouchEvent> taps_on(const App& app, const std::vector<std::string>& ids, int intervalMs,
                                      const TouchMapping& mapping) {
  std::vector<wire::TouchEvent> out;
  std::int64_t t = 0;
  for (const auto& id : ids) {
    const Widget* w = nullptr;
    for (const auto& cand : app.widgets()) {
      if (cand.id == id) w = &cand;
    }
    if (!w) throw ConfigError("no widget '" + id + "'");
    const Vec2 c(w->rect.x + w->rect.w / 2.0, w->rect.y + w->rect.h / 2.0);
    push_tap(out, mapping.unmap(c.x(), c.y()), t);
    t += static_cast<std::int64_t>(intervalMs) * 1000;
  }
  return out;
}

std::vector<wire::TouchEvent> random_tap_trace(const App& app, int taps, std::uint64_t seed, int intervalMs,
                                               const TouchMapping& mapping) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<wire::TouchEvent> out;
  std::int64_t t = 0;
  const auto& widgets = app.widgets();
  for (int i = 0; i < taps; ++i) {
    Vec2 p;
    if (!widgets.empty() && unit(rng) < 0.8) {
      const Widget& w = widgets[rng() % widgets.size()];
      p = {w.rect.x + (0.1 + 0.8 * unit(rng)) * w.rect.w, w.rect.y + (0.1 + 0.8 * unit(rng)) * w.rect.h};
    } else {
      p = {unit(rng) * app.width(), unit(rng) * app.height()};
    }
    push_tap(out, mapping.unmap(p.x(), p.y()), t);
    t += static_cast<std::int64_t>(intervalMs) * 1000;
  }
  return out;
}

}  // namespace empathd
