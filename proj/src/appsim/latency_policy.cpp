#include <thread>

#include "empathd/appsim.hpp"
#include "empathd/errors.hpp"

namespace empathd {

namespace {

struct Field {
  const char* key;
  double StageDelays::*member;
};

constexpr Field kFields[] = {
    {"ioEventForward", &StageDelays::ioEventForward},
    {"emulation", &StageDelays::emulation},
    {"frameEncode", &StageDelays::frameEncode},
    {"uplink", &StageDelays::uplink},
    {"frameDownlink", &StageDelays::frameDownlink},
    {"impairmentApply", &StageDelays::impairmentApply},
    {"sinkRender", &StageDelays::sinkRender},
    {"rgbdRead", &StageDelays::rgbdRead},
    {"phoneTracking", &StageDelays::phoneTracking},
    {"handTracking", &StageDelays::handTracking},
    {"meshBuild", &StageDelays::meshBuild},
    {"meshDownlink", &StageDelays::meshDownlink},
    {"meshRender", &StageDelays::meshRender},
};

}  // namespace

StageDelays stage_delays_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("stageDelaysMs must be an object");
  StageDelays d;
  for (const auto& f : kFields) {
    if (j.contains(f.key)) d.*f.member = j.at(f.key).get<double>();
  }
  // A single "network" figure is charged to the frame downlink.
  if (j.contains("network") && !j.contains("uplink") && !j.contains("frameDownlink")) {
    d.frameDownlink = j.at("network").get<double>();
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = it.key() == "network";
    for (const auto& f : kFields) known = known || it.key() == f.key;
    if (!known) throw ConfigError("unknown stage delay '" + it.key() + "'");
  }
  for (const auto& f : kFields) {
    if (!(d.*f.member >= 0.0)) throw ConfigError(std::string("stage delay ") + f.key + " must be >= 0");
  }
  return d;
}

nlohmann::json stage_delays_to_json(const StageDelays& d) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : kFields) j[f.key] = d.*f.member;
  return j;
}

Clock::time_point LatencyPolicy::deadline(Clock::time_point start, double ms) {
  return start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(ms));
}

void LatencyPolicy::pad_to(Clock::time_point start, double ms) {
  if (ms <= 0) return;
  std::this_thread::sleep_until(deadline(start, ms));
}

LatencyPolicy synthesize_latency(const StageDelays& d) {
  stage_delays_from_json(stage_delays_to_json(d));  // validates
  return LatencyPolicy(d);
}

}  // namespace empathd
