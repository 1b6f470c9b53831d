#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace empathd {

namespace stage {
inline constexpr const char* kIoEventForward = "ioEventForward";
inline constexpr const char* kEmulation = "emulation";
inline constexpr const char* kFrameEncode = "frameEncode";
inline constexpr const char* kNetwork = "network";
inline constexpr const char* kNetworkUplink = "networkUplink";
inline constexpr const char* kNetworkDownlink = "networkDownlink";
inline constexpr const char* kImpairmentApply = "impairmentApply";
inline constexpr const char* kSinkRender = "sinkRender";
inline constexpr const char* kRgbdRead = "rgbdRead";
inline constexpr const char* kPhoneTracking = "phoneTracking";
inline constexpr const char* kHandTracking = "handTracking";
inline constexpr const char* kMeshBuild = "meshBuild";
inline constexpr const char* kMeshDownlink = "meshDownlink";
inline constexpr const char* kMeshRender = "meshRender";
inline constexpr const char* kEndToEndTouch = "endToEndTouch";
inline constexpr const char* kEndToEndHand = "endToEndHand";
}  // namespace stage

// Stages whose sum makes up each end-to-end path.
const std::vector<std::string>& touch_path_stages();
const std::vector<std::string>& hand_path_stages();

struct StageStats {
  double mean = 0;
  double sd = 0;  // sample standard deviation
  double min = 0;
  double max = 0;
  std::size_t count = 0;
};

StageStats compute_stats(const std::vector<double>& samples);

struct LatencyReport {
  std::map<std::string, StageStats> stages;  // milliseconds
  std::map<std::string, std::uint64_t> counters;

  const StageStats* find(const std::string& name) const;
  nlohmann::json to_json() const;
  static LatencyReport from_json(const nlohmann::json& j);
  std::string table() const;
};

// Thread-safe sample sink shared by pipeline stages.
class LatencyRecorder {
 public:
  void record(const std::string& stage, double ms);
  void add(const std::string& counter, std::uint64_t n = 1);
  void set(const std::string& counter, std::uint64_t value);
  std::uint64_t counter(const std::string& name) const;
  // window > 0 restricts each stage to its most recent samples.
  LatencyReport report(std::size_t window = 0) const;
  std::vector<double> samples(const std::string& stage) const;
  void clear();

 private:
  mutable std::mutex m_;
  std::map<std::string, std::vector<double>> samples_;
  std::map<std::string, std::uint64_t> counters_;
};

}  // namespace empathd
