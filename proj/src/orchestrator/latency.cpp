#include "empathd/latency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "empathd/errors.hpp"

namespace empathd {

const std::vector<std::string>& touch_path_stages() {
  static const std::vector<std::string> s = {stage::kIoEventForward, stage::kEmulation,       stage::kFrameEncode,
                                             stage::kNetwork,        stage::kImpairmentApply, stage::kSinkRender};
  return s;
}

const std::vector<std::string>& hand_path_stages() {
  static const std::vector<std::string> s = {stage::kRgbdRead,  stage::kPhoneTracking, stage::kHandTracking,
                                             stage::kMeshBuild, stage::kMeshDownlink,  stage::kMeshRender};
  return s;
}

StageStats compute_stats(const std::vector<double>& v) {
  StageStats s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

const StageStats* LatencyReport::find(const std::string& name) const {
  auto it = stages.find(name);
  return it == stages.end() ? nullptr : &it->second;
}

nlohmann::json LatencyReport::to_json() const {
  nlohmann::json j;
  j["stages"] = nlohmann::json::object();
  for (const auto& [name, s] : stages) {
    j["stages"][name] = {{"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
  }
  j["counters"] = counters;
  return j;
}

LatencyReport LatencyReport::from_json(const nlohmann::json& j) {
  try {
    LatencyReport r;
    for (const auto& [name, s] : j.at("stages").items()) {
      StageStats st;
      st.mean = s.at("mean").get<double>();
      st.sd = s.at("sd").get<double>();
      st.min = s.value("min", 0.0);
      st.max = s.value("max", 0.0);
      st.count = s.at("count").get<std::size_t>();
      r.stages[name] = st;
    }
    if (j.contains("counters")) r.counters = j.at("counters").get<std::map<std::string, std::uint64_t>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed latency report: ") + e.what());
  }
}

std::string LatencyReport::table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %10s %10s %10s %10s %7s\n", "stage", "mean ms", "sd ms", "min ms", "max ms", "n");
  out += line;
  auto row = [&](const std::string& name) {
    const StageStats* s = find(name);
    if (!s) return;
    std::snprintf(line, sizeof line, "%-18s %10.2f %10.2f %10.2f %10.2f %7zu\n", name.c_str(), s->mean, s->sd, s->min,
                  s->max, s->count);
    out += line;
  };
  std::vector<std::string> order = touch_path_stages();
  order.insert(order.end(), {stage::kNetworkUplink, stage::kNetworkDownlink, stage::kEndToEndTouch});
  for (const auto& s : hand_path_stages()) order.push_back(s);
  order.push_back(stage::kEndToEndHand);
  for (const auto& name : order) row(name);
  for (const auto& [name, s] : stages) {
    if (std::find(order.begin(), order.end(), name) == order.end()) row(name);
  }
  for (const auto& [name, v] : counters) out += name + ": " + std::to_string(v) + "\n";
  return out;
}

void LatencyRecorder::record(const std::string& stage, double ms) {
  std::lock_guard lock(m_);
  samples_[stage].push_back(ms);
}

void LatencyRecorder::add(const std::string& counter, std::uint64_t n) {
  std::lock_guard lock(m_);
  counters_[counter] += n;
}

void LatencyRecorder::set(const std::string& counter, std::uint64_t value) {
  std::lock_guard lock(m_);
  counters_[counter] = value;
}

std::uint64_t LatencyRecorder::counter(const std::string& name) const {
  std::lock_guard lock(m_);
  auto it = counters_.find(name);
  return it == counters_.end() ? 0 : it->second;
}

LatencyReport LatencyRecorder::report(std::size_t window) const {
  std::lock_guard lock(m_);
  LatencyReport r;
  for (const auto& [name, v] : samples_) {
    if (window > 0 && v.size() > window) {
      r.stages[name] = compute_stats(std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(window), v.end()));
    } else {
      r.stages[name] = compute_stats(v);
    }
  }
  r.counters = counters_;
  return r;
}

std::vector<double> LatencyRecorder::samples(const std::string& stage) const {
  std::lock_guard lock(m_);
  auto it = samples_.find(stage);
  return it == samples_.end() ? std::vector<double>{} : it->second;
}

void LatencyRecorder::clear() {
  std::lock_guard lock(m_);
  samples_.clear();
  counters_.clear();
}

}  // namespace empathd
