#include <fstream>

#include <json.hpp>

#include "empathd/errors.hpp"
#include "empathd/wire.hpp"

namespace empathd::wire {

std::string action_name(TouchAction a) {
  switch (a) {
    case TouchAction::kDown: return "down";
    case TouchAction::kMove: return "move";
    case TouchAction::kUp: return "up";
  }
  return "up";
}

TouchAction action_from_name(const std::string& s) {
  if (s == "down") return TouchAction::kDown;
  if (s == "move") return TouchAction::kMove;
  if (s == "up") return TouchAction::kUp;
  throw FormatError("unknown touch action '" + s + "'");
}

std::vector<TouchEvent> load_touch_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open touch trace " + path);
  std::vector<TouchEvent> out;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TouchEvent e;
      e.seq = out.size();
      e.tMicros = j.at("tMicros").get<std::int64_t>();
      e.x = j.at("x").get<double>();
      e.y = j.at("y").get<double>();
      e.action = action_from_name(j.at("action").get<std::string>());
      out.push_back(e);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(path + ":" + std::to_string(lineNo) + ": " + ex.what());
    }
  }
  return out;
}

void save_touch_trace(const std::vector<TouchEvent>& events, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write touch trace " + path);
  for (const auto& e : events) {
    out << nlohmann::json{{"tMicros", e.tMicros}, {"x", e.x}, {"y", e.y}, {"action", action_name(e.action)}}.dump()
        << '\n';
  }
}

}  // namespace empathd::wire
