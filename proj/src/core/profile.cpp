#include "empathd/profile.hpp"

#include <algorithm>
#include <fstream>

#include "empathd/errors.hpp"

namespace empathd {

using nlohmann::json;

GlaucomaParams GlaucomaParams::from_severity(double severity) {
  const double s = std::clamp(severity, 0.0, 1.0);
  GlaucomaParams p;
  p.innerRadiusFrac = 0.45 * (1.0 - s) + 0.05;
  p.outerRadiusFrac = p.innerRadiusFrac + 0.25;
  p.severity = s;
  return p;
}

CataractParams CataractParams::from_severity(double severity) {
  const double s = std::clamp(severity, 0.0, 1.0);
  CataractParams p;
  p.blurSigmaPx = 8.0 * s;
  p.contrastFactor = 1.0 - 0.6 * s;
  p.severity = s;
  return p;
}

namespace {

struct Checker {
  std::size_t index;
  std::vector<Violation>& out;

  void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) out.push_back({index, field, rule + " violated"});
  }
};

}  // namespace

std::vector<Violation> validate_profile(const ImpairmentProfile& profile) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < profile.filters.size(); ++i) {
    Checker c{i, out};
    std::visit(
        [&c](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, GlaucomaParams>) {
            c.require(f.innerRadiusFrac >= 0.0 && f.innerRadiusFrac <= 1.0, "innerRadiusFrac",
                      "innerRadiusFrac in [0,1]");
            c.require(f.outerRadiusFrac >= 0.0 && f.outerRadiusFrac <= 1.0, "outerRadiusFrac",
                      "outerRadiusFrac in [0,1]");
            c.require(f.innerRadiusFrac < f.outerRadiusFrac, "innerRadiusFrac", "innerRadiusFrac < outerRadiusFrac");
            c.require(f.blurSigmaPx >= 0.0, "blurSigmaPx", "blurSigmaPx >= 0");
          } else if constexpr (std::is_same_v<T, CataractParams>) {
            c.require(f.blurSigmaPx >= 0.0, "blurSigmaPx", "blurSigmaPx >= 0");
            c.require(f.contrastFactor >= 0.0 && f.contrastFactor <= 1.0, "contrastFactor",
                      "contrastFactor in [0,1]");
          } else if constexpr (std::is_same_v<T, TremorParams>) {
            c.require(f.frequencyHz > 0.0, "frequencyHz", "frequencyHz > 0");
            c.require(f.amplitudeMm >= 0.0, "amplitudeMm", "amplitudeMm >= 0");
          } else {
            c.require(f.lowHz > 0.0, "lowHz", "lowHz > 0");
            c.require(f.lowHz < f.highHz, "lowHz", "lowHz < highHz");
            c.require(f.attenuationDb >= 0.0, "attenuationDb", "attenuationDb >= 0");
          }
        },
        profile.filters[i]);
  }
  return out;
}

std::string filter_type_name(const FilterSpec& f) {
  switch (f.index()) {
    case 0: return "Glaucoma";
    case 1: return "Cataract";
    case 2: return "Tremor";
    default: return "HearingLoss";
  }
}

json profile_to_json(const ImpairmentProfile& profile) {
  json filters = json::array();
  for (const auto& f : profile.filters) {
    json j;
    j["type"] = filter_type_name(f);
    std::visit(
        [&j](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, GlaucomaParams>) {
            j["innerRadiusFrac"] = p.innerRadiusFrac;
            j["outerRadiusFrac"] = p.outerRadiusFrac;
            j["blurSigmaPx"] = p.blurSigmaPx;
            if (p.severity) j["severity"] = *p.severity;
          } else if constexpr (std::is_same_v<T, CataractParams>) {
            j["blurSigmaPx"] = p.blurSigmaPx;
            j["contrastFactor"] = p.contrastFactor;
            if (p.severity) j["severity"] = *p.severity;
          } else if constexpr (std::is_same_v<T, TremorParams>) {
            j["frequencyHz"] = p.frequencyHz;
            j["amplitudeMm"] = p.amplitudeMm;
          } else {
            j["lowHz"] = p.lowHz;
            j["highHz"] = p.highHz;
            j["attenuationDb"] = p.attenuationDb;
          }
        },
        f);
    filters.push_back(std::move(j));
  }
  return json{{"filters", filters}};
}

namespace {

double num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string("profile field '") + key + "' must be a number");
  return j[key].get<double>();
}

}  // namespace

ImpairmentProfile profile_from_json(const json& j) {
  if (!j.is_object() || !j.contains("filters") || !j["filters"].is_array()) {
    throw ConfigError("profile JSON must be an object with a 'filters' array");
  }
  ImpairmentProfile profile;
  for (const auto& f : j["filters"]) {
    if (!f.is_object() || !f.contains("type") || !f["type"].is_string()) {
      throw ConfigError("each profile filter needs a string 'type'");
    }
    const auto type = f["type"].get<std::string>();
    if (type == "Glaucoma") {
      GlaucomaParams p = f.contains("severity") ? GlaucomaParams::from_severity(num(f, "severity", 0.0)) : GlaucomaParams{};
      p.innerRadiusFrac = num(f, "innerRadiusFrac", p.innerRadiusFrac);
      p.outerRadiusFrac = num(f, "outerRadiusFrac", p.outerRadiusFrac);
      p.blurSigmaPx = num(f, "blurSigmaPx", p.blurSigmaPx);
      profile.filters.emplace_back(p);
    } else if (type == "Cataract") {
      CataractParams p = f.contains("severity") ? CataractParams::from_severity(num(f, "severity", 0.0)) : CataractParams{};
      p.blurSigmaPx = num(f, "blurSigmaPx", p.blurSigmaPx);
      p.contrastFactor = num(f, "contrastFactor", p.contrastFactor);
      profile.filters.emplace_back(p);
    } else if (type == "Tremor") {
      TremorParams p;
      p.frequencyHz = num(f, "frequencyHz", p.frequencyHz);
      p.amplitudeMm = num(f, "amplitudeMm", p.amplitudeMm);
      profile.filters.emplace_back(p);
    } else if (type == "HearingLoss") {
      HearingLossParams p;
      p.lowHz = num(f, "lowHz", p.lowHz);
      p.highHz = num(f, "highHz", p.highHz);
      p.attenuationDb = num(f, "attenuationDb", p.attenuationDb);
      profile.filters.emplace_back(p);
    } else {
      throw ConfigError("unknown impairment filter type '" + type + "'");
    }
  }
  return profile;
}

ImpairmentProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("profile " + path + ": " + e.what());
  }
  return profile_from_json(j);
}

void save_profile(const ImpairmentProfile& profile, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write profile " + path);
  out << profile_to_json(profile).dump(2) << '\n';
}

}  // namespace empathd
