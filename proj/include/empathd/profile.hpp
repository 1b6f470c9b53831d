#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace empathd {

struct GlaucomaParams {
  double innerRadiusFrac = 0.30;  // fraction of the image half-diagonal
  double outerRadiusFrac = 0.55;
  double blurSigmaPx = 4.0;
  std::optional<double> severity;

  static GlaucomaParams from_severity(double severity);
  bool operator==(const GlaucomaParams&) const = default;
};

struct CataractParams {
  double blurSigmaPx = 4.0;
  double contrastFactor = 0.7;
  std::optional<double> severity;

  static CataractParams from_severity(double severity);
  bool operator==(const CataractParams&) const = default;
};

struct TremorParams {
  double frequencyHz = 5.0;
  double amplitudeMm = 3.0;

  bool operator==(const TremorParams&) const = default;
};

struct HearingLossParams {
  double lowHz = 2000.0;
  double highHz = 8000.0;
  double attenuationDb = 40.0;

  bool operator==(const HearingLossParams&) const = default;
};

using FilterSpec = std::variant<GlaucomaParams, CataractParams, TremorParams, HearingLossParams>;

// Ordered filter stack; applied front to back.
struct ImpairmentProfile {
  std::vector<FilterSpec> filters;

  bool empty() const { return filters.empty(); }
  bool operator==(const ImpairmentProfile&) const = default;
};

struct Violation {
  std::size_t filterIndex = 0;
  std::string field;
  std::string message;  // e.g. "innerRadiusFrac < outerRadiusFrac violated"

  bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_profile(const ImpairmentProfile& profile);

std::string filter_type_name(const FilterSpec& f);

// JSON form: {"filters":[{"type":"Glaucoma","innerRadiusFrac":..,...}, ...]}.
// A filter may carry "severity" in place of explicit parameters for the
// visual filters; explicit fields win when both are present.
nlohmann::json profile_to_json(const ImpairmentProfile& profile);
ImpairmentProfile profile_from_json(const nlohmann::json& j);  // throws ConfigError
ImpairmentProfile load_profile(const std::string& path);
void save_profile(const ImpairmentProfile& profile, const std::string& path);

}  // namespace empathd
