#include "empathd/errors.hpp"
#include "empathd/impairments.hpp"

namespace empathd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void ensure_valid(const ImpairmentProfile& profile) {
  const auto violations = validate_profile(profile);
  if (!violations.empty()) {
    throw ConfigError("invalid impairment profile: filter " + std::to_string(violations.front().filterIndex) + ": " +
                      violations.front().message);
  }
}

}  // namespace

MediaBundle apply_profile(MediaBundle media, const ImpairmentProfile& profile, double tSeconds) {
  ensure_valid(profile);
  for (const auto& filter : profile.filters) {
    std::visit(Overloaded{
                   [&](const GlaucomaParams& p) {
                     if (media.image) media.image = apply_glaucoma(*media.image, p);
                   },
                   [&](const CataractParams& p) {
                     if (media.image) media.image = apply_cataract(*media.image, p);
                   },
                   [&](const TremorParams& p) {
                     if (media.mesh) media.mesh = apply_tremor(*media.mesh, p, tSeconds);
                   },
                   [&](const HearingLossParams& p) {
                     if (media.audio) media.audio = apply_hearing_loss(*media.audio, p);
                   },
               },
               filter);
  }
  return media;
}

Image apply_visual_profile(const Image& in, const ImpairmentProfile& profile) {
  MediaBundle m;
  m.image = in;
  return *apply_profile(std::move(m), profile, 0.0).image;
}

}  // namespace empathd
