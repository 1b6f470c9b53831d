#pragma once

#include <optional>
#include <string>
#include <vector>

#include "empathd/image.hpp"
#include "empathd/meshgen.hpp"
#include "empathd/profile.hpp"

namespace empathd {

struct AudioBuffer {
  double sampleRateHz = 48000.0;
  std::vector<double> samples;  // mono, nominal range [-1, 1]

  bool operator==(const AudioBuffer&) const = default;
};

// Normalised 1-D Gaussian taps, radius ceil(3 sigma). sigma <= 0 gives {1}.
std::vector<double> gaussian_kernel(double sigma);

// Separable blur with clamp-to-edge borders.
Image gaussian_blur(const Image& in, double sigma);

// Writes blurred rows [y0, y1) of `in` into `out`, which must match its size.
// Other rows of `out` are left untouched.
void gaussian_blur_rows(const Image& in, double sigma, int y0, int y1, Image& out);

// Weight applied to the blurred image at normalised radius r: 1 inside the
// clear circle (where the original is kept), linear falloff across the ring,
// 0 beyond the outer circle.
double glaucoma_falloff(double r, const GlaucomaParams& p);
// Pixel distance from the image centre over the half-diagonal.
double glaucoma_radius(int x, int y, int width, int height);

Image apply_glaucoma(const Image& in, const GlaucomaParams& p);
Image apply_cataract(const Image& in, const CataractParams& p);

Vec3 tremor_offset(const TremorParams& p, double tSeconds);
HandMesh apply_tremor(const HandMesh& mesh, const TremorParams& p, double tSeconds);

// Linear gain applied at frequency f (1 outside the band, raised-cosine dB
// ramps over [0.75 low, low] and [high, 1.25 high]).
double hearing_loss_gain(double frequencyHz, const HearingLossParams& p);
// STFT band attenuation (frame 1024, hop 512, periodic Hann). Throws
// ConfigError when the band reaches Nyquist.
AudioBuffer apply_hearing_loss(const AudioBuffer& audio, const HearingLossParams& p);

struct MediaBundle {
  std::optional<Image> image;
  std::optional<HandMesh> mesh;
  std::optional<AudioBuffer> audio;
};

// Applies the filters in order; each filter touches only its modality.
MediaBundle apply_profile(MediaBundle media, const ImpairmentProfile& profile, double tSeconds);
Image apply_visual_profile(const Image& in, const ImpairmentProfile& profile);

AudioBuffer read_wav(const std::string& path);
void write_wav(const AudioBuffer& audio, const std::string& path);

}  // namespace empathd
