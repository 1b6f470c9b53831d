#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "empathd/errors.hpp"
#include "empathd/impairments.hpp"

namespace empathd {

namespace {

constexpr int kFrame = 1024;
constexpr int kHop = 512;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double ramp(double x) { return 0.5 - 0.5 * std::cos(std::numbers::pi * x); }  // 0 -> 0, 1 -> 1

}  // namespace

double hearing_loss_gain(double f, const HearingLossParams& p) {
  double m = 0.0;
  const double lowStart = 0.75 * p.lowHz, highEnd = 1.25 * p.highHz;
  if (f >= p.lowHz && f <= p.highHz) {
    m = 1.0;
  } else if (f > lowStart && f < p.lowHz) {
    m = ramp((f - lowStart) / (p.lowHz - lowStart));
  } else if (f > p.highHz && f < highEnd) {
    m = ramp((highEnd - f) / (highEnd - p.highHz));
  }
  return std::pow(10.0, -p.attenuationDb * m / 20.0);
}

AudioBuffer apply_hearing_loss(const AudioBuffer& audio, const HearingLossParams& p) {
  if (!(audio.sampleRateHz > 2.0 * p.highHz)) {
    throw ConfigError("hearing loss band upper edge " + std::to_string(p.highHz) + " Hz is not below Nyquist for " +
                      std::to_string(audio.sampleRateHz) + " Hz audio");
  }
  AudioBuffer out;
  out.sampleRateHz = audio.sampleRateHz;
  const std::size_t n = audio.samples.size();
  out.samples.assign(n, 0.0);
  if (n == 0 || p.attenuationDb == 0.0) {
    out.samples = audio.samples;
    return out;
  }

  // Half a frame of zeros on each side, then whole hops.
  const std::size_t padded = ((n + kFrame) + kHop - 1) / kHop * kHop + kHop;
  std::vector<double> in(padded, 0.0), acc(padded, 0.0);
  std::copy(audio.samples.begin(), audio.samples.end(), in.begin() + kFrame / 2);

  std::vector<double> window(kFrame), gain(kFrame / 2 + 1);
  for (int i = 0; i < kFrame; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / kFrame);
  for (int k = 0; k <= kFrame / 2; ++k) gain[k] = hearing_loss_gain(k * audio.sampleRateHz / kFrame, p);

  double* time = fftw_alloc_real(kFrame);
  fftw_complex* spec = fftw_alloc_complex(kFrame / 2 + 1);
  fftw_plan fwd, inv;
  {
    std::lock_guard lock(planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(kFrame, time, spec, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(kFrame, spec, time, FFTW_ESTIMATE);
  }
  for (std::size_t start = 0; start + kFrame <= padded; start += kHop) {
    for (int i = 0; i < kFrame; ++i) time[i] = in[start + i] * window[i];
    fftw_execute(fwd);
    for (int k = 0; k <= kFrame / 2; ++k) {
      spec[k][0] *= gain[k];
      spec[k][1] *= gain[k];
    }
    fftw_execute(inv);
    for (int i = 0; i < kFrame; ++i) acc[start + i] += time[i] / kFrame;
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  fftw_free(time);
  fftw_free(spec);

  std::copy(acc.begin() + kFrame / 2, acc.begin() + kFrame / 2 + n, out.samples.begin());
  return out;
}

}  // namespace empathd
