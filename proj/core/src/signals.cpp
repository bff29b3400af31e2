#include "minersim/signals.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>

#include "minersim/errors.hpp"

namespace minersim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
}  // namespace

HarmonicSpec default_harmonics() {
  HarmonicSpec spec;
  spec.components = {{5, 0.08, 0.0}, {7, 0.06, 0.0}, {11, 0.04, 0.0}, {13, 0.03, 0.0}};
  spec.decay_per_s = 25.0;
  return spec;
}

void validate(const SineSpec& spec) {
  if (spec.rms_volts < 0.0) throw ConfigError("SineSpec.rms_volts must be >= 0");
  if (!(spec.frequency_hz > 0.0)) throw ConfigError("SineSpec.frequency_hz must be > 0");
  if (spec.phase_deg < 0.0 || spec.phase_deg >= 360.0)
    throw ConfigError("SineSpec.phase_deg must lie in [0, 360)");
}

void validate(const SagSpec& spec) {
  if (spec.retained_fraction < 0.0 || spec.retained_fraction > 1.0)
    throw ConfigError("SagSpec.retained_fraction must lie in [0, 1]");
  if (!(spec.duration_s > 0.0)) throw ConfigError("SagSpec.duration_s must be > 0");
}

void validate(const HarmonicSpec& spec) {
  std::set<int> orders;
  for (const auto& c : spec.components) {
    if (c.order < 2) throw ConfigError("HarmonicComponent.order must be >= 2");
    if (c.amplitude_fraction < 0.0)
      throw ConfigError("HarmonicComponent.amplitude_fraction must be >= 0");
    if (!orders.insert(c.order).second)
      throw ConfigError("HarmonicSpec orders must be distinct (duplicate order " +
                        std::to_string(c.order) + ")");
  }
  if (spec.decay_per_s < 0.0) throw ConfigError("HarmonicSpec.decay_per_s must be >= 0");
}

void validate(const MeasurementWindow& win) {
  if (!(win.length_s > 0.0)) throw ConfigError("MeasurementWindow.length_s must be > 0");
  if (win.stride_s < 0.0) throw ConfigError("MeasurementWindow.stride_s must be >= 0");
}

double sample_source(const SineSpec& spec, double t) {
  return kSqrt2 * spec.rms_volts * std::sin(kTwoPi * spec.frequency_hz * t + deg_to_rad(spec.phase_deg));
}

double source_phase_deg(const SineSpec& spec, double t) {
  double deg = std::fmod(360.0 * spec.frequency_hz * t + spec.phase_deg, 360.0);
  return deg < 0.0 ? deg + 360.0 : deg;
}

double sag_onset_time(const SineSpec& spec, const SagSpec& sag, double arming_time_s) {
  // Solve 360*f*t + phase = pow (mod 360) for the smallest t >= arming time.
  const double f = spec.frequency_hz;
  const double frac = (sag.start_pow_deg - spec.phase_deg) / 360.0;
  double k = std::ceil(arming_time_s * f - frac - 1e-9);
  double t = (k + frac) / f;
  if (t < arming_time_s - 1e-12) t = (k + 1.0 + frac) / f;
  return std::max(t, 0.0);
}

double apply_sag(const SineSpec& spec, const SagSpec& sag, double arming_time_s, double t) {
  const double onset = sag_onset_time(spec, sag, arming_time_s);
  const double scale =
      (t >= onset && t < onset + sag.duration_s) ? sag.retained_fraction : 1.0;
  return scale * sample_source(spec, t);
}

double harmonic_voltage(const SineSpec& spec, const HarmonicSpec& harmonics, double clear_time_s,
                        double t) {
  if (t < clear_time_s) return 0.0;
  const double decay = std::exp(-harmonics.decay_per_s * (t - clear_time_s));
  const double peak = kSqrt2 * spec.rms_volts;
  double v = 0.0;
  for (const auto& c : harmonics.components) {
    v += peak * c.amplitude_fraction * decay *
         std::sin(kTwoPi * c.order * spec.frequency_hz * t + deg_to_rad(c.phase_deg));
  }
  return v;
}

std::vector<double> sliding_rms(std::span<const double> samples, double sample_rate_hz,
                                const MeasurementWindow& win) {
  validate(win);
  const std::size_t n = static_cast<std::size_t>(std::llround(win.length_s * sample_rate_hz));
  if (n < 2) throw ConfigError("sliding_rms window must span at least 2 samples");
  if (n > samples.size())
    throw ConfigError("sliding_rms window (" + std::to_string(n) +
                      " samples) is longer than the trace (" + std::to_string(samples.size()) +
                      ")");
  const std::size_t stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(win.stride_s * sample_rate_hz)));

  // Prefix sums of squares; the trace lengths in play keep this exact enough.
  std::vector<double> prefix(samples.size() + 1, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i)
    prefix[i + 1] = prefix[i] + samples[i] * samples[i];

  auto rms_at = [&](std::size_t i) {
    const double ms = (prefix[i + 1] - prefix[i + 1 - n]) / static_cast<double>(n);
    return std::sqrt(std::max(ms, 0.0));
  };

  std::vector<double> out;
  out.reserve(samples.size() / stride + 1);
  const double first_full = rms_at(n - 1);
  for (std::size_t i = 0; i < samples.size(); i += stride)
    out.push_back(i + 1 < n ? first_full : rms_at(i));
  return out;
}

Phasor fundamental_phasor(std::span<const double> samples, double sample_rate_hz,
                          double fundamental_hz) {
  const double samples_per_cycle = sample_rate_hz / fundamental_hz;
  const std::size_t cycles =
      static_cast<std::size_t>(std::floor(static_cast<double>(samples.size()) / samples_per_cycle));
  if (cycles == 0) throw ConfigError("fundamental_phasor needs at least one whole cycle");
  const std::size_t n = static_cast<std::size_t>(std::llround(cycles * samples_per_cycle));

  std::complex<double> acc{0.0, 0.0};
  const double w = kTwoPi * fundamental_hz / sample_rate_hz;
  for (std::size_t k = 0; k < n; ++k)
    acc += samples[k] * std::complex<double>(std::cos(w * k), -std::sin(w * k));
  acc *= 2.0 / static_cast<double>(n);
  return Phasor{std::abs(acc), std::arg(acc) * 180.0 / std::numbers::pi};
}

PowerMetrics power_metrics(std::span<const double> v, std::span<const double> i,
                           double sample_rate_hz, double fundamental_hz) {
  if (v.size() != i.size() || v.empty())
    throw ConfigError("power_metrics needs aligned, non-empty channels");

  PowerMetrics m;
  double p = 0.0, v2 = 0.0, i2 = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    p += v[k] * i[k];
    v2 += v[k] * v[k];
    i2 += i[k] * i[k];
  }
  const double nd = static_cast<double>(v.size());
  m.real_power_w = p / nd;
  const double vrms = std::sqrt(v2 / nd);
  const double irms = std::sqrt(i2 / nd);
  m.apparent_power_va = vrms * irms;
  if (m.apparent_power_va > 0.0) m.power_factor = m.real_power_w / m.apparent_power_va;

  // Displacement sign from the fundamental components only.
  const Phasor pv = fundamental_phasor(v, sample_rate_hz, fundamental_hz);
  const Phasor pi = fundamental_phasor(i, sample_rate_hz, fundamental_hz);
  double shift = pi.phase_deg - pv.phase_deg;
  while (shift > 180.0) shift -= 360.0;
  while (shift <= -180.0) shift += 360.0;
  m.displacement_deg = shift;
  m.leading = shift > 0.0;
  return m;
}

RunningRmsWindow::RunningRmsWindow(std::size_t n, bool prefill_zeros)
    : sq_(n, 0.0), count_(prefill_zeros ? n : 0) {
  if (n < 2) throw ConfigError("RunningRmsWindow needs at least 2 samples");
}

void RunningRmsWindow::push(double x) {
  const double s = x * x;
  sum_ += s - sq_[head_];
  sq_[head_] = s;
  ++head_;
  if (count_ < sq_.size()) ++count_;
  if (head_ == sq_.size()) {
    head_ = 0;
    // Exact recompute once per wrap kills accumulated cancellation error.
    double fresh = 0.0;
    for (double q : sq_) fresh += q;
    sum_ = fresh;
  }
}

double RunningRmsWindow::mean_square() const {
  const std::size_t n = std::max<std::size_t>(count_, 1);
  return std::max(sum_, 0.0) / static_cast<double>(n);
}

double RunningRmsWindow::rms() const { return std::sqrt(mean_square()); }

}  // namespace minersim
