#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace minersim {

// Ideal sinusoidal source.
struct SineSpec {
  double rms_volts = 240.0;
  double frequency_hz = 60.0;
  double phase_deg = 0.0;  // normalized to [0, 360)
};

// One voltage-sag event: retained fraction of the pre-sag amplitude,
// point-on-wave angle at onset, and duration.
struct SagSpec {
  double retained_fraction = 0.5;  // in [0, 1]
  double start_pow_deg = 0.0;
  double duration_s = 0.045;
};

struct HarmonicComponent {
  int order = 5;                    // >= 2
  double amplitude_fraction = 0.0;  // relative to the fundamental amplitude
  double phase_deg = 0.0;
};

// Injected harmonic content, active from a clearing instant and decaying
// exponentially afterwards.
struct HarmonicSpec {
  std::vector<HarmonicComponent> components;
  double decay_per_s = 25.0;
};

// Placeholder spectrum for the distorted post-fault grid voltage near a
// converter-dense bus. Orders and levels are configuration, not physics.
HarmonicSpec default_harmonics();

struct MeasurementWindow {
  double length_s = 1.0 / 60.0;  // default: one fundamental cycle
  double stride_s = 0.0;         // 0 -> one output per input sample
};

void validate(const SineSpec& spec);
void validate(const SagSpec& spec);
void validate(const HarmonicSpec& spec);
void validate(const MeasurementWindow& win);

// Instantaneous source voltage sqrt(2)*rms*sin(2*pi*f*t + phase).
double sample_source(const SineSpec& spec, double t);

// Source phase angle at t, degrees in [0, 360).
double source_phase_deg(const SineSpec& spec, double t);

// First instant at or after arming_time_s where the source phase equals
// sag.start_pow_deg; sags are aligned to point-on-wave, not wall clock.
double sag_onset_time(const SineSpec& spec, const SagSpec& sag, double arming_time_s);

// Amplitude scaled by retained_fraction inside [onset, onset+duration),
// untouched outside; phase continuous across both boundaries.
double apply_sag(const SineSpec& spec, const SagSpec& sag, double arming_time_s, double t);

// Additive harmonic voltage, zero before clear_time_s, each component
// decaying as exp(-decay_per_s * (t - clear_time_s)) afterwards.
double harmonic_voltage(const SineSpec& spec, const HarmonicSpec& harmonics, double clear_time_s,
                        double t);

// Trailing-window RMS of a uniformly sampled channel. Output is held at the
// first full-window value until one window has elapsed. Throws ConfigError if
// the window is longer than the trace or shorter than 2 samples.
std::vector<double> sliding_rms(std::span<const double> samples, double sample_rate_hz,
                                const MeasurementWindow& win);

struct PowerMetrics {
  double real_power_w = 0.0;
  double apparent_power_va = 0.0;
  std::optional<double> power_factor;  // empty when S == 0
  bool leading = false;
  double displacement_deg = 0.0;  // fundamental current phase minus voltage phase
};

// P = mean(v*i), S = Vrms*Irms, pf = P/S. Leading/lagging is decided from the
// fundamental components only, via single-frequency correlation at f0 over the
// largest whole number of cycles in the span.
PowerMetrics power_metrics(std::span<const double> v, std::span<const double> i,
                           double sample_rate_hz, double fundamental_hz);

// Fundamental phasor (amplitude, phase in degrees) of a channel by correlation
// at f0 over whole cycles.
struct Phasor {
  double amplitude = 0.0;
  double phase_deg = 0.0;
};
Phasor fundamental_phasor(std::span<const double> samples, double sample_rate_hz,
                          double fundamental_hz);

// Fixed-size trailing mean-square window with O(1) updates. The running sum
// is recomputed exactly once per wrap to keep drift bounded on long runs.
class RunningRmsWindow {
 public:
  // prefill_zeros: the window starts as if it had already seen n zeros
  // (used for cold-start measurement estimates).
  explicit RunningRmsWindow(std::size_t n, bool prefill_zeros = false);

  void push(double x);
  bool full() const { return count_ >= sq_.size(); }
  std::size_t size() const { return sq_.size(); }
  double mean_square() const;
  double rms() const;

 private:
  std::vector<double> sq_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  double sum_ = 0.0;
};

}  // namespace minersim
