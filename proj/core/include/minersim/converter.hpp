#pragma once

#include <optional>
#include <string>

#include "minersim/signals.hpp"

namespace minersim {

struct PiGains {
  double kp = 0.0;
  double ki = 0.0;
};

enum class TripCause { none, overcurrent, dc_overvoltage, dc_undervoltage };

std::string to_string(TripCause cause);

struct TripStatus {
  bool tripped = false;  // armed -> tripped is monotone while latching
  TripCause cause = TripCause::none;
  std::optional<double> trip_time_s;
};

struct ProtectionParams {
  double i_trip_rms_a = 20.0;  // trailing-cycle RMS threshold on the inductor current
  double v_dc_over_v = 480.0;
  double v_dc_under_v = 300.0;
  double uv_ov_delay_s = 0.02;  // continuous violation needed before a DC trip
  bool uv_ov_enabled = false;   // only overcurrent is armed by default
  bool latching = true;
};

struct ConverterParams {
  double p_av_w = 3200.0;
  double v_in_rms_nom_v = 240.0;
  double v_dc_ref_v = 400.0;
  double inductance_h = 1.3e-3;
  double capacitance_f = 530e-6;
  double series_resistance_ohm = 0.05;  // inductor ESR, may be 0
  double diode_drop_v = 0.7;            // per device; the bridge drops two
  double f_switch_hz = 20e3;
  double duty_max = 0.97;
  double epsilon_v2 = 1.0;  // division guard in the current-reference multiplier
  PiGains pi_voltage;
  PiGains pi_current;
  double k_power_max_w = 8000.0;         // outer-loop output clamp (anti-windup bound)
  double dc_load_cutoff_fraction = 0.75;  // hash boards brown out below this * v_dc_ref
  ProtectionParams protection;
};

void validate(const ConverterParams& params, double fundamental_hz);

// Component sizing from ripple targets: C from the second-harmonic DC-bus
// ripple, L from the worst-case boost current ripple
//   C = p_av / (2*pi*(2*f0) * v_dc_ref * dc_ripple_pp)
//   dI = v_in*(1 - v_in/v_dc) / (L*f_sw), maximized over v_in in [0, v_pk]
//   L  = dI_worst_numerator / (f_sw * ripple_fraction * I_pk),  I_pk = sqrt(2)*p_av/v_in_rms
struct LcSizing {
  double inductance_h = 0.0;
  double capacitance_f = 0.0;
};
LcSizing size_components(double p_av_w, double v_dc_ref_v, double f0_hz, double dc_ripple_pp_v,
                         double inductor_ripple_fraction, double f_switch_hz,
                         double v_in_rms_nom_v);

// Crossover-placement tuning. Inner loop against the 1/(sL) inductor plant
// with the duty-to-voltage gain v_dc_ref folded in; outer loop against the
// 1/(sC) bus plant scaled by v_dc_ref (the outer output is a power command).
// Integrator zeros sit a decade below each crossover.
//   kp_i = 2*pi*f_i_bw * L / v_dc_ref      ki_i = kp_i * 2*pi*f_i_bw / 10
//   kp_v = 2*pi*f_v_bw * C * v_dc_ref      ki_v = kp_v * 2*pi*f_v_bw / 10
// Requires f_v_bw < f0/4 < f_i_bw <= f_switch/10.
struct PiDesign {
  PiGains voltage;
  PiGains current;
};
PiDesign design_pi_gains(double inductance_h, double capacitance_f, double f_v_bw_hz,
                         double f_i_bw_hz, double f0_hz, double f_switch_hz, double v_dc_ref_v);

// Fully-populated defaults: 240 V in, 400 V bus, 20 kHz carrier, sized L/C
// (20 Vpp bus ripple, 20 % current ripple), 10 Hz / 2 kHz loop bandwidths,
// overcurrent threshold at 1.5x rated input RMS current.
ConverterParams default_converter_params(double p_av_w = 3200.0, double fundamental_hz = 60.0);

// N identical units in lockstep are electrically one scaled unit.
ConverterParams aggregate_params(const ConverterParams& per_unit, int count);

// Full-bridge rectifier: max(|v| - 2*diode_drop, 0).
double rectified_input(double v, double diode_drop);

// DC-side constant power load with a brown-out cutoff (distinct from the
// supply's own protection).
double dc_load_current(double v_dc, const ConverterParams& params);

// Ideal terminal current p_av * v / (v_rms^2 + epsilon).
double ideal_cpl_current(double v, double v_rms, const ConverterParams& params);

struct ConverterState {
  double i_l_a = 0.0;
  double v_dc_v = 0.0;
  double integ_v = 0.0;       // outer-loop integrator, power units
  double integ_i = 0.0;       // inner-loop integrator, duty units
  double carrier_phase = 0.0;  // [0, 1)
  double t_s = 0.0;
  TripStatus trip;
};

// One switching-level PFC-boost block: bridge rectifier, boost stage,
// dual-loop PI with PWM, constant-power DC load, and protection.
//
// The boost ODEs are integrated with the trapezoidal rule per gate state,
// with the source voltage taken at the step midpoint and the load current
// frozen at the start-of-step bus voltage. Under that convention the
// discrete energy balance
//   sum(v_rect_mid*i_mid)*dt = sum(R*i_mid^2)*dt + sum(v_mid*i_load)*dt + d(stored)
// holds to rounding on every non-clamped step, which pins the lossless
// energy checks. Discontinuous conduction is handled by an interpolated
// zero-crossing clamp; the diode then blocks while v_rect < v_dc.
class Converter {
 public:
  Converter(const ConverterParams& params, double fundamental_hz, double dt_s);

  struct ControlOutput {
    bool gate = false;
    double i_ref_a = 0.0;
    double duty = 0.0;
  };

  // Outer PI (power command, clamped, conditional integration), current
  // reference k*v_rect/max(v_rms_est^2, eps), inner PI to duty, PWM compare
  // against the triangular carrier. Advances integrators and carrier by dt.
  ControlOutput control_step(double v_rect, double v_rms_est);

  // Advances the piecewise-linear boost ODEs one step. v_rect_mid is the
  // rectified source voltage at the step midpoint.
  void electrical_step(bool gate, double v_rect_mid);

  // Overcurrent on the trailing-cycle inductor RMS; optional DC band with
  // delay. Disarmed before t >= arming_time_s and before the RMS window has
  // filled. A trip opens the input path: i_l clears and stays zero.
  const TripStatus& check_protection(double arming_time_s);

  // Full per-step pipeline: measurement windows, control, electrics,
  // protection. v_src_start/v_src_mid are the terminal voltage at the step
  // start and midpoint (pass the same value under zero-order-hold coupling).
  void step(double v_src_start, double v_src_mid, double arming_time_s);

  const ConverterState& state() const { return state_; }
  ConverterState& mutable_state() { return state_; }
  const ConverterParams& params() const { return params_; }

  // Signed current drawn from the source through the bridge.
  double input_current_a() const { return last_input_current_; }
  double v_rms_estimate() const { return v_rms_est_.rms(); }
  double i_l_trailing_rms() const { return i_rms_.rms(); }
  bool protection_window_full() const { return i_rms_.full(); }
  double dt() const { return dt_; }
  double fundamental_hz() const { return fundamental_hz_; }

  ControlOutput last_control() const { return last_control_; }

 private:
  void force_trip(TripCause cause);

  ConverterParams params_;
  double fundamental_hz_;
  double dt_;
  ConverterState state_;
  RunningRmsWindow v_rms_est_;  // cold start: zero-filled, so energize shows inrush
  RunningRmsWindow i_rms_;
  double last_input_current_ = 0.0;
  double last_v_sign_ = 1.0;
  ControlOutput last_control_;
  std::optional<double> dc_violation_since_s_;
};

}  // namespace minersim
