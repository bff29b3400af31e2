#include "minersim/converter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "minersim/errors.hpp"

namespace minersim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
}  // namespace

std::string to_string(TripCause cause) {
  switch (cause) {
    case TripCause::none:
      return "none";
    case TripCause::overcurrent:
      return "overcurrent";
    case TripCause::dc_overvoltage:
      return "dc_overvoltage";
    case TripCause::dc_undervoltage:
      return "dc_undervoltage";
  }
  return "unknown";
}

void validate(const ConverterParams& p, double fundamental_hz) {
  if (!(p.p_av_w > 0.0)) throw ConfigError("ConverterParams.p_av_w must be > 0");
  if (!(p.inductance_h > 0.0)) throw ConfigError("ConverterParams.inductance_h must be > 0");
  if (!(p.capacitance_f > 0.0)) throw ConfigError("ConverterParams.capacitance_f must be > 0");
  if (p.series_resistance_ohm < 0.0)
    throw ConfigError("ConverterParams.series_resistance_ohm must be >= 0");
  if (p.diode_drop_v < 0.0) throw ConfigError("ConverterParams.diode_drop_v must be >= 0");
  if (!(p.duty_max > 0.0 && p.duty_max < 1.0))
    throw ConfigError("ConverterParams.duty_max must lie in (0, 1)");
  if (!(p.epsilon_v2 > 0.0)) throw ConfigError("ConverterParams.epsilon_v2 must be > 0");
  if (p.f_switch_hz < 100.0 * fundamental_hz)
    throw ConfigError("ConverterParams.f_switch_hz must be >= 100x the fundamental");
  if (!(p.v_in_rms_nom_v > 0.0)) throw ConfigError("ConverterParams.v_in_rms_nom_v must be > 0");
  if (!(p.v_dc_ref_v > 0.0)) throw ConfigError("ConverterParams.v_dc_ref_v must be > 0");
  if (!(p.protection.i_trip_rms_a > 0.0))
    throw ConfigError("ProtectionParams.i_trip_rms_a must be > 0");
  if (!(p.protection.v_dc_under_v < p.v_dc_ref_v && p.v_dc_ref_v < p.protection.v_dc_over_v))
    throw ConfigError("ProtectionParams requires v_dc_under < v_dc_ref < v_dc_over");
  if (!(p.k_power_max_w > 0.0)) throw ConfigError("ConverterParams.k_power_max_w must be > 0");
  if (!(p.dc_load_cutoff_fraction >= 0.0 && p.dc_load_cutoff_fraction < 1.0))
    throw ConfigError("ConverterParams.dc_load_cutoff_fraction must lie in [0, 1)");
}

LcSizing size_components(double p_av_w, double v_dc_ref_v, double f0_hz, double dc_ripple_pp_v,
                         double inductor_ripple_fraction, double f_switch_hz,
                         double v_in_rms_nom_v) {
  if (!(p_av_w > 0.0 && v_dc_ref_v > 0.0 && f0_hz > 0.0 && dc_ripple_pp_v > 0.0 &&
        f_switch_hz > 0.0 && v_in_rms_nom_v > 0.0))
    throw ConfigError("size_components: all inputs must be positive");
  if (!(inductor_ripple_fraction > 0.0 && inductor_ripple_fraction < 1.0))
    throw ConfigError("size_components: inductor_ripple_fraction must lie in (0, 1)");

  LcSizing out;
  // The bus absorbs the 2*f0 pulsation of single-phase power.
  out.capacitance_f = p_av_w / (kTwoPi * (2.0 * f0_hz) * v_dc_ref_v * dc_ripple_pp_v);

  // Boost ripple dI = v_in*(1 - v_in/v_dc)/(L*f_sw); worst case over the
  // rectified excursion is v_in = v_dc/2 when reachable, else the input peak.
  const double v_pk = kSqrt2 * v_in_rms_nom_v;
  const double v_worst = std::min(v_pk, v_dc_ref_v / 2.0);
  const double worst_numerator = v_worst * (1.0 - v_worst / v_dc_ref_v);
  const double i_pk = kSqrt2 * p_av_w / v_in_rms_nom_v;
  out.inductance_h = worst_numerator / (f_switch_hz * inductor_ripple_fraction * i_pk);
  return out;
}

PiDesign design_pi_gains(double inductance_h, double capacitance_f, double f_v_bw_hz,
                         double f_i_bw_hz, double f0_hz, double f_switch_hz, double v_dc_ref_v) {
  if (!(f_v_bw_hz < f0_hz / 4.0 && f0_hz / 4.0 < f_i_bw_hz && f_i_bw_hz <= f_switch_hz / 10.0))
    throw ConfigError("design_pi_gains requires f_v_bw < f0/4 < f_i_bw <= f_switch/10");
  if (!(inductance_h > 0.0 && capacitance_f > 0.0 && v_dc_ref_v > 0.0))
    throw ConfigError("design_pi_gains: L, C, v_dc_ref must be positive");

  PiDesign d;
  const double wi = kTwoPi * f_i_bw_hz;
  const double wv = kTwoPi * f_v_bw_hz;
  d.current.kp = wi * inductance_h / v_dc_ref_v;
  d.current.ki = d.current.kp * wi / 10.0;
  d.voltage.kp = wv * capacitance_f * v_dc_ref_v;
  d.voltage.ki = d.voltage.kp * wv / 10.0;
  return d;
}

ConverterParams default_converter_params(double p_av_w, double fundamental_hz) {
  ConverterParams p;
  p.p_av_w = p_av_w;
  const LcSizing lc = size_components(p.p_av_w, p.v_dc_ref_v, fundamental_hz, 20.0, 0.2,
                                      p.f_switch_hz, p.v_in_rms_nom_v);
  p.inductance_h = lc.inductance_h;
  p.capacitance_f = lc.capacitance_f;
  const PiDesign pi = design_pi_gains(p.inductance_h, p.capacitance_f, 10.0, 2000.0,
                                      fundamental_hz, p.f_switch_hz, p.v_dc_ref_v);
  p.pi_voltage = pi.voltage;
  p.pi_current = pi.current;
  p.k_power_max_w = 2.5 * p.p_av_w;
  p.protection.i_trip_rms_a = 1.5 * p.p_av_w / p.v_in_rms_nom_v;
  return p;
}

ConverterParams aggregate_params(const ConverterParams& per_unit, int count) {
  if (count < 1) throw ConfigError("aggregate_params: count must be >= 1");
  const double n = static_cast<double>(count);
  ConverterParams agg = per_unit;
  agg.p_av_w *= n;
  agg.inductance_h /= n;
  agg.capacitance_f *= n;
  agg.series_resistance_ohm /= n;
  agg.k_power_max_w *= n;
  agg.protection.i_trip_rms_a *= n;
  // Gains scale so the aggregate tracks exactly like N units in lockstep:
  // currents are N times larger (inner /N), power commands N times larger
  // (outer *N).
  agg.pi_current.kp /= n;
  agg.pi_current.ki /= n;
  agg.pi_voltage.kp *= n;
  agg.pi_voltage.ki *= n;
  return agg;
}

double rectified_input(double v, double diode_drop) {
  return std::max(std::abs(v) - 2.0 * diode_drop, 0.0);
}

double dc_load_current(double v_dc, const ConverterParams& params) {
  const double cutoff = params.dc_load_cutoff_fraction * params.v_dc_ref_v;
  if (v_dc < cutoff || v_dc <= 0.0) return 0.0;
  return params.p_av_w / v_dc;
}

double ideal_cpl_current(double v, double v_rms, const ConverterParams& params) {
  return params.p_av_w * v / (v_rms * v_rms + params.epsilon_v2);
}

Converter::Converter(const ConverterParams& params, double fundamental_hz, double dt_s)
    : params_(params),
      fundamental_hz_(fundamental_hz),
      dt_(dt_s),
      v_rms_est_(static_cast<std::size_t>(std::llround(1.0 / (fundamental_hz * dt_s))),
                 /*prefill_zeros=*/true),
      i_rms_(static_cast<std::size_t>(std::llround(1.0 / (fundamental_hz * dt_s)))) {
  validate(params_, fundamental_hz_);
  if (!(dt_s > 0.0)) throw ConfigError("Converter dt must be > 0");
  if (dt_s > 1.0 / (20.0 * params_.f_switch_hz))
    throw ConfigError("Converter dt must give >= 20 steps per carrier period");
  // Energize with the bus pre-charged to the rectified peak and the
  // controllers at rest; the cold RMS estimate produces the startup inrush.
  state_.v_dc_v = kSqrt2 * params_.v_in_rms_nom_v - 2.0 * params_.diode_drop_v;
}

Converter::ControlOutput Converter::control_step(double v_rect, double v_rms_est) {
  ControlOutput out;
  if (state_.trip.tripped) {
    last_control_ = out;  // gate off, zero reference
    return out;
  }

  // Outer loop: power command from the bus-voltage error.
  const double e_v = params_.v_dc_ref_v - state_.v_dc_v;
  double k = params_.pi_voltage.kp * e_v + state_.integ_v;
  const bool v_hi = k > params_.k_power_max_w;
  const bool v_lo = k < 0.0;
  if (!((v_hi && e_v > 0.0) || (v_lo && e_v < 0.0)))
    state_.integ_v += params_.pi_voltage.ki * e_v * dt_;
  k = std::clamp(k, 0.0, params_.k_power_max_w);

  // The multiplier shapes the reference on the rectified voltage and holds
  // commanded power constant against the measured RMS.
  out.i_ref_a = k * v_rect / std::max(v_rms_est * v_rms_est, params_.epsilon_v2);

  // Inner loop: duty from the current error, clamped with conditional
  // integration.
  const double e_i = out.i_ref_a - state_.i_l_a;
  double duty = params_.pi_current.kp * e_i + state_.integ_i;
  const bool i_hi = duty > params_.duty_max;
  const bool i_lo = duty < 0.0;
  if (!((i_hi && e_i > 0.0) || (i_lo && e_i < 0.0)))
    state_.integ_i += params_.pi_current.ki * e_i * dt_;
  duty = std::clamp(duty, 0.0, params_.duty_max);
  out.duty = duty;

  const double carrier = 1.0 - std::abs(2.0 * state_.carrier_phase - 1.0);
  out.gate = duty > carrier;

  state_.carrier_phase += params_.f_switch_hz * dt_;
  state_.carrier_phase -= std::floor(state_.carrier_phase);

  last_control_ = out;
  return out;
}

void Converter::electrical_step(bool gate, double v_rect_mid) {
  const double L = params_.inductance_h;
  const double C = params_.capacitance_f;
  const double R = params_.series_resistance_ohm;
  const double a = dt_ / (2.0 * L);
  const double b = dt_ / (2.0 * C);

  double i = state_.i_l_a;
  double v = state_.v_dc_v;
  const double i_load = dc_load_current(v, params_);

  if (state_.trip.tripped) {
    // Input relay open: the bus just feeds the DC load.
    state_.v_dc_v = v - dt_ * i_load / C;
    state_.t_s += dt_;
    if (!std::isfinite(state_.v_dc_v))
      throw SimulationError("non-finite converter state", state_.t_s, "v_dc");
    return;
  }

  double i_next;
  double v_next;
  if (gate) {
    // Switch conducting: inductor across the rectifier, bus feeds the load.
    i_next = (i * (1.0 - a * R) + 2.0 * a * v_rect_mid) / (1.0 + a * R);
    if (i_next < 0.0) i_next = 0.0;  // cannot happen with v_rect >= 0; kept as a guard
    v_next = v - dt_ * i_load / C;
  } else if (i > 0.0 || v_rect_mid > v) {
    // Boost diode conducting: trapezoidal 2x2 update of the coupled pair.
    i_next = (i * (1.0 - a * R - a * b) + 2.0 * a * (v_rect_mid - v) + 2.0 * a * b * i_load) /
             (1.0 + a * R + a * b);
    if (i_next < 0.0) {
      // Diode blocks at the interpolated crossing; the cap keeps only the
      // charge delivered up to it.
      const double theta = i / (i - i_next);
      i_next = 0.0;
      v_next = v + dt_ * (theta * i * 0.5 - i_load) / C;
    } else {
      v_next = v + b * (i + i_next - 2.0 * i_load);
    }
  } else {
    // Discontinuous conduction: diode blocked while v_rect < v_dc.
    i_next = 0.0;
    v_next = v - dt_ * i_load / C;
  }

  state_.i_l_a = i_next;
  state_.v_dc_v = v_next;
  state_.t_s += dt_;

  if (!std::isfinite(state_.i_l_a))
    throw SimulationError("non-finite converter state", state_.t_s, "i_l");
  if (!std::isfinite(state_.v_dc_v))
    throw SimulationError("non-finite converter state", state_.t_s, "v_dc");
}

void Converter::force_trip(TripCause cause) {
  state_.trip.tripped = true;
  state_.trip.cause = cause;
  state_.trip.trip_time_s = state_.t_s;
  state_.i_l_a = 0.0;  // input relay opens
  last_input_current_ = 0.0;
}

const TripStatus& Converter::check_protection(double arming_time_s) {
  if (state_.trip.tripped) return state_.trip;  // latched, absorbing
  if (state_.t_s < arming_time_s || !i_rms_.full()) return state_.trip;

  if (i_rms_.mean_square() >
      params_.protection.i_trip_rms_a * params_.protection.i_trip_rms_a) {
    force_trip(TripCause::overcurrent);
    return state_.trip;
  }

  if (params_.protection.uv_ov_enabled) {
    const bool over = state_.v_dc_v > params_.protection.v_dc_over_v;
    const bool under = state_.v_dc_v < params_.protection.v_dc_under_v;
    if (over || under) {
      if (!dc_violation_since_s_) dc_violation_since_s_ = state_.t_s;
      if (state_.t_s - *dc_violation_since_s_ >= params_.protection.uv_ov_delay_s)
        force_trip(over ? TripCause::dc_overvoltage : TripCause::dc_undervoltage);
    } else {
      dc_violation_since_s_.reset();
    }
  }
  return state_.trip;
}

void Converter::step(double v_src_start, double v_src_mid, double arming_time_s) {
  v_rms_est_.push(v_src_start);
  const double v_rect_ctl = rectified_input(v_src_start, params_.diode_drop_v);
  const ControlOutput ctl = control_step(v_rect_ctl, v_rms_est_.rms());
  const double v_rect_mid = rectified_input(v_src_mid, params_.diode_drop_v);
  if (v_src_mid != 0.0) last_v_sign_ = v_src_mid > 0.0 ? 1.0 : -1.0;
  electrical_step(ctl.gate, v_rect_mid);
  i_rms_.push(state_.i_l_a);
  check_protection(arming_time_s);
  last_input_current_ = state_.trip.tripped ? 0.0 : last_v_sign_ * state_.i_l_a;
}

}  // namespace minersim
