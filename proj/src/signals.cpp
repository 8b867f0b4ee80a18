#include "gst/signals.hpp"

#include <cmath>
#include <numbers>

#include "gst/error.hpp"

namespace gst {
namespace {

constexpr double kPi = std::numbers::pi;

// Undamped multisine and its derivatives.
Signal3 multisine(const SchroederParams& p, double t) {
  Signal3 s;
  if (p.harmonics < 1) fail_config("Schroeder signal needs at least one harmonic");
  const double am = p.amplitude / p.harmonics;
  const std::vector<double> phi = schroeder_phases(p.harmonics);
  for (int m = 1; m <= p.harmonics; ++m) {
    const double w = (m + 1) * p.omega;
    const double arg = w * t + phi[m - 1];
    const double sn = std::sin(arg), cs = std::cos(arg);
    s.v += am * sn;
    s.d1 += am * w * cs;
    s.d2 -= am * w * w * sn;
  }
  return s;
}

void check_ramp(const SchroederParams& p, double t) {
  if (!(p.t_end > p.t0)) fail_config("damped signal needs t_end > t0");
  // Tolerate rounding in t = k * dt at the final frame.
  const double slack = 1e-9 * (p.t_end - p.t0);
  if (t < p.t0 - slack || t > p.t_end + slack)
    fail_config("damped signal evaluated at t = " + std::to_string(t) + " outside [t0, t_end]");
}

}  // namespace

std::vector<double> schroeder_phases(int harmonics) {
  if (harmonics < 1) fail_config("phases need M >= 1");
  std::vector<double> phi(static_cast<std::size_t>(harmonics));
  for (int m = 1; m <= harmonics; ++m) phi[m - 1] = -static_cast<double>(m) * (m + 1) * kPi / harmonics;
  return phi;
}

double us_signal(const SchroederParams& p, double t) { return multisine(p, t).v; }

double ds_envelope(const SchroederParams& p, double t) {
  check_ramp(p, t);
  return std::lerp(1.0, kDampedEndFraction, (t - p.t0) / (p.t_end - p.t0));
}

double ds_signal(const SchroederParams& p, double t) {
  SchroederParams q = p;
  q.damped = true;
  return schroeder_eval(q, t).v;
}

Signal3 schroeder_eval(const SchroederParams& p, double t) {
  const Signal3 s = multisine(p, t);
  if (!p.damped) return s;
  const double e = ds_envelope(p, t);
  const double de = (kDampedEndFraction - 1.0) / (p.t_end - p.t0);
  return {e * s.v, de * s.v + e * s.d1, 2.0 * de * s.d1 + e * s.d2};
}

double kappa_to_omega(double kappa, double chord, double u_inf) {
  if (!(chord > 0.0) || !(u_inf > 0.0)) fail_config("kappa_to_omega needs positive chord and freestream speed");
  return 2.0 * kappa * u_inf / chord;
}

std::size_t SignalSpec::frame_count() const {
  if (!(duration > 0.0) || !(dt > 0.0)) fail_config("signal " + name + " needs positive duration and dt");
  return static_cast<std::size_t>(std::llround(duration / dt));
}

namespace {

Signal3 axis_eval(const SignalSpec& spec, const AxisSpec& axis, double scale, double t) {
  const double amp = axis.amplitude * scale;
  const double omega = kappa_to_omega(axis.kappa, spec.chord, spec.u_inf);
  if (amp == 0.0) return {};
  if (spec.kind == SignalKind::kSingle) {
    const double sn = std::sin(omega * t), cs = std::cos(omega * t);
    return {amp * sn, amp * omega * cs, -amp * omega * omega * sn};
  }
  SchroederParams p;
  p.harmonics = spec.harmonics;
  p.amplitude = amp;
  p.omega = omega;
  p.damped = spec.kind == SignalKind::kDamped;
  p.t0 = 0.0;
  p.t_end = spec.duration;
  return schroeder_eval(p, t);
}

}  // namespace

MotionSample sample_motion(const SignalSpec& spec, double t) {
  const Signal3 th = axis_eval(spec, spec.pitch, kPi / 180.0, t);
  const Signal3 xi = axis_eval(spec, spec.plunge, 1.0, t);
  return {t, th.v, th.d1, th.d2, xi.v, xi.d1, xi.d2};
}

std::vector<MotionSample> sample_series(const SignalSpec& spec) {
  const std::size_t n = spec.frame_count();
  std::vector<MotionSample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(sample_motion(spec, static_cast<double>(k) * spec.dt));
  return out;
}

std::string to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::kDamped: return "DS";
    case SignalKind::kUndamped: return "US";
    case SignalKind::kSingle: return "SH";
  }
  return "?";
}

SignalKind signal_kind_from_string(const std::string& s) {
  if (s == "DS") return SignalKind::kDamped;
  if (s == "US") return SignalKind::kUndamped;
  if (s == "SH") return SignalKind::kSingle;
  fail_config("unknown signal type '" + s + "' (expected DS, US or SH)");
}

nlohmann::json to_json(const SignalSpec& spec) {
  return {{"name", spec.name},
          {"type", to_string(spec.kind)},
          {"kappa_theta", spec.pitch.kappa},
          {"a_theta_deg", spec.pitch.amplitude},
          {"kappa_xi", spec.plunge.kappa},
          {"a_xi_m", spec.plunge.amplitude},
          {"duration", spec.duration},
          {"dt", spec.dt},
          {"harmonics", spec.harmonics},
          {"chord", spec.chord},
          {"u_inf", spec.u_inf}};
}

SignalSpec signal_spec_from_json(const nlohmann::json& j) {
  try {
    SignalSpec s;
    s.name = j.value("name", std::string());
    s.kind = signal_kind_from_string(j.at("type").get<std::string>());
    s.pitch = {j.at("kappa_theta").get<double>(), j.at("a_theta_deg").get<double>()};
    s.plunge = {j.at("kappa_xi").get<double>(), j.at("a_xi_m").get<double>()};
    s.duration = j.value("duration", s.duration);
    s.dt = j.value("dt", s.dt);
    s.harmonics = j.value("harmonics", s.harmonics);
    s.chord = j.value("chord", s.chord);
    s.u_inf = j.value("u_inf", s.u_inf);
    s.frame_count();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("malformed signal spec: ") + e.what());
  }
}

}  // namespace gst
