#pragma once

// Prescribed pitch/plunge motions: Schroeder-phased multisines (undamped and
// linearly damped) and single harmonics, with closed-form derivatives.

#include <json.hpp>
#include <string>
#include <vector>

namespace gst {

inline constexpr double kDefaultChord = 0.4064;   // m
inline constexpr double kDefaultUInf = 251.8;     // m/s, Mach 0.74 at 340.3 m/s
inline constexpr int kDefaultHarmonics = 9;
inline constexpr double kDampedEndFraction = 0.1;

enum class SignalKind { kDamped, kUndamped, kSingle };

// phi_m = -m(m+1)pi/M for m = 1..M.
std::vector<double> schroeder_phases(int harmonics);

struct SchroederParams {
  int harmonics = kDefaultHarmonics;
  double amplitude = 0.0;  // split uniformly: a_m = amplitude / M
  double omega = 0.0;      // fundamental, rad/s
  bool damped = false;
  double t0 = 0.0;
  double t_end = 1.0;
};

// Value and first two time derivatives.
struct Signal3 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// sum_m a_m sin((m+1) omega t + phi_m).
double us_signal(const SchroederParams& p, double t);
// Envelope (a_end - a0)/(t_end - t0) (t - t0) + a0 applied per harmonic, a_end = 0.1 a0.
double ds_signal(const SchroederParams& p, double t);
// Ratio of the DS envelope to its starting amplitude.
double ds_envelope(const SchroederParams& p, double t);
Signal3 schroeder_eval(const SchroederParams& p, double t);

double kappa_to_omega(double kappa, double chord = kDefaultChord, double u_inf = kDefaultUInf);

struct AxisSpec {
  double kappa = 0.0;
  double amplitude = 0.0;  // pitch in degrees, plunge in metres
};

struct SignalSpec {
  std::string name;
  SignalKind kind = SignalKind::kDamped;
  AxisSpec pitch;
  AxisSpec plunge;
  double duration = 2.0;
  double dt = 2e-3;
  int harmonics = kDefaultHarmonics;
  double chord = kDefaultChord;
  double u_inf = kDefaultUInf;

  std::size_t frame_count() const;
};

struct MotionSample {
  double t = 0.0;
  double theta = 0.0, dtheta = 0.0, ddtheta = 0.0;  // rad
  double xi = 0.0, dxi = 0.0, ddxi = 0.0;           // m
};

MotionSample sample_motion(const SignalSpec& spec, double t);
std::vector<MotionSample> sample_series(const SignalSpec& spec);

std::string to_string(SignalKind kind);
SignalKind signal_kind_from_string(const std::string& s);
nlohmann::json to_json(const SignalSpec& spec);
SignalSpec signal_spec_from_json(const nlohmann::json& j);

}  // namespace gst
