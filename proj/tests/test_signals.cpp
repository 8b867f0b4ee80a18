#include <doctest.h>

#include <numbers>

#include "gst/signals.hpp"
#include "oracles.hpp"

using namespace gst;
using namespace gst::test;

namespace {

double rel(double analytic, double numeric, double scale) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), scale});
}

}  // namespace

TEST_CASE("Schroeder phases match the closed form for M = 1..12") {
  for (int m = 1; m <= 12; ++m) {
    const auto phi = schroeder_phases(m);
    REQUIRE(phi.size() == static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
      const double expect = -static_cast<double>(k * (k + 1)) * std::numbers::pi / m;
      CHECK(std::abs(phi[k - 1] - expect) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(expect));
      CHECK(phi[k - 1] <= 0.0);
    }
  }
  CHECK_THROWS(schroeder_phases(0));
}

TEST_CASE("damped envelope ends at exactly one tenth") {
  SchroederParams p;
  p.amplitude = 2.0;
  p.omega = 30.0;
  p.damped = true;
  p.t0 = 0.0;
  p.t_end = 2.0;
  CHECK(ds_envelope(p, p.t_end) == 0.1);
  CHECK(ds_envelope(p, p.t0) == 1.0);
  CHECK(ds_envelope(p, 1.0) == doctest::Approx(0.55).epsilon(1e-15));
  for (double t : {0.3, 1.1, 2.0}) {
    SchroederParams u = p;
    u.damped = false;
    CHECK(ds_signal(p, t) == doctest::Approx(ds_envelope(p, t) * us_signal(u, t)).epsilon(1e-14));
  }
  CHECK(ds_signal(p, 2.0) == 0.1 * us_signal(SchroederParams{p.harmonics, p.amplitude, p.omega, false, 0.0, 2.0}, 2.0));
  CHECK_THROWS(ds_envelope(p, 2.5));
}

TEST_CASE("undamped multisine is the sum of shifted harmonics") {
  SchroederParams p;
  p.harmonics = 4;
  p.amplitude = 1.0;
  p.omega = 5.0;
  const double t = 0.37;
  double e = 0.0;
  for (int m = 1; m <= 4; ++m) e += 0.25 * std::sin((m + 1) * 5.0 * t - m * (m + 1) * std::numbers::pi / 4);
  CHECK(us_signal(p, t) == doctest::Approx(e).epsilon(1e-14));
}

TEST_CASE("reduced frequency conversion") {
  CHECK(kappa_to_omega(0.0) == 0.0);
  CHECK(kappa_to_omega(0.114, 0.4064, 250.0) == doctest::Approx(140.26).epsilon(1e-4));
  CHECK(kappa_to_omega(0.114, 0.4064, 500.0) == doctest::Approx(2 * kappa_to_omega(0.114, 0.4064, 250.0)));
}

TEST_CASE("analytic motion derivatives match finite differences for every signal type") {
  Rng rng(89);
  for (SignalKind kind : {SignalKind::kDamped, SignalKind::kUndamped, SignalKind::kSingle}) {
    CAPTURE(to_string(kind));
    SignalSpec s;
    s.kind = kind;
    s.pitch = {0.148, 1.0};
    s.plunge = {0.181, -0.123};
    const double w = kappa_to_omega(0.181) * (kind == SignalKind::kSingle ? 1.0 : s.harmonics + 1.0);
    const double h = 1e-3 / w;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double t = rng.uniform(3 * h, s.duration - 3 * h);
      const MotionSample m = sample_motion(s, t);
      auto th = [&](double x) { return sample_motion(s, x).theta; };
      auto dth = [&](double x) { return sample_motion(s, x).dtheta; };
      auto xi = [&](double x) { return sample_motion(s, x).xi; };
      auto dxi = [&](double x) { return sample_motion(s, x).dxi; };
      const double sth = 1.0 * std::numbers::pi / 180.0 * w * 1e-3, sxi = 0.123 * w * 1e-3;
      worst = std::max({worst, rel(m.dtheta, deriv(th, t, h), sth), rel(m.ddtheta, deriv(dth, t, h), sth * w),
                        rel(m.dxi, deriv(xi, t, h), sxi), rel(m.ddxi, deriv(dxi, t, h), sxi * w)});
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("series sampling and spec round trip") {
  SignalSpec s;
  s.name = "x";
  s.kind = SignalKind::kUndamped;
  s.pitch = {0.1, 0.5};
  s.plunge = {0.2, 0.01};
  s.duration = 0.5;
  const auto series = sample_series(s);
  CHECK(series.size() == 250);
  CHECK(series[10].t == 10 * s.dt);
  const SignalSpec r = signal_spec_from_json(to_json(s));
  CHECK(to_json(r) == to_json(s));
  CHECK_THROWS(signal_spec_from_json(nlohmann::json{{"type", "XX"}}));
  s.pitch.amplitude = 0.0;
  CHECK(sample_motion(s, 0.2).theta == 0.0);
}
