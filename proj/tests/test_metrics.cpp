#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gst/datasets.hpp"
#include "gst/metrics.hpp"
#include "support.hpp"

using namespace gst;

namespace {

// Unit square in the z = 0 plane, normals +z.
SurfaceMesh plate(double sx = 1.0, double sy = 1.0) {
  return SurfaceMesh({{0, 0, 0}, {sx, 0, 0}, {sx, sy, 0}, {0, sy, 0}}, {{0, 1, 2}, {0, 2, 3}});
}

FieldSeries random_series(Rng& rng, std::size_t steps, std::size_t n) {
  FieldSeries s(steps, std::vector<double>(n));
  for (auto& f : s)
    for (double& v : f) v = rng.uniform(-1.2, 0.4);
  return s;
}

double hand_mape(const FieldSeries& p, const FieldSeries& t, const std::vector<double>& area) {
  double total = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    double num = 0.0, den = 0.0, range = 0.0;
    for (double v : t[k]) range = std::max(range, std::abs(v));
    for (std::size_t i = 0; i < area.size(); ++i) {
      num += area[i] * std::abs(p[k][i] - t[k][i]);
      den += area[i] * range;
    }
    total += num / den;
  }
  return 100.0 * total / static_cast<double>(t.size());
}

}  // namespace

TEST_CASE("flat plate with uniform suction has unit lift") {
  const SurfaceMesh m = plate();
  const CoefficientRefs refs{1.0, 1.0, {0.3, 0.0, 0.0}};
  const std::vector<double> cp(4, -1.0);
  const CoefficientSet c = integrate_coefficients(cp, m, refs);
  CHECK(c.cl == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.cmy == doctest::Approx(-0.2).epsilon(1e-14));
  const CoefficientSet z = integrate_coefficients(std::vector<double>(4, 0.0), m, refs);
  CHECK(z.cl == 0.0);
  CHECK(z.cmy == 0.0);
  CHECK_THROWS(integrate_coefficients(std::vector<double>(3, 0.0), m, refs));
}

TEST_CASE("uniform pressure on the closed wing gives no lift") {
  const SurfaceMesh m = generate_wing_mesh(19, 19);
  const CoefficientRefs refs = mesh_refs(m);
  const CoefficientSet c = integrate_coefficients(std::vector<double>(m.size(), 0.7), m, refs);
  CHECK(std::abs(c.cl) < 1e-3);
  CHECK(std::abs(c.cmy) < 1e-3);
  CHECK(refs.r_ref[0] == doctest::Approx(0.3 * kDefaultChord));
  CHECK(refs.s_ref == doctest::Approx(kDefaultChord * 2.0 * kDefaultChord));
}

TEST_CASE("coefficients are linear and match the moment weights") {
  Rng rng(3);
  const SurfaceMesh m = generate_wing_mesh(6, 8);
  const CoefficientRefs refs = mesh_refs(m);
  const auto s = random_series(rng, 2, m.size());
  std::vector<double> mix(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) mix[i] = 2.0 * s[0][i] - 0.5 * s[1][i];
  const auto a = integrate_coefficients(s[0], m, refs), b = integrate_coefficients(s[1], m, refs);
  const auto c = integrate_coefficients(mix, m, refs);
  CHECK(std::abs(c.cl - (2.0 * a.cl - 0.5 * b.cl)) < 1e-12);
  CHECK(std::abs(c.cmy - (2.0 * a.cmy - 0.5 * b.cmy)) < 1e-12);
  const Tensor w = moment_weights(m, refs);
  double cm = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) cm += w[i] * s[0][i];
  CHECK(std::abs(cm - a.cmy) < 1e-12);
}

TEST_CASE("MAPE hand examples") {
  const SurfaceMesh m = plate();
  const FieldSeries truth{{-1.0, -1.0, -1.0, -1.0}};
  FieldSeries pred = truth;
  CHECK(mape_area_weighted(pred, truth, m) == 0.0);
  for (double& v : pred[0]) v *= 1.01;
  CHECK(mape_area_weighted(pred, truth, m) == doctest::Approx(1.0).epsilon(1e-12));

  const SurfaceMesh two({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
  const FieldSeries t2{{1.0, 0.0, 0.0}};
  const FieldSeries p2{{1.01, 0.0, 0.0}};
  CHECK(mape_area_weighted(p2, t2, two) == doctest::Approx(100.0 * 0.01 / 3.0).epsilon(1e-12));
  CHECK_THROWS(mape_area_weighted(p2, FieldSeries{{0.0, 0.0, 0.0}}, two));
}

TEST_CASE("MAPE matches an independent sum and ignores area scale") {
  Rng rng(11);
  const SurfaceMesh m = generate_wing_mesh(5, 6);
  const auto t = random_series(rng, 4, m.size()), p = random_series(rng, 4, m.size());
  const double v = mape_area_weighted(p, t, m);
  CHECK(v == doctest::Approx(hand_mape(p, t, m.node_area())).epsilon(1e-12));
  std::vector<Vec3> big = m.points();
  for (auto& q : big) q = 2.0 * q;
  const SurfaceMesh scaled(big, m.triangles());
  CHECK(mape_area_weighted(p, t, scaled) == doctest::Approx(v).epsilon(1e-12));
  const auto steps = mape_per_step(p, t, m);
  REQUIRE(steps.size() == 4);
  CHECK((steps[0] + steps[1] + steps[2] + steps[3]) / 4.0 == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("R2 and RMSE") {
  Rng rng(5);
  const auto t = random_series(rng, 3, 20);
  CHECK(r2(t, t) == 1.0);
  CHECK(rmse(t, t) == 0.0);
  FieldSeries off = t;
  for (auto& f : off)
    for (double& v : f) v += 0.25;
  CHECK(rmse(off, t) == doctest::Approx(0.25).epsilon(1e-12));
  double mean = 0.0;
  for (const auto& f : t)
    for (double v : f) mean += v / 60.0;
  const FieldSeries flat(3, std::vector<double>(20, mean));
  CHECK(std::abs(r2(flat, t)) < 1e-12);
  const auto p = random_series(rng, 3, 20);
  double mse = 0.0;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 20; ++i) mse += (p[k][i] - t[k][i]) * (p[k][i] - t[k][i]) / 60.0;
  CHECK(std::abs(rmse(p, t) * rmse(p, t) - mse) < 1e-12);
  CHECK(r2(p, t) <= 1.0);
  CHECK_THROWS(r2(t, flat));
}

TEST_CASE("perfect predictions give an ideal report") {
  Rng rng(8);
  const SurfaceMesh m = generate_wing_mesh(5, 5);
  const auto t = random_series(rng, 5, m.size());
  const MetricsReport r = evaluate_series("sig", t, t, m, mesh_refs(m), 3);
  CHECK(r.mape == 0.0);
  CHECK(r.r2 == 1.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.step_mape.size() == 5);
  CHECK(r.predicted.size() == 5);
  const auto dir = std::filesystem::temp_directory_path() / "gst_test_metrics";
  std::filesystem::remove_all(dir);
  write_report(r, dir);
  CHECK(std::filesystem::exists(dir / "sig_metrics.json"));
  CHECK(std::filesystem::exists(dir / "sig_series.csv"));
  std::filesystem::remove_all(dir);
}
