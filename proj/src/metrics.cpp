#include "gst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "gst/error.hpp"

namespace gst {
namespace {

void check_aligned(const FieldSeries& pred, const FieldSeries& truth) {
  if (pred.size() != truth.size() || pred.empty())
    fail_config("metric series misaligned: " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) +
                " steps");
  for (std::size_t t = 0; t < pred.size(); ++t)
    if (pred[t].size() != truth[t].size()) fail_config("metric frames misaligned at step " + std::to_string(t));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CoefficientRefs wing_refs(double chord, double span) {
  if (!(chord > 0.0) || !(span > 0.0)) fail_config("reference chord and span must be positive");
  return {chord * span, chord, {0.3 * chord, 0.0, 0.0}};
}

CoefficientRefs mesh_refs(const SurfaceMesh& mesh) {
  if (mesh.size() == 0) fail_config("empty mesh has no reference geometry");
  Vec3 lo = mesh.points()[0], hi = lo;
  for (const Vec3& p : mesh.points())
    for (int c = 0; c < 3; ++c) lo[c] = std::min(lo[c], p[c]), hi[c] = std::max(hi[c], p[c]);
  CoefficientRefs r = wing_refs(hi[0] - lo[0], hi[1] - lo[1]);
  r.r_ref[0] += lo[0];
  return r;
}

CoefficientSet integrate_coefficients(std::span<const double> cp, const SurfaceMesh& mesh,
                                      const CoefficientRefs& refs) {
  if (cp.size() != mesh.size())
    fail_config("C_P field has " + std::to_string(cp.size()) + " values for " + std::to_string(mesh.size()) +
                " nodes");
  if (!(refs.s_ref > 0.0) || !(refs.c_ref > 0.0)) fail_config("reference area and chord must be positive");
  double fz = 0.0, my = 0.0;
  for (std::size_t i = 0; i < cp.size(); ++i) {
    const Vec3 f = (-cp[i] * mesh.node_area()[i]) * mesh.node_normal()[i];
    const Vec3 r = mesh.points()[i] - refs.r_ref;
    fz += f[2];
    my += r[2] * f[0] - r[0] * f[2];
  }
  return {fz / refs.s_ref, my / (refs.s_ref * refs.c_ref)};
}

Tensor moment_weights(const SurfaceMesh& mesh, const CoefficientRefs& refs) {
  Tensor w = Tensor::zeros(mesh.size(), 1);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Vec3& n = mesh.node_normal()[i];
    const Vec3 r = mesh.points()[i] - refs.r_ref;
    w[i] = -mesh.node_area()[i] * (r[2] * n[0] - r[0] * n[2]) / (refs.s_ref * refs.c_ref);
  }
  return w;
}

std::vector<double> mape_per_step(const FieldSeries& pred, const FieldSeries& truth, const SurfaceMesh& mesh) {
  check_aligned(pred, truth);
  const std::vector<double>& area = mesh.node_area();
  double area_sum = 0.0;
  for (double a : area) area_sum += a;
  std::vector<double> out(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].size() != area.size()) fail_config("metric frame does not match mesh size");
    double range = 0.0, err = 0.0;
    for (std::size_t i = 0; i < area.size(); ++i) {
      range = std::max(range, std::abs(truth[t][i]));
      err += area[i] * std::abs(pred[t][i] - truth[t][i]);
    }
    if (range == 0.0) fail_numerical("MAPE normalizer is zero at step " + std::to_string(t));
    out[t] = 100.0 * err / (area_sum * range);
  }
  return out;
}

double mape_area_weighted(const FieldSeries& pred, const FieldSeries& truth, const SurfaceMesh& mesh) {
  const std::vector<double> steps = mape_per_step(pred, truth, mesh);
  double s = 0.0;
  for (double v : steps) s += v;
  return s / static_cast<double>(steps.size());
}

double r2(const FieldSeries& pred, const FieldSeries& truth) {
  check_aligned(pred, truth);
  double mean = 0.0;
  std::size_t count = 0;
  bool constant = true;
  for (const auto& f : truth)
    for (double v : f) mean += v, ++count, constant = constant && v == truth.front().front();
  if (constant) fail_numerical("R2 undefined for a constant reference series");
  mean /= static_cast<double>(count);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t)
    for (std::size_t i = 0; i < truth[t].size(); ++i) {
      ss_res += (truth[t][i] - pred[t][i]) * (truth[t][i] - pred[t][i]);
      ss_tot += (truth[t][i] - mean) * (truth[t][i] - mean);
    }
  return 1.0 - ss_res / ss_tot;
}

double rmse(const FieldSeries& pred, const FieldSeries& truth) {
  check_aligned(pred, truth);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < truth.size(); ++t)
    for (std::size_t i = 0; i < truth[t].size(); ++i) {
      s += (pred[t][i] - truth[t][i]) * (pred[t][i] - truth[t][i]);
      ++count;
    }
  return std::sqrt(s / static_cast<double>(count));
}

MetricsReport evaluate_series(const std::string& signal, const FieldSeries& pred, const FieldSeries& truth,
                              const SurfaceMesh& mesh, const CoefficientRefs& refs, std::size_t first_step) {
  MetricsReport r;
  r.signal = signal;
  r.first_step = first_step;
  r.step_mape = mape_per_step(pred, truth, mesh);
  for (double v : r.step_mape) r.mape += v;
  r.mape /= static_cast<double>(r.step_mape.size());
  r.r2 = r2(pred, truth);
  r.rmse = rmse(pred, truth);
  for (std::size_t t = 0; t < pred.size(); ++t) {
    r.predicted.push_back(integrate_coefficients(pred[t], mesh, refs));
    r.reference.push_back(integrate_coefficients(truth[t], mesh, refs));
  }
  return r;
}

void write_report(const MetricsReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j = {{"signal", r.signal}, {"mape_percent", r.mape}, {"r2", r.r2},
                      {"rmse", r.rmse},     {"first_step", r.first_step}, {"steps", r.step_mape.size()}};
  std::ofstream js(dir / (r.signal + "_metrics.json"));
  if (!js) fail_io("cannot write report in " + dir.string());
  js << j.dump(2) << '\n';
  std::ofstream csv(dir / (r.signal + "_series.csv"));
  if (!csv) fail_io("cannot write report series in " + dir.string());
  csv << "step,mape_percent,cl_pred,cl_ref,cmy_pred,cmy_ref\n";
  for (std::size_t t = 0; t < r.step_mape.size(); ++t)
    csv << r.first_step + t << ',' << fmt(r.step_mape[t]) << ',' << fmt(r.predicted[t].cl) << ','
        << fmt(r.reference[t].cl) << ',' << fmt(r.predicted[t].cmy) << ',' << fmt(r.reference[t].cmy) << '\n';
}

}  // namespace gst
