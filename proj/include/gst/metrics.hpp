#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gst/mesh.hpp"
#include "gst/tensor.hpp"

namespace gst {

using FieldSeries = std::vector<std::vector<double>>;

struct CoefficientRefs {
  double s_ref = 1.0;
  double c_ref = 1.0;
  Vec3 r_ref{0.0, 0.0, 0.0};
};

// S_ref = chord * span, c_ref = chord, moment about 30% chord.
CoefficientRefs wing_refs(double chord, double span);
// wing_refs from the mesh's x (chord) and y (span) extents.
CoefficientRefs mesh_refs(const SurfaceMesh& mesh);

struct CoefficientSet {
  double cl = 0.0;
  double cmy = 0.0;
};

// f_i = -C_P,i A_i n_i; C_L = sum f_z / S_ref; C_My = sum [(r_i - r_ref) x f_i]_y / (S_ref c_ref).
CoefficientSet integrate_coefficients(std::span<const double> cp, const SurfaceMesh& mesh,
                                      const CoefficientRefs& refs);
// Per-node weights w with C_My = sum_i w_i C_P,i (n x 1).
Tensor moment_weights(const SurfaceMesh& mesh, const CoefficientRefs& refs);

// 100 * mean_t [ sum_i A_i |pred - true| / (sum_i A_i * max_i |true|) ].
double mape_area_weighted(const FieldSeries& pred, const FieldSeries& truth, const SurfaceMesh& mesh);
std::vector<double> mape_per_step(const FieldSeries& pred, const FieldSeries& truth, const SurfaceMesh& mesh);
double r2(const FieldSeries& pred, const FieldSeries& truth);
double rmse(const FieldSeries& pred, const FieldSeries& truth);

struct MetricsReport {
  std::string signal;
  double mape = 0.0;
  double r2 = 0.0;
  double rmse = 0.0;
  std::size_t first_step = 0;  // frame index of the first prediction
  std::vector<double> step_mape;
  std::vector<CoefficientSet> predicted;
  std::vector<CoefficientSet> reference;
};

MetricsReport evaluate_series(const std::string& signal, const FieldSeries& pred, const FieldSeries& truth,
                              const SurfaceMesh& mesh, const CoefficientRefs& refs, std::size_t first_step);

// <dir>/<signal>_metrics.json and <dir>/<signal>_series.csv.
void write_report(const MetricsReport& r, const std::filesystem::path& dir);

}  // namespace gst
