#pragma once

// Desk-scale stand-in for the CFD corpus: a closed rectangular wing mesh, a
// synthetic unsteady C_P oracle with a lagged pitch state and a moving
// pseudo-shock, and the 12-signal train/test/validation split.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gst/mesh.hpp"
#include "gst/signals.hpp"

namespace gst {

struct WingGeometry {
  double chord = kDefaultChord;
  double span = 2.0 * kDefaultChord;
  double edge_half_thickness = 0.0005;  // m, keeps the sheets apart at the edges
  double max_camber_thickness = 0.003;  // m, parabolic bulge at mid-chord
};

// Upper and lower sheets of (chord_panels + 1) x (span_panels + 1) nodes each, cosine spaced along the chord,
// closed by strips along all four edges. Node k < n/2 is on the upper sheet.
SurfaceMesh generate_wing_mesh(int span_panels, int chord_panels, const WingGeometry& geom = {});

struct SyntheticOracleConfig {
  double chord = kDefaultChord;
  double span = 2.0 * kDefaultChord;
  double k_theta = 10.0;       // per rad of lagged pitch
  double k_xi = 0.004;         // per m/s of lagged plunge rate
  double tau = 0.01;           // s, pitch lag time constant
  double tau_xi = 0.001;       // s, plunge-rate lag time constant
  double shock_x0 = 0.55;      // fraction of chord
  double shock_gain = 2.3;     // m of shock travel per rad of lagged pitch
  double shock_width = 0.06;   // m
  double shock_strength = 0.3;
  double le_suction = 0.6;     // upper leading-edge suction peak
  double le_length = 0.3;      // chord fraction over which the peak decays
  double edge_blend = 0.15;    // blend length as a chord fraction; both sheets meet on all four edges
};

// theta_lag_k = theta_k + (theta_lag_{k-1} - theta_k) exp(-dt / tau), theta_lag_0 = theta_0:
// the exact solution of d(theta_lag)/dt = (theta - theta_lag)/tau with theta held over each step.
std::vector<double> lagged_pitch(std::span<const MotionSample> motion, double dt, double tau);
// Plunge rate through the same lag but held from the previous sample:
// r_k = r_{k-1} exp(-dt / tau) + (1 - exp(-dt / tau)) xi_dot_{k-1}, r_0 = xi_dot_0.
std::vector<double> lagged_plunge_rate(std::span<const MotionSample> motion, double dt, double tau);

// C_P at one instant given the lagged states. Upper and lower values blend to
// their mean near every edge of the closed surface, so the field is continuous there.
std::vector<double> synthetic_cp_frame(const SyntheticOracleConfig& cfg, const SurfaceMesh& mesh, double theta_lag,
                                       double xi_rate_lag);
// Whole history, frame by frame.
std::vector<std::vector<double>> synthetic_cp(const SyntheticOracleConfig& cfg, const SurfaceMesh& mesh,
                                              std::span<const MotionSample> motion, double dt);

enum class Split { kTrain, kTest, kValidation };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Dataset {
  std::string name;
  Split split = Split::kTrain;
  SignalSpec spec;
  double dt = 2e-3;
  std::string mesh_file;  // relative to the dataset directory
  std::vector<MotionSample> motion;
  std::vector<std::vector<double>> cp;

  std::size_t frames() const noexcept { return motion.size(); }
  std::size_t nodes() const noexcept { return cp.empty() ? 0 : cp.front().size(); }
};

// The 12 signals: 4 training (DS), 6 test, 2 validation (DS, SH).
std::vector<std::pair<SignalSpec, Split>> table1_specs(double duration = 2.0, double dt = 2e-3);

std::vector<Dataset> build_splits(const std::vector<std::pair<SignalSpec, Split>>& specs,
                                  const SyntheticOracleConfig& oracle, const SurfaceMesh& mesh);

// Keeps frames 0, k, 2k, ... unchanged.
Dataset downsample(const Dataset& d, std::size_t k);

// <dir>/<name>.json + <dir>/<name>.bin; per frame 6 f64 motion values then the C_P values.
void save_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& manifest);

}  // namespace gst
