#include "gst/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <fstream>
#include <json.hpp>

#include "gst/binary_io.hpp"
#include "gst/error.hpp"

namespace gst {
namespace {

void add_oriented(std::vector<Tri>& tris, const std::vector<Vec3>& pts, Tri t, const Vec3& outward) {
  const Vec3 n = cross(pts[t[1]] - pts[t[0]], pts[t[2]] - pts[t[0]]);
  if (dot(n, outward) < 0.0) std::swap(t[1], t[2]);
  tris.push_back(t);
}

// Quad a-b-c-d (in cyclic order) split along a-c.
void add_quad(std::vector<Tri>& tris, const std::vector<Vec3>& pts, std::int64_t a, std::int64_t b, std::int64_t c,
              std::int64_t d, const Vec3& outward) {
  add_oriented(tris, pts, {a, b, c}, outward);
  add_oriented(tris, pts, {a, c, d}, outward);
}

}  // namespace

SurfaceMesh generate_wing_mesh(int span_panels, int chord_panels, const WingGeometry& geom) {
  if (span_panels < 4 || chord_panels < 4) fail_config("wing mesh needs at least 4 panels in each direction");
  const std::int64_t nc = chord_panels + 1, ns = span_panels + 1;
  const std::int64_t sheet = nc * ns;
  auto id = [&](int side, std::int64_t i, std::int64_t j) { return side * sheet + j * nc + i; };

  std::vector<Vec3> pts(static_cast<std::size_t>(2 * sheet));
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    for (std::int64_t j = 0; j < ns; ++j) {
      for (std::int64_t i = 0; i < nc; ++i) {
        const double s = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / chord_panels));
        const double h = geom.edge_half_thickness + 4.0 * geom.max_camber_thickness * s * (1.0 - s);
        pts[id(side, i, j)] = {s * geom.chord, static_cast<double>(j) / span_panels * geom.span, sign * h};
      }
    }
  }

  std::vector<Tri> tris;
  for (int side = 0; side < 2; ++side) {
    const Vec3 out{0.0, 0.0, side == 0 ? 1.0 : -1.0};
    for (std::int64_t j = 0; j + 1 < ns; ++j)
      for (std::int64_t i = 0; i + 1 < nc; ++i)
        add_quad(tris, pts, id(side, i, j), id(side, i + 1, j), id(side, i + 1, j + 1), id(side, i, j + 1), out);
  }
  // Leading and trailing edge strips.
  for (std::int64_t j = 0; j + 1 < ns; ++j) {
    add_quad(tris, pts, id(0, 0, j), id(0, 0, j + 1), id(1, 0, j + 1), id(1, 0, j), {-1.0, 0.0, 0.0});
    add_quad(tris, pts, id(0, nc - 1, j), id(0, nc - 1, j + 1), id(1, nc - 1, j + 1), id(1, nc - 1, j),
             {1.0, 0.0, 0.0});
  }
  // Root and tip strips.
  for (std::int64_t i = 0; i + 1 < nc; ++i) {
    add_quad(tris, pts, id(0, i, 0), id(0, i + 1, 0), id(1, i + 1, 0), id(1, i, 0), {0.0, -1.0, 0.0});
    add_quad(tris, pts, id(0, i, ns - 1), id(0, i + 1, ns - 1), id(1, i + 1, ns - 1), id(1, i, ns - 1),
             {0.0, 1.0, 0.0});
  }
  return SurfaceMesh(std::move(pts), std::move(tris));
}

std::vector<double> lagged_pitch(std::span<const MotionSample> motion, double dt, double tau) {
  if (!(tau > 0.0) || !(dt > 0.0)) fail_config("lag needs positive tau and dt");
  std::vector<double> lag(motion.size());
  const double decay = std::exp(-dt / tau);
  for (std::size_t k = 0; k < motion.size(); ++k) {
    const double th = motion[k].theta;
    lag[k] = k == 0 ? th : th + (lag[k - 1] - th) * decay;
  }
  return lag;
}

std::vector<double> lagged_plunge_rate(std::span<const MotionSample> motion, double dt, double tau) {
  if (!(tau > 0.0) || !(dt > 0.0)) fail_config("lag needs positive tau and dt");
  std::vector<double> lag(motion.size());
  const double decay = std::exp(-dt / tau);
  for (std::size_t k = 0; k < motion.size(); ++k)
    lag[k] = k == 0 ? motion[0].dxi : lag[k - 1] * decay + (1.0 - decay) * motion[k - 1].dxi;
  return lag;
}

std::vector<double> synthetic_cp_frame(const SyntheticOracleConfig& cfg, const SurfaceMesh& mesh, double theta_lag,
                                       double xi_rate_lag) {
  if (!(cfg.shock_width > 0.0) || !(cfg.tau > 0.0) || !(cfg.tau_xi > 0.0) || !(cfg.edge_blend > 0.0) ||
      !(cfg.le_length > 0.0))
    fail_config("oracle needs positive shock width, edge blend and time constants");
  const std::vector<Vec3>& pts = mesh.points();
  const double xs = cfg.shock_x0 * cfg.chord + cfg.shock_gain * theta_lag;
  std::vector<double> cp(pts.size());
  const double blend = cfg.edge_blend * cfg.chord;
  auto side = [&](bool upper, double s, double x, double taper) {
    const double peak = std::exp(-s / cfg.le_length);
    const double base = upper ? -0.2 - cfg.le_suction * peak * taper : 0.5 * cfg.le_suction * peak - 0.1;
    const double mode = (upper ? -1.0 : 0.6) * (1.0 - s) * (1.0 - s) * taper;
    double v = base + cfg.k_theta * theta_lag * mode - cfg.k_xi * xi_rate_lag * mode;
    if (upper) v += cfg.shock_strength * taper * std::tanh((x - xs) / cfg.shock_width);
    return v;
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double s = std::clamp(pts[i][0] / cfg.chord, 0.0, 1.0);
    const double eta = std::clamp(pts[i][1] / cfg.span, 0.0, 1.0);
    const bool upper = pts[i][2] >= 0.0;
    const double taper = 1.0 - 0.4 * eta * eta;
    const double own = side(upper, s, pts[i][0], taper);
    const double mid = 0.5 * (own + side(!upper, s, pts[i][0], taper));
    const double x = std::clamp(pts[i][0], 0.0, cfg.chord), y = std::clamp(pts[i][1], 0.0, cfg.span);
    const double g = std::min(1.0, std::exp(-x / blend) + std::exp(-(cfg.chord - x) / blend) + std::exp(-y / blend) +
                                       std::exp(-(cfg.span - y) / blend));
    cp[i] = own + (mid - own) * g;
  }
  return cp;
}

std::vector<std::vector<double>> synthetic_cp(const SyntheticOracleConfig& cfg, const SurfaceMesh& mesh,
                                              std::span<const MotionSample> motion, double dt) {
  const std::vector<double> lag = lagged_pitch(motion, dt, cfg.tau);
  const std::vector<double> rate = lagged_plunge_rate(motion, dt, cfg.tau_xi);
  std::vector<std::vector<double>> out;
  out.reserve(motion.size());
  for (std::size_t k = 0; k < motion.size(); ++k) out.push_back(synthetic_cp_frame(cfg, mesh, lag[k], rate[k]));
  return out;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kValidation: return "validation";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  if (s == "validation") return Split::kValidation;
  fail_config("unknown split '" + s + "'");
}

std::vector<std::pair<SignalSpec, Split>> table1_specs(double duration, double dt) {
  struct Row {
    const char* name;
    double kt, at, kx, ax;
    SignalKind kind;
    Split split;
  };
  const SignalKind DS = SignalKind::kDamped, US = SignalKind::kUndamped, SH = SignalKind::kSingle;
  const Row rows[] = {
      {"training_1", 0.114, 0.80, 0.152, -0.098, DS, Split::kTrain},
      {"training_2", 0.114, -0.80, 0.152, 0.098, DS, Split::kTrain},
      {"training_3", 0.148, 1.00, 0.181, -0.123, DS, Split::kTrain},
      {"training_4", 0.148, -1.00, 0.181, 0.123, DS, Split::kTrain},
      {"test_1", 0.091, 0.70, 0.123, 0.074, DS, Split::kTest},
      {"test_2", 0.104, 0.90, 0.089, 0.061, DS, Split::kTest},
      {"test_3", 0.104, -0.90, 0.089, -0.061, DS, Split::kTest},
      {"test_4", 0.092, 0.75, 0.081, -0.059, US, Split::kTest},
      {"test_5", 0.147, -1.00, 0.000, 0.000, DS, Split::kTest},
      {"test_6", 0.000, 0.00, 0.072, 0.049, DS, Split::kTest},
      {"validation_1", 0.147, -1.00, 0.072, 0.049, DS, Split::kValidation},
      {"validation_2", 0.106, 3.00, 0.089, -0.246, SH, Split::kValidation},
  };
  std::vector<std::pair<SignalSpec, Split>> out;
  for (const Row& r : rows) {
    SignalSpec s;
    s.name = r.name;
    s.kind = r.kind;
    s.pitch = {r.kt, r.at};
    s.plunge = {r.kx, r.ax};
    s.duration = duration;
    s.dt = dt;
    out.emplace_back(s, r.split);
  }
  return out;
}

std::vector<Dataset> build_splits(const std::vector<std::pair<SignalSpec, Split>>& specs,
                                  const SyntheticOracleConfig& oracle, const SurfaceMesh& mesh) {
  std::vector<Dataset> out;
  for (const auto& [spec, split] : specs) {
    Dataset d;
    d.name = spec.name;
    d.split = split;
    d.spec = spec;
    d.dt = spec.dt;
    d.motion = sample_series(spec);
    d.cp = synthetic_cp(oracle, mesh, d.motion, d.dt);
    out.push_back(std::move(d));
  }
  return out;
}

Dataset downsample(const Dataset& d, std::size_t k) {
  if (k == 0) fail_config("downsampling factor must be >= 1");
  Dataset out = d;
  out.motion.clear();
  out.cp.clear();
  for (std::size_t f = 0; f < d.frames(); f += k) {
    out.motion.push_back(d.motion[f]);
    out.cp.push_back(d.cp[f]);
  }
  out.dt = d.dt * static_cast<double>(k);
  out.spec.dt = out.dt;
  return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string blob = d.name + ".bin";
  nlohmann::json m = {{"format", "gst-dataset"},
                      {"version", 1},
                      {"name", d.name},
                      {"split", to_string(d.split)},
                      {"dt", d.dt},
                      {"frames", d.frames()},
                      {"nodes", d.nodes()},
                      {"mesh", d.mesh_file},
                      {"spec", to_json(d.spec)},
                      {"blob", blob}};
  io::Writer w(dir / blob);
  for (std::size_t f = 0; f < d.frames(); ++f) {
    const MotionSample& s = d.motion[f];
    const double mv[6] = {s.theta, s.dtheta, s.ddtheta, s.xi, s.dxi, s.ddxi};
    w.f64s(mv);
    if (d.cp[f].size() != d.nodes()) fail_config("dataset " + d.name + " has ragged frames");
    w.f64s(d.cp[f]);
  }
  w.close();
  std::ofstream out(dir / (d.name + ".json"));
  if (!out) fail_io("cannot write dataset manifest for " + d.name);
  out << m.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) fail_io("cannot open dataset manifest " + manifest.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    fail_io("malformed dataset manifest " + manifest.string() + ": " + e.what());
  }
  Dataset d;
  try {
    d.name = m.at("name");
    d.split = split_from_string(m.at("split"));
    d.dt = m.at("dt");
    d.mesh_file = m.at("mesh");
    d.spec = signal_spec_from_json(m.at("spec"));
    const std::size_t frames = m.at("frames"), nodes = m.at("nodes");
    io::Reader r(manifest.parent_path() / m.at("blob").get<std::string>());
    d.motion.resize(frames);
    d.cp.assign(frames, std::vector<double>(nodes));
    for (std::size_t f = 0; f < frames; ++f) {
      double mv[6];
      r.f64s(mv);
      d.motion[f] = {static_cast<double>(f) * d.dt, mv[0], mv[1], mv[2], mv[3], mv[4], mv[5]};
      r.f64s(d.cp[f]);
    }
    if (!r.at_end()) fail_io("dataset blob for " + d.name + " has trailing bytes");
  } catch (const nlohmann::json::exception& e) {
    fail_io("dataset manifest " + manifest.string() + " is missing fields: " + e.what());
  }
  return d;
}

}  // namespace gst
