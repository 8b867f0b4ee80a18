#include "gst/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <string>

#include "gst/error.hpp"

namespace gst {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

SurfaceMesh::SurfaceMesh(std::vector<Vec3> points, std::vector<Tri> triangles)
    : points_(std::move(points)), triangles_(std::move(triangles)) {
  const auto n = static_cast<std::int64_t>(points_.size());
  area_.assign(points_.size(), 0.0);
  std::vector<Vec3> acc(points_.size(), Vec3{0, 0, 0});
  std::vector<int> touched(points_.size(), 0);
  for (const Tri& t : triangles_) {
    for (std::int64_t v : t)
      if (v < 0 || v >= n) fail_config("triangle index " + std::to_string(v) + " out of range");
    const Vec3 c = cross(points_[t[1]] - points_[t[0]], points_[t[2]] - points_[t[0]]);
    const double a = 0.5 * norm(c);
    for (std::int64_t v : t) {
      area_[v] += a / 3.0;
      acc[v] = acc[v] + 0.5 * c;  // area-weighted normal
      touched[v] = 1;
    }
  }
  normal_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!touched[i]) fail_config("mesh node " + std::to_string(i) + " belongs to no triangle");
    if (!(area_[i] > 0.0)) fail_numerical("mesh node " + std::to_string(i) + " has zero area");
    const double len = norm(acc[i]);
    if (!(len > 0.0)) fail_numerical("mesh node " + std::to_string(i) + " has a degenerate normal");
    normal_[i] = (1.0 / len) * acc[i];
  }
}

double SurfaceMesh::total_area() const {
  double s = 0.0;
  for (double a : area_) s += a;
  return s;
}

std::vector<std::pair<std::int64_t, std::int64_t>> SurfaceMesh::edges() const {
  std::vector<std::pair<std::int64_t, std::int64_t>> e;
  e.reserve(triangles_.size() * 3);
  for (const Tri& t : triangles_) {
    for (int k = 0; k < 3; ++k) {
      std::int64_t a = t[k], b = t[(k + 1) % 3];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      e.emplace_back(a, b);
    }
  }
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

SurfaceMesh SurfaceMesh::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != points_.size()) fail_config("permutation size mismatch");
  std::vector<std::int64_t> inverse(perm.size());
  std::vector<Vec3> pts(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    pts[k] = points_[perm[k]];
    inverse[perm[k]] = static_cast<std::int64_t>(k);
  }
  std::vector<Tri> tris = triangles_;
  for (Tri& t : tris)
    for (std::int64_t& v : t) v = inverse[v];
  return SurfaceMesh(std::move(pts), std::move(tris));
}

SurfaceMesh load_mesh_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open mesh file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    std::vector<Vec3> pts = j.at("points").get<std::vector<Vec3>>();
    std::vector<Tri> tris = j.at("triangles").get<std::vector<Tri>>();
    return SurfaceMesh(std::move(pts), std::move(tris));
  } catch (const nlohmann::json::exception& e) {
    fail_io("malformed mesh file " + path.string() + ": " + e.what());
  }
}

void save_mesh_json(const SurfaceMesh& mesh, const std::filesystem::path& path) {
  nlohmann::json j;
  j["points"] = mesh.points();
  j["triangles"] = mesh.triangles();
  std::ofstream out(path);
  if (!out) fail_io("cannot write mesh file " + path.string());
  out << j.dump() << '\n';
}

}  // namespace gst
