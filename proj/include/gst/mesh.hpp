#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gst {

using Vec3 = std::array<double, 3>;
using Tri = std::array<std::int64_t, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double k, const Vec3& a) { return {k * a[0], k * a[1], k * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a);

// Triangulated surface. Node areas and normals are derived on construction:
// area = 1/3 of incident triangle areas, normal = normalized area-weighted sum
// of incident triangle normals (triangle winding gives the outward side).
class SurfaceMesh {
 public:
  SurfaceMesh() = default;
  SurfaceMesh(std::vector<Vec3> points, std::vector<Tri> triangles);

  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<Vec3>& points() const noexcept { return points_; }
  const std::vector<Tri>& triangles() const noexcept { return triangles_; }
  const std::vector<double>& node_area() const noexcept { return area_; }
  const std::vector<Vec3>& node_normal() const noexcept { return normal_; }
  double total_area() const;

  // Undirected triangle edges (i < j), sorted and deduplicated.
  std::vector<std::pair<std::int64_t, std::int64_t>> edges() const;

  // Same geometry with nodes relabelled: new node k is old node perm[k].
  SurfaceMesh permuted(std::span<const std::size_t> perm) const;

 private:
  std::vector<Vec3> points_;
  std::vector<Tri> triangles_;
  std::vector<double> area_;
  std::vector<Vec3> normal_;
};

SurfaceMesh load_mesh_json(const std::filesystem::path& path);
void save_mesh_json(const SurfaceMesh& mesh, const std::filesystem::path& path);

}  // namespace gst
