#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "gst/datasets.hpp"
#include "gst/model.hpp"

namespace gst::test {

// Regular icosahedron: 12 nodes, 20 outward-wound faces.
inline SurfaceMesh icosahedron(double radius_scale = 0.1) {
  const double p = std::numbers::phi;
  std::vector<Vec3> v;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) {
      v.push_back({0.0, a, b * p});
      v.push_back({a, b * p, 0.0});
      v.push_back({b * p, 0.0, a});
    }
  std::vector<Tri> tris;
  auto edge = [&](std::size_t i, std::size_t j) { return std::abs(norm(v[i] - v[j]) - 2.0) < 1e-9; };
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      for (std::size_t k = j + 1; k < v.size(); ++k)
        if (edge(i, j) && edge(j, k) && edge(i, k)) {
          const Vec3 n = cross(v[j] - v[i], v[k] - v[i]);
          const Vec3 c = v[i] + v[j] + v[k];
          if (dot(n, c) > 0.0)
            tris.push_back({std::int64_t(i), std::int64_t(j), std::int64_t(k)});
          else
            tris.push_back({std::int64_t(i), std::int64_t(k), std::int64_t(j)});
        }
  for (auto& q : v) q = radius_scale * q;
  return SurfaceMesh(std::move(v), std::move(tris));
}

// 12 -> 7 -> 4 nodes.
inline std::vector<SelectionConfig> tiny_selection(std::uint64_t seed = 7) {
  SelectionConfig a;
  a.keep_ratio = 0.6;
  a.seed = seed;
  a.knn = 3;
  a.mwls_neighbors = 6;
  SelectionConfig b = a;
  b.keep_ratio = 0.6;
  b.seed = seed + 1;
  b.knn = 2;
  b.mwls_neighbors = 5;
  return {a, b};
}

struct TinyWorld {
  SurfaceMesh mesh;
  Graph graph;
  ReductionHierarchy hierarchy;
  std::shared_ptr<const ModelOperators> ops;
};

inline TinyWorld tiny_world(int cheb_order = 3) {
  TinyWorld w;
  w.mesh = icosahedron();
  w.graph = graph_from_mesh(w.mesh);
  std::vector<double> grad;
  for (const Vec3& p : w.mesh.points()) grad.push_back(1.0 + std::abs(p[0]) + 2.0 * std::abs(p[2]));
  w.hierarchy = build_hierarchy(w.mesh.points(), grad, tiny_selection());
  w.ops = make_operators(w.mesh, w.graph, w.hierarchy, cheb_order);
  return w;
}

// Small widths: 8, 7, 3 / 2 / latent 12.
inline ModelConfig tiny_config(bool armax, TemporalKind kind) { return scaled_config(32, armax, kind); }

// A short damped signal sampled on the mesh with the default oracle.
inline Dataset tiny_dataset(const SurfaceMesh& mesh, std::size_t frames, std::size_t which = 0) {
  auto specs = table1_specs(static_cast<double>(frames) * 2e-3, 2e-3);
  specs.resize(which + 1);
  specs.erase(specs.begin(), specs.begin() + static_cast<std::ptrdiff_t>(which));
  return build_splits(specs, SyntheticOracleConfig{}, mesh).front();
}

}  // namespace gst::test
