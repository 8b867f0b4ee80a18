#pragma once

// Gradient-driven mesh reduction: pick a subset of nodes with probability
// biased toward steep pressure gradients, reconnect the subset with a
// covariance-aware kNN graph, and build moving weighted least squares (MWLS)
// interpolation matrices between consecutive levels.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "gst/graph.hpp"
#include "gst/mesh.hpp"
#include "gst/sparse.hpp"

namespace gst {

struct GradientField {
  std::vector<Vec3> gradient;
  std::vector<double> magnitude;
  // Nodes whose stencil stayed rank-deficient after the 2-ring extension. Their
  // gradient is the minimum-norm least-squares solution (zero if no offsets).
  std::vector<std::int64_t> rank_deficient;
};

// Least-squares fit of p_k - p_i = (x_k - x_i) . grad over the 1-ring (2-ring
// when the 1-ring is too small or spans fewer than three directions).
GradientField node_gradients(std::span<const Vec3> points, const std::vector<std::vector<std::int64_t>>& neighbors,
                             std::span<const double> field);

struct SelectionConfig {
  double keep_ratio = 0.33;
  double p_first = 1.0;  // probability weight of the highest-gradient rank
  double p_last = 0.1;   // probability weight of the lowest-gradient rank
  std::uint64_t seed = 42;
  int knn = 6;             // reconnection neighbors
  int mwls_neighbors = 10;  // interpolation stencil size
};

std::size_t target_count(std::size_t n, double keep_ratio);

// p(i) for ranks i = 1..n (returned 0-based): p_1 + (p_n - p_1)(1 - e^{-2i/n}) / (1 - e^{-2}).
std::vector<double> selection_probabilities(std::size_t n, double p_first, double p_last);

// Weighted sampling without replacement (exponential-key method) over nodes
// ranked by descending gradient magnitude. Output ascending.
std::vector<std::int64_t> sample_nodes(std::span<const double> gradient_magnitude, const SelectionConfig& cfg);

double mahalanobis_distance(const Vec3& x, const Vec3& y, const Eigen::Matrix3d& covariance);

// Sample covariance of the cloud, ridged by 1e-9 trace/3 when not positive definite.
Eigen::Matrix3d point_covariance(std::span<const Vec3> points);

// k nearest neighbors under the Mahalanobis metric (ties by index), per point in ascending index order.
std::vector<std::vector<std::int64_t>> mahalanobis_knn(std::span<const Vec3> points, int k,
                                                      const std::optional<Eigen::Matrix3d>& covariance = std::nullopt);

// Symmetrized kNN graph, exp(-d / mean d) weights on Euclidean edge length.
Graph mahalanobis_reconnect(std::span<const Vec3> points, int k,
                            const std::optional<Eigen::Matrix3d>& covariance = std::nullopt);

enum class MwlsBasis { kConstant, kLinear };

// Row j: Phi(x_j) = p^T(x_j) (P^T W P)^+ P^T W over the k nearest sources of
// destination j, with w_i = exp(-|x_j - x_i|). Shape dest x source.
SparseMatrix mwls_matrix(std::span<const Vec3> source, std::span<const Vec3> dest, int k_neighbors,
                         MwlsBasis basis = MwlsBasis::kLinear);

struct PooledLevel {
  SelectionConfig config;
  std::vector<std::int64_t> indices;  // into the parent level, ascending
  std::vector<Vec3> points;
  Graph graph;
  SparseMatrix pool;    // child x parent
  SparseMatrix unpool;  // parent x child
};

struct ReductionHierarchy {
  std::size_t base_nodes = 0;
  std::vector<PooledLevel> levels;

  std::size_t level_size(std::size_t level) const {
    return level == 0 ? base_nodes : levels.at(level - 1).indices.size();
  }
};

// Mean over frames of |grad field| per node; the static driver of selection.
std::vector<double> time_averaged_gradient_magnitude(const SurfaceMesh& mesh, const Graph& graph,
                                                     std::span<const std::vector<double>> frames);

ReductionHierarchy build_hierarchy(std::span<const Vec3> points, std::span<const double> gradient_magnitude,
                                   std::span<const SelectionConfig> levels);

// manifest.json plus one level<k>.bin per level.
void save_hierarchy(const ReductionHierarchy& h, const std::filesystem::path& dir);
ReductionHierarchy load_hierarchy(const std::filesystem::path& dir);

}  // namespace gst
