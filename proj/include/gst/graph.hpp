#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gst/autodiff.hpp"
#include "gst/mesh.hpp"
#include "gst/sparse.hpp"

namespace gst {

// Weighted undirected graph with self-loops, stored as a symmetric COO
// adjacency (A + I). Off-diagonal weights lie in (0, 1]; self-loops are 1.
class Graph {
 public:
  Graph() = default;
  // `pairs` are undirected edges (either orientation, duplicates allowed);
  // weights are given per pair in the same order.
  Graph(std::size_t n_nodes, std::span<const std::pair<std::int64_t, std::int64_t>> pairs,
        std::span<const double> weights);

  std::size_t size() const noexcept { return n_; }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  // Neighbors of every node, self excluded, ascending.
  const std::vector<std::vector<std::int64_t>>& neighbors() const noexcept { return neighbors_; }
  std::size_t edge_count() const noexcept;  // undirected, self-loops excluded

  Graph permuted(std::span<const std::size_t> perm) const;

 private:
  std::size_t n_ = 0;
  SparseMatrix adjacency_;
  std::vector<std::vector<std::int64_t>> neighbors_;
};

// Edge weight law shared by mesh graphs and reconnected pooled graphs:
// w_ij = exp(-d_ij / mean(d)), so self-loops (d = 0) get exactly 1.
Graph graph_from_pairs(std::span<const Vec3> points, std::vector<std::pair<std::int64_t, std::int64_t>> pairs);

Graph graph_from_mesh(const SurfaceMesh& mesh);

// D^-1/2 (A + I) D^-1/2.
struct GcnOperator {
  SparseMatrix matrix;
};

GcnOperator gcn_normalize(const Graph& g);

// Scaled Laplacian 2 L / lambda_max - I with L = I - D^-1/2 (A + I) D^-1/2.
struct ChebOperator {
  SparseMatrix scaled_laplacian;
  int order = 3;
  double lambda_max = 2.0;
  bool power_converged = false;
};

struct PowerIterationResult {
  double eigenvalue = 0.0;
  double residual = 0.0;
  bool converged = false;
};

// Dominant eigenvalue of a symmetric matrix from a fixed start vector.
PowerIterationResult power_iteration(const SparseMatrix& m, int max_iters = 100, double tol = 1e-6);

ChebOperator make_cheb_operator(const Graph& g, int order);

// T_0 x, ..., T_{K-1} x with T_0 = x, T_1 = L x, T_k = 2 L T_{k-1} - T_{k-2}.
std::vector<Tensor> cheb_basis(const ChebOperator& op, const Tensor& x);
std::vector<Var> cheb_basis(Tape& t, const ChebOperator& op, Var x);

// sum_k coeffs[k] T_k(L) x.
Tensor cheb_apply(const ChebOperator& op, const Tensor& x, std::span<const double> coeffs);

}  // namespace gst
