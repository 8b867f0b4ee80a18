#include "gst/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gst/error.hpp"

namespace gst {

Graph::Graph(std::size_t n_nodes, std::span<const std::pair<std::int64_t, std::int64_t>> pairs,
             std::span<const double> weights)
    : n_(n_nodes), neighbors_(n_nodes) {
  if (pairs.size() != weights.size()) fail_config("graph: one weight per edge required");
  std::vector<Triplet> entries;
  entries.reserve(2 * pairs.size() + n_nodes);
  std::vector<std::pair<std::int64_t, std::int64_t>> seen;
  seen.reserve(pairs.size());
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    auto [i, j] = pairs[e];
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (i < 0 || static_cast<std::size_t>(j) >= n_nodes) fail_config("graph edge index out of range");
    const double w = weights[e];
    if (!(w > 0.0 && w <= 1.0)) fail_numerical("graph weight " + std::to_string(w) + " outside (0, 1]");
    seen.emplace_back(i, j);
    entries.push_back({i, j, w});
    entries.push_back({j, i, w});
  }
  {
    auto sorted = seen;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail_config("graph: duplicate undirected edge");
  }
  for (std::size_t i = 0; i < n_nodes; ++i)
    entries.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), 1.0});
  adjacency_ = SparseMatrix::from_triplets(n_nodes, n_nodes, std::move(entries), true);
  for (std::size_t e = 0; e < adjacency_.nnz(); ++e) {
    const auto r = adjacency_.row_indices()[e], c = adjacency_.col_indices()[e];
    if (r != c) neighbors_[r].push_back(c);
  }
}

std::size_t Graph::edge_count() const noexcept { return (adjacency_.nnz() - n_) / 2; }

Graph Graph::permuted(std::span<const std::size_t> perm) const {
  std::vector<std::int64_t> inverse(n_);
  for (std::size_t k = 0; k < perm.size(); ++k) inverse[perm[k]] = static_cast<std::int64_t>(k);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  std::vector<double> w;
  for (std::size_t e = 0; e < adjacency_.nnz(); ++e) {
    const auto r = adjacency_.row_indices()[e], c = adjacency_.col_indices()[e];
    if (r < c) {
      pairs.emplace_back(inverse[r], inverse[c]);
      w.push_back(adjacency_.values()[e]);
    }
  }
  return Graph(n_, pairs, w);
}

Graph graph_from_pairs(std::span<const Vec3> points, std::vector<std::pair<std::int64_t, std::int64_t>> pairs) {
  for (auto& [i, j] : pairs)
    if (i > j) std::swap(i, j);
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  pairs.erase(std::remove_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.first == p.second; }),
              pairs.end());
  std::vector<double> d(pairs.size());
  double mean_d = 0.0;
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    d[e] = norm(points[pairs[e].first] - points[pairs[e].second]);
    mean_d += d[e];
  }
  if (!pairs.empty()) {
    mean_d /= static_cast<double>(pairs.size());
    if (!(mean_d > 0.0)) fail_numerical("degenerate graph: mean edge length is zero");
  }
  std::vector<double> w(pairs.size());
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    if (!(d[e] > 0.0)) fail_numerical("degenerate graph: coincident connected points");
    w[e] = std::exp(-d[e] / mean_d);
  }
  return Graph(points.size(), pairs, w);
}

Graph graph_from_mesh(const SurfaceMesh& mesh) { return graph_from_pairs(mesh.points(), mesh.edges()); }

GcnOperator gcn_normalize(const Graph& g) {
  const SparseMatrix& a = g.adjacency();
  const std::vector<double> deg = a.row_sums();
  std::vector<Triplet> e;
  e.reserve(a.nnz());
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    const auto i = a.row_indices()[k], j = a.col_indices()[k];
    if (!(deg[i] > 0.0) || !(deg[j] > 0.0)) fail_numerical("gcn_normalize: node with zero degree");
    e.push_back({i, j, a.values()[k] / std::sqrt(deg[i] * deg[j])});
  }
  // Symmetric by construction, but sqrt(d_i d_j) == sqrt(d_j d_i) exactly so the
  // mirror check in from_triplets holds bitwise.
  return GcnOperator{SparseMatrix::from_triplets(g.size(), g.size(), std::move(e), true)};
}

PowerIterationResult power_iteration(const SparseMatrix& m, int max_iters, double tol) {
  const std::size_t n = m.rows();
  PowerIterationResult r;
  if (n == 0) return r;
  // Fixed, non-symmetric start so no eigenvector is missed by construction.
  Tensor v({n, 1});
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + 1.7 * static_cast<double>(i));
  auto normalize = [](Tensor& x) {
    double s = 0.0;
    for (double q : x.values()) s += q * q;
    s = std::sqrt(s);
    for (double& q : x.storage()) q /= s;
  };
  normalize(v);
  double prev = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Tensor w = spmv(m, v);
    double lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) lambda += v[i] * w[i];
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += (w[i] - lambda * v[i]) * (w[i] - lambda * v[i]);
    r.eigenvalue = lambda;
    r.residual = std::sqrt(res);
    if (it > 0 && std::abs(lambda - prev) <= tol * std::max(1.0, std::abs(lambda)) && r.residual <= std::sqrt(tol)) {
      r.converged = true;
      return r;
    }
    prev = lambda;
    double s = 0.0;
    for (double q : w.values()) s += q * q;
    if (!(s > 0.0)) {
      r.converged = true;
      return r;
    }
    v = std::move(w);
    normalize(v);
  }
  return r;
}

ChebOperator make_cheb_operator(const Graph& g, int order) {
  if (order < 1) fail_config("Chebyshev order must be >= 1");
  const GcnOperator norm_adj = gcn_normalize(g);
  const std::size_t n = g.size();
  // L = I - A_hat
  std::vector<Triplet> lap;
  lap.reserve(norm_adj.matrix.nnz());
  for (std::size_t k = 0; k < norm_adj.matrix.nnz(); ++k) {
    const auto i = norm_adj.matrix.row_indices()[k], j = norm_adj.matrix.col_indices()[k];
    const double a = norm_adj.matrix.values()[k];
    lap.push_back({i, j, (i == j ? 1.0 : 0.0) - a});
  }
  const SparseMatrix laplacian = SparseMatrix::from_triplets(n, n, lap, true);

  ChebOperator op;
  op.order = order;
  const PowerIterationResult p = power_iteration(laplacian);
  // Rayleigh quotient plus residual bounds the top eigenvalue from above once
  // the iteration has locked onto it; the normalized Laplacian never exceeds 2.
  if (p.converged && p.eigenvalue > 0.0) {
    op.lambda_max = std::min(2.0, p.eigenvalue + p.residual);
    op.power_converged = true;
  } else {
    op.lambda_max = 2.0;
  }
  std::vector<Triplet> scaled;
  scaled.reserve(lap.size());
  for (const Triplet& t : lap) {
    const double v = 2.0 * t.value / op.lambda_max - (t.row == t.col ? 1.0 : 0.0);
    scaled.push_back({t.row, t.col, v});
  }
  op.scaled_laplacian = SparseMatrix::from_triplets(n, n, std::move(scaled), true);
  return op;
}

std::vector<Tensor> cheb_basis(const ChebOperator& op, const Tensor& x) {
  std::vector<Tensor> basis;
  basis.reserve(op.order);
  basis.push_back(x);
  if (op.order >= 2) basis.push_back(spmv(op.scaled_laplacian, x));
  for (int k = 2; k < op.order; ++k) {
    Tensor next = spmv(op.scaled_laplacian, basis[k - 1]);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = 2.0 * next[i] - basis[k - 2][i];
    basis.push_back(std::move(next));
  }
  return basis;
}

std::vector<Var> cheb_basis(Tape& t, const ChebOperator& op, Var x) {
  std::vector<Var> basis;
  basis.reserve(op.order);
  basis.push_back(x);
  if (op.order >= 2) basis.push_back(spmm(t, op.scaled_laplacian, x));
  for (int k = 2; k < op.order; ++k) {
    const Var lx = spmm(t, op.scaled_laplacian, basis[k - 1]);
    basis.push_back(sub(t, scale(t, lx, 2.0), basis[k - 2]));
  }
  return basis;
}

Tensor cheb_apply(const ChebOperator& op, const Tensor& x, std::span<const double> coeffs) {
  if (coeffs.size() != static_cast<std::size_t>(op.order))
    fail_config("cheb_apply: expected " + std::to_string(op.order) + " coefficients");
  const std::vector<Tensor> basis = cheb_basis(op, x);
  Tensor out(x.shape(), 0.0);
  for (std::size_t k = 0; k < basis.size(); ++k)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coeffs[k] * basis[k][i];
  return out;
}

}  // namespace gst
