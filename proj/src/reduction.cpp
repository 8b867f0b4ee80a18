#include "gst/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <string>

#include "gst/binary_io.hpp"
#include "gst/error.hpp"
#include "gst/rng.hpp"

namespace gst {
namespace {

// Relative singular-value cutoff for the least-squares solves.
constexpr double kRankTolerance = 1e-9;

Eigen::Vector3d to_eigen(const Vec3& v) { return {v[0], v[1], v[2]}; }

bool solve_stencil(std::span<const Vec3> points, std::span<const double> field, std::int64_t i,
                   const std::vector<std::int64_t>& stencil, Vec3& out, bool& full_rank) {
  const auto k = static_cast<Eigen::Index>(stencil.size());
  Eigen::MatrixXd a(k, 3);
  Eigen::VectorXd b(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const Vec3 d = points[stencil[r]] - points[i];
    a.row(r) << d[0], d[1], d[2];
    b(r) = field[stencil[r]] - field[i];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(kRankTolerance);
  cod.compute(a);
  full_rank = cod.rank() == 3;
  if (cod.rank() == 0) {
    out = {0.0, 0.0, 0.0};
    return false;
  }
  const Eigen::Vector3d g = cod.solve(b);
  out = {g(0), g(1), g(2)};
  return true;
}

}  // namespace

GradientField node_gradients(std::span<const Vec3> points, const std::vector<std::vector<std::int64_t>>& neighbors,
                             std::span<const double> field) {
  const std::size_t n = points.size();
  if (field.size() != n || neighbors.size() != n) fail_config("node_gradients: field/neighbor size mismatch");
  GradientField gf;
  gf.gradient.assign(n, Vec3{0, 0, 0});
  gf.magnitude.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto node = static_cast<std::int64_t>(i);
    bool full_rank = false;
    Vec3 g{0, 0, 0};
    const auto& ring1 = neighbors[i];
    if (ring1.size() >= 3) solve_stencil(points, field, node, ring1, g, full_rank);
    if (!full_rank) {
      std::set<std::int64_t> ring2(ring1.begin(), ring1.end());
      for (std::int64_t j : ring1) ring2.insert(neighbors[j].begin(), neighbors[j].end());
      ring2.erase(node);
      const std::vector<std::int64_t> stencil(ring2.begin(), ring2.end());
      if (!stencil.empty()) solve_stencil(points, field, node, stencil, g, full_rank);
      if (!full_rank) gf.rank_deficient.push_back(node);
    }
    gf.gradient[i] = g;
    gf.magnitude[i] = norm(g);
  }
  return gf;
}

std::size_t target_count(std::size_t n, double keep_ratio) {
  return static_cast<std::size_t>(std::llround(keep_ratio * static_cast<double>(n)));
}

std::vector<double> selection_probabilities(std::size_t n, double p_first, double p_last) {
  if (n == 0) fail_config("selection_probabilities needs n >= 1");
  if (!(p_last > 0.0 && p_last <= p_first && p_first <= 1.0))
    fail_config("selection probabilities need 0 < p_n <= p_1 <= 1");
  std::vector<double> p(n);
  const double denom = 1.0 - std::exp(-2.0);
  const double dn = static_cast<double>(n);
  for (std::size_t r = 1; r <= n; ++r) {
    const double frac = (1.0 - std::exp(-2.0 * static_cast<double>(r) / dn)) / denom;
    p[r - 1] = r == n ? p_last : p_first + (p_last - p_first) * frac;
  }
  return p;
}

std::vector<std::int64_t> sample_nodes(std::span<const double> gradient_magnitude, const SelectionConfig& cfg) {
  const std::size_t n = gradient_magnitude.size();
  if (!(cfg.keep_ratio > 0.0 && cfg.keep_ratio <= 1.0)) fail_config("keep_ratio must lie in (0, 1]");
  const std::size_t target = target_count(n, cfg.keep_ratio);
  if (target > n) fail_config("sample_nodes: target count exceeds node count");
  if (target < 4) fail_config("sample_nodes: fewer than 4 nodes would be kept");

  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return gradient_magnitude[a] > gradient_magnitude[b];
  });
  const std::vector<double> prob = selection_probabilities(n, cfg.p_first, cfg.p_last);

  // Key log(u) / w: the `target` largest keys form a weighted sample without replacement.
  Rng rng(cfg.seed);
  std::vector<std::pair<double, std::int64_t>> keys(n);
  for (std::size_t r = 0; r < n; ++r) keys[r] = {std::log(rng.uniform()) / prob[r], order[r]};
  std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<std::int64_t> out;
  out.reserve(target);
  for (std::size_t r = 0; r < target; ++r) out.push_back(keys[r].second);
  std::sort(out.begin(), out.end());
  return out;
}

double mahalanobis_distance(const Vec3& x, const Vec3& y, const Eigen::Matrix3d& covariance) {
  const Eigen::Vector3d d = to_eigen(x - y);
  return std::sqrt(d.dot(covariance.ldlt().solve(d)));
}

Eigen::Matrix3d point_covariance(std::span<const Vec3> points) {
  const auto n = static_cast<double>(points.size());
  if (points.size() < 2) fail_config("covariance needs at least two points");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const Vec3& p : points) mean += to_eigen(p);
  mean /= n;
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  for (const Vec3& p : points) {
    const Eigen::Vector3d d = to_eigen(p) - mean;
    s += d * d.transpose();
  }
  s /= (n - 1.0);
  Eigen::LLT<Eigen::Matrix3d> llt(s);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(s).eigenvalues().minCoeff();
  if (llt.info() != Eigen::Success || !(min_eig > 1e-12 * s.trace()))
    s += (1e-9 * s.trace() / 3.0) * Eigen::Matrix3d::Identity();
  return s;
}

std::vector<std::vector<std::int64_t>> mahalanobis_knn(std::span<const Vec3> points, int k,
                                                      const std::optional<Eigen::Matrix3d>& covariance) {
  const std::size_t n = points.size();
  if (k < 1 || n < static_cast<std::size_t>(k) + 1)
    fail_config("mahalanobis_knn: need at least k+1 = " + std::to_string(k + 1) + " points, got " +
                std::to_string(n));
  const Eigen::Matrix3d s = covariance ? *covariance : point_covariance(points);
  Eigen::LLT<Eigen::Matrix3d> llt(s);
  if (llt.info() != Eigen::Success) fail_numerical("covariance is not positive definite");
  // Whitening: D_M(x, y) = |L^-1 (x - y)| with S = L L^T.
  std::vector<Eigen::Vector3d> white(n);
  for (std::size_t i = 0; i < n; ++i) white[i] = llt.matrixL().solve(to_eigen(points[i]));

  std::vector<std::vector<std::int64_t>> out(n);
  std::vector<std::pair<double, std::int64_t>> cand;
  cand.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back((white[i] - white[j]).squaredNorm(), static_cast<std::int64_t>(j));
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int q = 0; q < k; ++q) out[i].push_back(cand[q].second);
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

Graph mahalanobis_reconnect(std::span<const Vec3> points, int k, const std::optional<Eigen::Matrix3d>& covariance) {
  const auto knn = mahalanobis_knn(points, k, covariance);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::size_t i = 0; i < knn.size(); ++i)
    for (std::int64_t j : knn[i]) pairs.emplace_back(static_cast<std::int64_t>(i), j);
  return graph_from_pairs(points, std::move(pairs));
}

SparseMatrix mwls_matrix(std::span<const Vec3> source, std::span<const Vec3> dest, int k_neighbors,
                         MwlsBasis basis) {
  const int basis_size = basis == MwlsBasis::kLinear ? 4 : 1;
  if (k_neighbors < basis_size)
    fail_config("mwls_matrix: k_neighbors " + std::to_string(k_neighbors) + " below basis size " +
                std::to_string(basis_size));
  if (source.empty()) fail_config("mwls_matrix: no source points");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), source.size());

  std::vector<Triplet> entries;
  entries.reserve(dest.size() * k);
  std::vector<std::pair<double, std::int64_t>> cand(source.size());
  for (std::size_t j = 0; j < dest.size(); ++j) {
    for (std::size_t i = 0; i < source.size(); ++i) {
      const Vec3 d = source[i] - dest[j];
      cand[i] = {dot(d, d), static_cast<std::int64_t>(i)};
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());

    // Design matrix centered on the destination, so p(x_j) = e_1.
    Eigen::MatrixXd a(static_cast<Eigen::Index>(k), basis_size);
    Eigen::VectorXd sqrt_w(static_cast<Eigen::Index>(k));
    bool coincident = k > 1;
    for (std::size_t q = 0; q < k; ++q) {
      const Vec3 off = source[cand[q].second] - dest[j];
      const double w = std::exp(-std::sqrt(cand[q].first));
      sqrt_w(static_cast<Eigen::Index>(q)) = std::sqrt(w);
      a(static_cast<Eigen::Index>(q), 0) = 1.0;
      if (basis == MwlsBasis::kLinear)
        for (int c = 0; c < 3; ++c) a(static_cast<Eigen::Index>(q), c + 1) = off[c];
      if (q > 0 && source[cand[q].second] != source[cand[0].second]) coincident = false;
    }
    if (coincident) fail_numerical("mwls_matrix: all neighbors of destination " + std::to_string(j) + " coincide");
    const Eigen::MatrixXd aw = sqrt_w.asDiagonal() * a;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankTolerance);
    cod.compute(aw);
    const Eigen::MatrixXd pinv = cod.pseudoInverse();
    for (std::size_t q = 0; q < k; ++q) {
      const double phi = pinv(0, static_cast<Eigen::Index>(q)) * sqrt_w(static_cast<Eigen::Index>(q));
      entries.push_back({static_cast<std::int64_t>(j), cand[q].second, phi});
    }
  }
  return SparseMatrix::from_triplets(dest.size(), source.size(), std::move(entries));
}

std::vector<double> time_averaged_gradient_magnitude(const SurfaceMesh& mesh, const Graph& graph,
                                                     std::span<const std::vector<double>> frames) {
  std::vector<double> avg(mesh.size(), 0.0);
  if (frames.empty()) fail_config("no frames to average gradients over");
  for (const auto& f : frames) {
    const GradientField gf = node_gradients(mesh.points(), graph.neighbors(), f);
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += gf.magnitude[i];
  }
  for (double& v : avg) v /= static_cast<double>(frames.size());
  return avg;
}

ReductionHierarchy build_hierarchy(std::span<const Vec3> points, std::span<const double> gradient_magnitude,
                                   std::span<const SelectionConfig> levels) {
  if (gradient_magnitude.size() != points.size()) fail_config("build_hierarchy: gradient field size mismatch");
  ReductionHierarchy h;
  h.base_nodes = points.size();
  std::vector<Vec3> parent_pts(points.begin(), points.end());
  std::vector<double> parent_grad(gradient_magnitude.begin(), gradient_magnitude.end());
  for (const SelectionConfig& cfg : levels) {
    PooledLevel lvl;
    lvl.config = cfg;
    lvl.indices = sample_nodes(parent_grad, cfg);
    std::vector<double> child_grad;
    for (std::int64_t i : lvl.indices) {
      lvl.points.push_back(parent_pts[i]);
      child_grad.push_back(parent_grad[i]);
    }
    lvl.graph = mahalanobis_reconnect(lvl.points, cfg.knn);
    lvl.pool = mwls_matrix(parent_pts, lvl.points, cfg.mwls_neighbors);
    lvl.unpool = mwls_matrix(lvl.points, parent_pts, cfg.mwls_neighbors);
    parent_pts = lvl.points;
    parent_grad = std::move(child_grad);
    h.levels.push_back(std::move(lvl));
  }
  for (std::size_t l = 1; l <= h.levels.size(); ++l)
    if (h.level_size(l) >= h.level_size(l - 1) && h.levels[l - 1].config.keep_ratio < 1.0)
      fail_config("hierarchy levels must shrink");
  return h;
}

void save_hierarchy(const ReductionHierarchy& h, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["format"] = "gst-hierarchy";
  m["version"] = 1;
  m["base_nodes"] = h.base_nodes;
  m["levels"] = nlohmann::json::array();
  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    const PooledLevel& lvl = h.levels[l];
    const std::string blob = "level" + std::to_string(l + 1) + ".bin";
    m["levels"].push_back({{"nodes", lvl.indices.size()},
                           {"keep_ratio", lvl.config.keep_ratio},
                           {"p_first", lvl.config.p_first},
                           {"p_last", lvl.config.p_last},
                           {"seed", lvl.config.seed},
                           {"knn", lvl.config.knn},
                           {"mwls_neighbors", lvl.config.mwls_neighbors},
                           {"blob", blob}});
    io::Writer w(dir / blob);
    io::write_index_list(w, lvl.indices);
    w.u64(lvl.points.size());
    for (const Vec3& p : lvl.points) w.f64s(p);
    io::write_coo(w, lvl.graph.adjacency());
    io::write_coo(w, lvl.pool);
    io::write_coo(w, lvl.unpool);
    w.close();
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) fail_io("cannot write hierarchy manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

ReductionHierarchy load_hierarchy(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) fail_io("cannot open hierarchy manifest in " + dir.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    fail_io(std::string("malformed hierarchy manifest: ") + e.what());
  }
  ReductionHierarchy h;
  h.base_nodes = m.at("base_nodes").get<std::size_t>();
  for (const auto& lj : m.at("levels")) {
    PooledLevel lvl;
    lvl.config.keep_ratio = lj.at("keep_ratio");
    lvl.config.p_first = lj.at("p_first");
    lvl.config.p_last = lj.at("p_last");
    lvl.config.seed = lj.at("seed");
    lvl.config.knn = lj.at("knn");
    lvl.config.mwls_neighbors = lj.at("mwls_neighbors");
    io::Reader r(dir / lj.at("blob").get<std::string>());
    lvl.indices = io::read_index_list(r);
    lvl.points.resize(r.u64());
    for (Vec3& p : lvl.points) r.f64s(p);
    const SparseMatrix adj = io::read_coo(r, true);
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    std::vector<double> w;
    for (std::size_t e = 0; e < adj.nnz(); ++e) {
      if (adj.row_indices()[e] < adj.col_indices()[e]) {
        pairs.emplace_back(adj.row_indices()[e], adj.col_indices()[e]);
        w.push_back(adj.values()[e]);
      }
    }
    lvl.graph = Graph(adj.rows(), pairs, w);
    lvl.pool = io::read_coo(r);
    lvl.unpool = io::read_coo(r);
    if (lvl.indices.size() != lj.at("nodes").get<std::size_t>()) fail_io("hierarchy blob disagrees with manifest");
    h.levels.push_back(std::move(lvl));
  }
  return h;
}

}  // namespace gst
