#include <doctest.h>

#include <cstring>

#include "gst/kernels.hpp"
#include "gst/sparse.hpp"
#include "support.hpp"

using namespace gst;
namespace k = gst::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar table is always first and active is available") {
  const auto tables = k::available_tables();
  REQUIRE(!tables.empty());
  CHECK(tables.front() == &k::scalar_table());
  bool found = false;
  for (const auto* t : tables) found = found || t == &k::active();
  CHECK(found);
}

TEST_CASE("elementwise kernels: every variant matches scalar bit for bit") {
  Rng rng(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 13u, 64u, 101u}) {
    const auto x = random_vec(rng, n), y0 = random_vec(rng, n), b = random_vec(rng, n);
    const double a = rng.uniform(-3.0, 3.0);
    for (const auto* t : k::available_tables()) {
      CAPTURE(t->name);
      CAPTURE(n);
      const k::KernelTable& s = k::scalar_table();
      std::vector<double> ys = y0, yt = y0;
      s.axpy(n, a, x.data(), ys.data());
      t->axpy(n, a, x.data(), yt.data());
      CHECK(bit_equal(ys, yt));
      std::vector<double> os(n), ot(n);
      s.add(n, x.data(), b.data(), os.data());
      t->add(n, x.data(), b.data(), ot.data());
      CHECK(bit_equal(os, ot));
      s.sub(n, x.data(), b.data(), os.data());
      t->sub(n, x.data(), b.data(), ot.data());
      CHECK(bit_equal(os, ot));
      s.mul(n, x.data(), b.data(), os.data());
      t->mul(n, x.data(), b.data(), ot.data());
      CHECK(bit_equal(os, ot));
      ys = y0, yt = y0;
      s.mul_acc(n, x.data(), b.data(), ys.data());
      t->mul_acc(n, x.data(), b.data(), yt.data());
      CHECK(bit_equal(ys, yt));
      s.scale(n, a, x.data(), os.data());
      t->scale(n, a, x.data(), ot.data());
      CHECK(bit_equal(os, ot));
    }
  }
}

TEST_CASE("scalar elementwise kernels match the definitions") {
  const std::vector<double> x{1, 2, 3}, b{4, 5, 6};
  std::vector<double> y{1, 1, 1}, o(3);
  const auto& s = k::scalar_table();
  s.axpy(3, 2.0, x.data(), y.data());
  CHECK(y == std::vector<double>{3, 5, 7});
  s.mul(3, x.data(), b.data(), o.data());
  CHECK(o == std::vector<double>{4, 10, 18});
  s.sub(3, x.data(), b.data(), o.data());
  CHECK(o == std::vector<double>{-3, -3, -3});
}

TEST_CASE("gemm variants: bit-identical across tables and equal to a naive product") {
  Rng rng(11);
  for (auto [n, kk, m] : std::vector<std::array<std::size_t, 3>>{{1, 1, 1}, {3, 5, 7}, {9, 4, 17}, {16, 16, 16}}) {
    const Tensor a = test::random_tensor(rng, n, kk), b = test::random_tensor(rng, kk, m);
    const Tensor ref = test::naive_matmul(a, b);
    std::vector<double> c0(n * m, 0.0);
    k::gemm_acc(k::scalar_table(), n, kk, m, a.data(), b.data(), c0.data());
    for (std::size_t i = 0; i < c0.size(); ++i) CHECK(c0[i] == doctest::Approx(ref[i]).epsilon(1e-13));
    const Tensor at = transpose(a), bt = transpose(b);
    for (const auto* t : k::available_tables()) {
      CAPTURE(t->name);
      std::vector<double> c1(n * m, 0.0), c2(n * m, 0.0), c3(n * m, 0.0);
      k::gemm_acc(*t, n, kk, m, a.data(), b.data(), c1.data());
      k::gemm_tn_acc(*t, kk, n, m, at.data(), b.data(), c2.data());
      k::gemm_nt_acc(*t, n, kk, m, a.data(), bt.data(), c3.data());
      CHECK(bit_equal(c0, c1));
      for (std::size_t i = 0; i < c0.size(); ++i) {
        CHECK(c2[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        CHECK(c3[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("coo spmm variants agree with dense products") {
  Rng rng(5);
  std::vector<Triplet> e;
  for (std::int64_t r = 0; r < 12; ++r)
    for (std::int64_t c = 0; c < 9; ++c)
      if (rng.uniform() < 0.3) e.push_back({r, c, rng.uniform(-1.0, 1.0)});
  const SparseMatrix s = SparseMatrix::from_triplets(12, 9, e);
  const Tensor dense = s.to_dense();
  const Tensor x = test::random_tensor(rng, 9, 6), xt = test::random_tensor(rng, 12, 6);
  const Tensor ref = test::naive_matmul(dense, x), ref_t = test::naive_matmul(transpose(dense), xt);
  std::vector<double> base;
  for (const auto* t : k::available_tables()) {
    CAPTURE(t->name);
    std::vector<double> y(12 * 6, 0.0), yt(9 * 6, 0.0);
    k::coo_spmm_acc(*t, s.row_indices(), s.col_indices(), s.values(), 6, x.data(), y.data());
    k::coo_spmm_t_acc(*t, s.row_indices(), s.col_indices(), s.values(), 6, xt.data(), yt.data());
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - ref[i]) < 1e-12);
    for (std::size_t i = 0; i < yt.size(); ++i) CHECK(std::abs(yt[i] - ref_t[i]) < 1e-12);
    if (base.empty()) base = y;
    CHECK(bit_equal(base, y));
  }
}
