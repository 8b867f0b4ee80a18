#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "gst/error.hpp"
#include "gst/kernels.hpp"

namespace gst::kernels {

#if defined(GST_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(GST_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = avx2_table()) out.push_back(t);
  return out;
}

namespace {

const KernelTable& select_table() {
  const char* env = std::getenv("GST_KERNELS");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return scalar_table();
  if (env != nullptr && std::strcmp(env, "avx2") == 0) {
    if (const KernelTable* t = avx2_table()) return *t;
    fail_config("GST_KERNELS=avx2 requested but AVX2 is unavailable");
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select_table();
  return table;
}

void gemm_acc(const KernelTable& kt, std::size_t n, std::size_t k, std::size_t m, const double* a,
              const double* b, double* c) {
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c + i * m;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) kt.axpy(m, arow[p], b + p * m, crow);
  }
}

void gemm_tn_acc(const KernelTable& kt, std::size_t n, std::size_t k, std::size_t m, const double* a,
                 const double* b, double* c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * m;
    for (std::size_t p = 0; p < k; ++p) kt.axpy(m, arow[p], brow, c + p * m);
  }
}

void gemm_nt_acc(const KernelTable& kt, std::size_t n, std::size_t m, std::size_t k, const double* a,
                 const double* b, double* c) {
  std::vector<double> bt(m * k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t q = 0; q < m; ++q) bt[q * k + r] = b[r * m + q];
  gemm_acc(kt, n, m, k, a, bt.data(), c);
}

void coo_spmm_acc(const KernelTable& kt, std::span<const std::int64_t> row_idx,
                  std::span<const std::int64_t> col_idx, std::span<const double> values,
                  std::size_t width, const double* x, double* y) {
  for (std::size_t e = 0; e < values.size(); ++e) {
    kt.axpy(width, values[e], x + static_cast<std::size_t>(col_idx[e]) * width,
            y + static_cast<std::size_t>(row_idx[e]) * width);
  }
}

void coo_spmm_t_acc(const KernelTable& kt, std::span<const std::int64_t> row_idx,
                    std::span<const std::int64_t> col_idx, std::span<const double> values,
                    std::size_t width, const double* x, double* y) {
  for (std::size_t e = 0; e < values.size(); ++e) {
    kt.axpy(width, values[e], x + static_cast<std::size_t>(row_idx[e]) * width,
            y + static_cast<std::size_t>(col_idx[e]) * width);
  }
}

}  // namespace gst::kernels
