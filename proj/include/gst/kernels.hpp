#pragma once

// Inner-loop kernels. Every dense and sparse product in the library is written
// as a sequence of axpy updates in a fixed index order, so a SIMD variant that
// vectorizes along the contiguous axis performs exactly the same floating point
// operations per output element as the scalar reference.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gst::kernels {

struct KernelTable {
  const char* name;
  // y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // out = a + b
  void (*add)(std::size_t n, const double* a, const double* b, double* out);
  // out = a - b
  void (*sub)(std::size_t n, const double* a, const double* b, double* out);
  // out = a * b
  void (*mul)(std::size_t n, const double* a, const double* b, double* out);
  // y += a * b (not fused)
  void (*mul_acc)(std::size_t n, const double* a, const double* b, double* y);
  // out = a * x
  void (*scale)(std::size_t n, double a, const double* x, double* out);
};

const KernelTable& scalar_table();

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table();

// Selected once per process: GST_KERNELS=scalar|avx2 overrides, otherwise the
// widest variant the CPU supports.
const KernelTable& active();

// Tables compiled in and usable on this CPU, scalar first.
std::vector<const KernelTable*> available_tables();

// Row-major dense GEMM accumulation, C[n x m] += A[n x k] * B[k x m].
void gemm_acc(const KernelTable& kt, std::size_t n, std::size_t k, std::size_t m, const double* a,
              const double* b, double* c);

// C[k x m] += A^T * B with A[n x k], B[n x m].
void gemm_tn_acc(const KernelTable& kt, std::size_t n, std::size_t k, std::size_t m, const double* a,
                 const double* b, double* c);

// C[n x k] += A * B^T with A[n x m], B[k x m]. Transposes B into scratch first.
void gemm_nt_acc(const KernelTable& kt, std::size_t n, std::size_t m, std::size_t k, const double* a,
                 const double* b, double* c);

// Y[rows x width] += S * X for a COO matrix (entries visited in stored order).
void coo_spmm_acc(const KernelTable& kt, std::span<const std::int64_t> row_idx,
                  std::span<const std::int64_t> col_idx, std::span<const double> values,
                  std::size_t width, const double* x, double* y);

// Y += S^T * X.
void coo_spmm_t_acc(const KernelTable& kt, std::span<const std::int64_t> row_idx,
                    std::span<const std::int64_t> col_idx, std::span<const double> values,
                    std::size_t width, const double* x, double* y);

}  // namespace gst::kernels
