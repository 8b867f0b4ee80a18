#include "gst/kernels.hpp"

namespace gst::kernels {
namespace {

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_scalar(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc_scalar(std::size_t n, const double* a, const double* b, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

void scale_scalar(std::size_t n, double a, const double* x, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar",   axpy_scalar,    add_scalar,  sub_scalar,
                                 mul_scalar, mul_acc_scalar, scale_scalar};
  return table;
}

}  // namespace gst::kernels
