#include "uura/kernels/kernels.hpp"

#include <cmath>

// Reference kernels. Plain loops, no intrinsics; the SIMD variants are
// equivalence-tested against these.

namespace uura::kernels {
namespace {

void zaxpy_scalar(cplx* y, cplx a, const cplx* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

cplx zdotc_scalar(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

void zgemv_scalar(const cplx* a, std::size_t rows, std::size_t cols,
                  const cplx* x, cplx* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
  for (std::size_t k = 0; k < cols; ++k) {
    const cplx xk = x[k];
    if (xk == cplx{0.0, 0.0}) continue;
    const cplx* col = a + k * rows;
    for (std::size_t i = 0; i < rows; ++i) y[i] += xk * col[i];
  }
}

void zher_scalar(cplx* a, std::size_t n, double alpha, const cplx* x) {
  for (std::size_t k = 0; k < n; ++k) {
    const cplx w = alpha * std::conj(x[k]);
    if (w == cplx{0.0, 0.0}) continue;
    cplx* col = a + k * n;
    for (std::size_t i = 0; i < n; ++i) col[i] += w * x[i];
  }
}

void soft_threshold_scalar(double* out, const double* in, std::size_t n,
                           double lambda) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = in[i];
    if (v > lambda)
      out[i] = v - lambda;
    else if (v < -lambda)
      out[i] = v + lambda;
    else
      out[i] = 0.0;
  }
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend{
      "scalar",        zaxpy_scalar,          zdotc_scalar, zgemv_scalar,
      zher_scalar,     soft_threshold_scalar, sum_sq_diff_scalar,
  };
  return backend;
}

}  // namespace uura::kernels
