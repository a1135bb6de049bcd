#pragma once

#include <complex>
#include <cstddef>
#include <string_view>

// Arithmetic kernels for the decoder inner loops. Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2/FMA variant. The active
// backend is picked once at startup from CPU capabilities and can be forced
// with UURA_KERNELS=scalar|avx2 (or force_backend) for equivalence testing.
//
// Conventions: complex buffers are interleaved std::complex<double>, matrices
// are column-major, and none of the kernels allocate.

namespace uura::kernels {

using cplx = std::complex<double>;

struct Backend {
  const char* name;

  // y += a * x
  void (*zaxpy)(cplx* y, cplx a, const cplx* x, std::size_t n);

  // sum_i conj(x_i) * y_i
  cplx (*zdotc)(const cplx* x, const cplx* y, std::size_t n);

  // y = A * x, A column-major rows x cols. y must not alias A or x.
  void (*zgemv)(const cplx* a, std::size_t rows, std::size_t cols,
                const cplx* x, cplx* y);

  // A += alpha * x * x^H with real alpha (Hermitian rank-1, full storage).
  void (*zher)(cplx* a, std::size_t n, double alpha, const cplx* x);

  // out_i = sign(in_i) * max(|in_i| - lambda, 0)
  void (*soft_threshold)(double* out, const double* in, std::size_t n,
                         double lambda);

  // sum_i (a_i - b_i)^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
};

const Backend& scalar_backend();
bool avx2_available();
const Backend& avx2_backend();  // valid only if avx2_available()

// Runtime-selected backend (honors UURA_KERNELS on first use).
const Backend& active();

// Force a backend by name ("scalar", "avx2"); throws std::invalid_argument
// on unknown or unavailable names.
void force_backend(std::string_view name);

}  // namespace uura::kernels
