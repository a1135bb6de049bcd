#include "uura/kernels/kernels.hpp"

// AVX2/FMA kernels, two complex doubles per 256-bit lane. This translation
// unit is the only one built with -mavx2 -mfma; callers reach it through the
// dispatch table after the CPU check.

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace uura::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// y += a * x for two complex doubles per iteration. fmaddsub pairs the
// (re, im) lanes: even lanes get xr*ar - ai*xi, odd lanes xi*ar + ai*xr.
inline void zaxpy_body(double* y, const double* x, __m256d are, __m256d aim,
                       std::size_t n2) {
  std::size_t i = 0;
  for (; i + 4 <= n2; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vsw = _mm256_permute_pd(vx, 0x5);
    __m256d t = _mm256_mul_pd(vsw, aim);
    __m256d prod = _mm256_fmaddsub_pd(vx, are, t);
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  if (i < n2) {
    const double ar = _mm256_cvtsd_f64(are);
    const double ai = _mm256_cvtsd_f64(aim);
    const double xr = x[i], xi = x[i + 1];
    y[i] += ar * xr - ai * xi;
    y[i + 1] += ar * xi + ai * xr;
  }
}

void zaxpy_avx2(cplx* y, cplx a, const cplx* x, std::size_t n) {
  zaxpy_body(reinterpret_cast<double*>(y),
             reinterpret_cast<const double*>(x), _mm256_set1_pd(a.real()),
             _mm256_set1_pd(a.imag()), 2 * n);
}

cplx zdotc_avx2(const cplx* xc, const cplx* yc, std::size_t n) {
  const double* x = reinterpret_cast<const double*>(xc);
  const double* y = reinterpret_cast<const double*>(yc);
  const std::size_t n2 = 2 * n;
  // Re part is a plain dot product of the interleaved buffers; Im part is
  // the swapped product with alternating signs.
  const __m256d sign = _mm256_set_pd(1.0, -1.0, 1.0, -1.0);
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n2; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    acc_re = _mm256_fmadd_pd(vx, vy, acc_re);
    __m256d vsw = _mm256_permute_pd(vx, 0x5);
    acc_im = _mm256_fmadd_pd(_mm256_mul_pd(vsw, vy), sign, acc_im);
  }
  double re = hsum(acc_re);
  double im = hsum(acc_im);
  if (i < n2) {
    const double xr = x[i], xi = x[i + 1], yr = y[i], yi = y[i + 1];
    re += xr * yr + xi * yi;
    im += xr * yi - xi * yr;
  }
  return {re, im};
}

void zgemv_avx2(const cplx* a, std::size_t rows, std::size_t cols,
                const cplx* x, cplx* y) {
  double* yd = reinterpret_cast<double*>(y);
  for (std::size_t i = 0; i < 2 * rows; ++i) yd[i] = 0.0;
  for (std::size_t k = 0; k < cols; ++k) {
    const cplx xk = x[k];
    if (xk == cplx{0.0, 0.0}) continue;
    zaxpy_body(yd, reinterpret_cast<const double*>(a + k * rows),
               _mm256_set1_pd(xk.real()), _mm256_set1_pd(xk.imag()),
               2 * rows);
  }
}

void zher_avx2(cplx* a, std::size_t n, double alpha, const cplx* x) {
  const double* xd = reinterpret_cast<const double*>(x);
  for (std::size_t k = 0; k < n; ++k) {
    const double wr = alpha * x[k].real();
    const double wi = -alpha * x[k].imag();
    if (wr == 0.0 && wi == 0.0) continue;
    zaxpy_body(reinterpret_cast<double*>(a + k * n), xd,
               _mm256_set1_pd(wr), _mm256_set1_pd(wi), 2 * n);
  }
}

void soft_threshold_avx2(double* out, const double* in, std::size_t n,
                         double lambda) {
  const __m256d vlam = _mm256_set1_pd(lambda);
  const __m256d vzero = _mm256_setzero_pd();
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(
      0x7fffffffffffffffLL));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(in + i);
    __m256d mag = _mm256_and_pd(v, abs_mask);
    __m256d t = _mm256_max_pd(_mm256_sub_pd(mag, vlam), vzero);
    __m256d sgn = _mm256_andnot_pd(abs_mask, v);
    __m256d keep = _mm256_cmp_pd(t, vzero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(_mm256_or_pd(t, sgn), keep));
  }
  for (; i < n; ++i) {
    const double v = in[i];
    out[i] = v > lambda ? v - lambda : (v < -lambda ? v + lambda : 0.0);
  }
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Backend& avx2_backend() {
  static const Backend backend{
      "avx2",        zaxpy_avx2,          zdotc_avx2, zgemv_avx2,
      zher_avx2,     soft_threshold_avx2, sum_sq_diff_avx2,
  };
  return backend;
}

}  // namespace uura::kernels

#else

namespace uura::kernels {

const Backend& avx2_backend() { return scalar_backend(); }

}  // namespace uura::kernels

#endif
