#include <immintrin.h>

#include <cmath>

#include "vid2ode/kernels.hpp"

namespace vid2ode::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
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
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_sq_diff_f_avx2(const double* a, const float* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d bf = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), bf);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    double d = a[i] - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void blend_avx2(const double* w, const double* c, const double* b, double* out,
                std::size_t n) {
  __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vw = _mm256_loadu_pd(w + i);
    __m256d vc = _mm256_loadu_pd(c + i);
    __m256d vb = _mm256_loadu_pd(b + i);
    __m256d r = _mm256_fmadd_pd(vw, vc, _mm256_mul_pd(_mm256_sub_pd(one, vw), vb));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = w[i] * c[i] + (1.0 - w[i]) * b[i];
}

// No fast vector tanh here: libm tanh is correctly rounded and the squash is
// not a hot spot, so both tables use the same elementwise loop.
void tanh_squash_elementwise(const double* z, double* out, double* t, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double th = std::tanh(z[i]);
    if (t) t[i] = th;
    out[i] = 0.5 * (th + 1.0);
  }
}

const Ops kAvx2Ops = {
    sum_sq_diff_avx2, sum_sq_diff_f_avx2, axpy_avx2,
    dot_avx2,         blend_avx2,         tanh_squash_elementwise,
};

}  // namespace

const Ops* avx2_if_supported() {
  return __builtin_cpu_supports("avx2") ? &kAvx2Ops : nullptr;
}

}  // namespace vid2ode::kernels
