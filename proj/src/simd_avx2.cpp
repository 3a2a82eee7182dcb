#include "con/simd.hpp"

#if defined(CON_HAVE_AVX2_TU)
#include <immintrin.h>
#else
#include <stdexcept>
#endif

namespace con::simd::avx2 {

#if defined(CON_HAVE_AVX2_TU)

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  // (l0 + l2) + (l1 + l3)
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double sum = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
  for (; i < n; ++i) {
    const double prod = a[i] * b[i];
    sum = sum + prod;
  }
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void max_sum_fold(double* p, double* s, const double* sp, const double* ss,
                  std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vp = _mm256_loadu_pd(p + i);
    const __m256d vsp = _mm256_loadu_pd(sp + i);
    _mm256_storeu_pd(p + i, _mm256_max_pd(vp, vsp));
    const __m256d vs = _mm256_loadu_pd(s + i);
    const __m256d vss = _mm256_loadu_pd(ss + i);
    _mm256_storeu_pd(s + i, _mm256_add_pd(vs, vss));
  }
  for (; i < n; ++i) {
    p[i] = p[i] > sp[i] ? p[i] : sp[i];
    s[i] = s[i] + ss[i];
  }
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
  }
  for (; i < n; ++i) x[i] = x[i] * alpha;
}

#else

double dot(const double*, const double*, std::size_t) {
  throw std::logic_error("AVX2 kernels not compiled in");
}
void axpy(double, const double*, double*, std::size_t) {
  throw std::logic_error("AVX2 kernels not compiled in");
}
void max_sum_fold(double*, double*, const double*, const double*, std::size_t) {
  throw std::logic_error("AVX2 kernels not compiled in");
}
void scale(double, double*, std::size_t) {
  throw std::logic_error("AVX2 kernels not compiled in");
}

#endif

}  // namespace con::simd::avx2
