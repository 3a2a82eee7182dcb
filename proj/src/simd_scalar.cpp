#include "con/simd.hpp"

namespace con::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  // Four partial sums striped like the 4-wide vector lanes.
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double prod = a[i + l] * b[i + l];
      acc[l] = acc[l] + prod;
    }
  }
  double sum = (acc[0] + acc[2]) + (acc[1] + acc[3]);
  for (; i < n; ++i) {
    const double prod = a[i] * b[i];
    sum = sum + prod;
  }
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void max_sum_fold(double* p, double* s, const double* sp, const double* ss,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    // Operand order matches _mm256_max_pd: returns the second operand when
    // either is NaN or both compare equal.
    p[i] = p[i] > sp[i] ? p[i] : sp[i];
    s[i] = s[i] + ss[i];
  }
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] * alpha;
}

}  // namespace con::simd::scalar
