#include "regfeal/kernels.hpp"

#include <cmath>
#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif

namespace regfeal::kernels {

void hermite_batch_scalar(int k_max, const double* x, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0;
  if (k_max == 0) return;
  std::memcpy(out + n, x, n * sizeof(double));
  for (int k = 2; k <= k_max; ++k) {
    // h_k(x) = x h_{k-1}(x)/sqrt(k) - sqrt((k-1)/k) h_{k-2}(x)
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
    const double ratio = std::sqrt(static_cast<double>(k - 1) / static_cast<double>(k));
    const double* prev1 = out + static_cast<std::size_t>(k - 1) * n;
    const double* prev2 = out + static_cast<std::size_t>(k - 2) * n;
    double* row = out + static_cast<std::size_t>(k) * n;
    for (std::size_t i = 0; i < n; ++i)
      row[i] = x[i] * prev1[i] * inv_sqrt_k - ratio * prev2[i];
  }
}

void mul_accumulate_scalar(const double* src, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] *= src[i];
}

#if defined(__x86_64__) || defined(_M_X64)

__attribute__((target("avx2,fma"))) void hermite_batch_avx2(int k_max, const double* x,
                                                            std::size_t n, double* out) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, one);
  for (; i < n; ++i) out[i] = 1.0;
  if (k_max == 0) return;
  std::memcpy(out + n, x, n * sizeof(double));
  for (int k = 2; k <= k_max; ++k) {
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
    const double ratio = std::sqrt(static_cast<double>(k - 1) / static_cast<double>(k));
    const __m256d vinv = _mm256_set1_pd(inv_sqrt_k);
    const __m256d vratio = _mm256_set1_pd(ratio);
    const double* prev1 = out + static_cast<std::size_t>(k - 1) * n;
    const double* prev2 = out + static_cast<std::size_t>(k - 2) * n;
    double* row = out + static_cast<std::size_t>(k) * n;
    i = 0;
    for (; i + 4 <= n; i += 4) {
      __m256d xv = _mm256_loadu_pd(x + i);
      __m256d p1 = _mm256_loadu_pd(prev1 + i);
      __m256d p2 = _mm256_loadu_pd(prev2 + i);
      __m256d t = _mm256_mul_pd(_mm256_mul_pd(xv, p1), vinv);
      _mm256_storeu_pd(row + i, _mm256_fnmadd_pd(vratio, p2, t));
    }
    for (; i < n; ++i)
      row[i] = x[i] * prev1[i] * inv_sqrt_k - ratio * prev2[i];
  }
}

__attribute__((target("avx2"))) void mul_accumulate_avx2(const double* src, std::size_t n,
                                                         double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_loadu_pd(out + i);
    __m256d b = _mm256_loadu_pd(src + i);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(a, b));
  }
  for (; i < n; ++i) out[i] *= src[i];
}

static bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#endif

HermiteBatchFn hermite_batch() {
#if defined(__x86_64__) || defined(_M_X64)
  static HermiteBatchFn fn = cpu_has_avx2() ? hermite_batch_avx2 : hermite_batch_scalar;
#else
  static HermiteBatchFn fn = hermite_batch_scalar;
#endif
  return fn;
}

MulAccumulateFn mul_accumulate() {
#if defined(__x86_64__) || defined(_M_X64)
  static MulAccumulateFn fn = cpu_has_avx2() ? mul_accumulate_avx2 : mul_accumulate_scalar;
#else
  static MulAccumulateFn fn = mul_accumulate_scalar;
#endif
  return fn;
}

std::string active_target() {
#if defined(__x86_64__) || defined(_M_X64)
  return cpu_has_avx2() ? "avx2" : "scalar";
#else
  return "scalar";
#endif
}

}  // namespace regfeal::kernels
