#include "varreg/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace varreg::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline __m256d vabs(__m256d v) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return _mm256_and_pd(v, mask);
}

double v_dot(std::span<const double> a, std::span<const double> b) {
  std::size_t n = a.size(), i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double v_sum_abs(std::span<const double> x) {
  std::size_t n = x.size(), i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, vabs(_mm256_loadu_pd(x.data() + i)));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::abs(x[i]);
  return s;
}

double v_sum_abs_smoothed(std::span<const double> x, double eps) {
  std::size_t n = x.size(), i = 0;
  const __m256d e2 = _mm256_set1_pd(eps * eps);
  const __m256d e = _mm256_set1_pd(eps);
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x.data() + i);
    __m256d r = _mm256_sqrt_pd(_mm256_fmadd_pd(v, v, e2));
    acc = _mm256_add_pd(acc, _mm256_sub_pd(r, e));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::sqrt(x[i] * x[i] + eps * eps) - eps;
  return s;
}

double v_max_abs(std::span<const double> x) {
  std::size_t n = x.size(), i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, vabs(_mm256_loadu_pd(x.data() + i)));
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  lo = _mm_max_pd(lo, hi);
  double m = std::max(_mm_cvtsd_f64(lo), _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

double v_sum_sq(std::span<const double> x) { return v_dot(x, x); }

void v_axpy(double a, std::span<const double> x, std::span<double> y) {
  std::size_t n = x.size(), i = 0;
  const __m256d va = _mm256_set1_pd(a);
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
    _mm256_storeu_pd(y.data() + i, r);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void v_clamp_min(std::span<double> x, double lo) {
  std::size_t n = x.size(), i = 0;
  const __m256d vlo = _mm256_set1_pd(lo);
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x.data() + i, _mm256_max_pd(vlo, _mm256_loadu_pd(x.data() + i)));
  for (; i < n; ++i)
    if (x[i] < lo) x[i] = lo;
}

const Ops kAvx2 = {v_dot, v_sum_abs, v_sum_abs_smoothed, v_max_abs,
                   v_sum_sq, v_axpy, v_clamp_min};

}  // namespace

namespace detail {
const Ops& avx2_ops() { return kAvx2; }
}

}  // namespace varreg::kernels

#else

namespace varreg::kernels::detail {
const Ops& avx2_ops() { return scalar_ops(); }
}

#endif
