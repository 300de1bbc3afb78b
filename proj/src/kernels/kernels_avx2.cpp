#include <immintrin.h>

#include <cmath>

#include "etm/kernels.hpp"

// AVX2+FMA variants. Lane j of the vector accumulators holds elements
// i == j (mod 4), the same partition the scalar reference uses, and the
// reductions run in the same tree order, so dot() is bit-identical to the
// scalar path and the compensated kernels agree to lane-regrouping rounding.
namespace etm::kernels {
namespace {

struct VNeumaier {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();

  void add(__m256d v) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    const __m256d t = _mm256_add_pd(s, v);
    const __m256d abs_s = _mm256_andnot_pd(signmask, s);
    const __m256d abs_v = _mm256_andnot_pd(signmask, v);
    const __m256d s_ge = _mm256_cmp_pd(abs_s, abs_v, _CMP_GE_OQ);
    const __m256d big = _mm256_blendv_pd(v, s, s_ge);
    const __m256d small = _mm256_blendv_pd(s, v, s_ge);
    c = _mm256_add_pd(c, _mm256_add_pd(_mm256_sub_pd(big, t), small));
    s = t;
  }

  double value() const {
    alignas(32) double sl[4], cl[4];
    _mm256_store_pd(sl, s);
    _mm256_store_pd(cl, c);
    NeumaierSum acc;
    for (double v : sl) acc.add(v);
    return acc.value() + ((cl[0] + cl[1]) + (cl[2] + cl[3]));
  }
};

double sum_avx2(const double* x, std::size_t n) {
  VNeumaier acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc.add(_mm256_loadu_pd(x + i));
  NeumaierSum tail;
  for (; i < n; ++i) tail.add(x[i]);
  return acc.value() + tail.value();
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  alignas(32) double l[4];
  _mm256_store_pd(l, acc);
  double tail = 0;
  for (; i < n; ++i) tail = std::fma(a[i], b[i], tail);
  return ((l[0] + l[1]) + (l[2] + l[3])) + tail;
}

double l1_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d signmask = _mm256_set1_pd(-0.0);
  VNeumaier acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc.add(_mm256_andnot_pd(signmask, d));
  }
  NeumaierSum tail;
  for (; i < n; ++i) tail.add(std::abs(a[i] - b[i]));
  return acc.value() + tail.value();
}

double scale_sum_avx2(double* x, std::size_t n, double factor) {
  const __m256d fv = _mm256_set1_pd(factor);
  VNeumaier acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc.add(v);
    _mm256_storeu_pd(x + i, _mm256_mul_pd(v, fv));
  }
  NeumaierSum tail;
  for (; i < n; ++i) {
    tail.add(x[i]);
    x[i] *= factor;
  }
  return acc.value() + tail.value();
}

double decay_avx2(double* x, const double* f, std::size_t n) {
  VNeumaier acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d fv = _mm256_loadu_pd(f + i);
    acc.add(_mm256_fnmadd_pd(xv, fv, xv));
    _mm256_storeu_pd(x + i, _mm256_mul_pd(xv, fv));
  }
  NeumaierSum tail;
  for (; i < n; ++i) {
    tail.add(std::fma(-x[i], f[i], x[i]));
    x[i] *= f[i];
  }
  return acc.value() + tail.value();
}

const Ops avx2_ops_table = {
    "avx2", sum_avx2, dot_avx2, l1_avx2, scale_sum_avx2, decay_avx2,
};

}  // namespace

const Ops* avx2_ops() {
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &avx2_ops_table;
  return nullptr;
}

}  // namespace etm::kernels
