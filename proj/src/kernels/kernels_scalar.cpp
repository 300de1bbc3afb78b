#include <cmath>

#include "etm/kernels.hpp"

// Reference implementations. Kept branch-simple; the AVX2 variants mirror the
// arithmetic (same per-element expressions, FMA for the loss term) so the two
// agree to rounding.
namespace etm::kernels {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  NeumaierSum acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(x[i]);
  return acc.value();
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  // Four independent accumulators, matching the SIMD lane reduction order.
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = std::fma(a[i + 0], b[i + 0], s0);
    s1 = std::fma(a[i + 1], b[i + 1], s1);
    s2 = std::fma(a[i + 2], b[i + 2], s2);
    s3 = std::fma(a[i + 3], b[i + 3], s3);
  }
  double tail = 0;
  for (; i < n; ++i) tail = std::fma(a[i], b[i], tail);
  return ((s0 + s1) + (s2 + s3)) + tail;
}

double l1_scalar(const double* a, const double* b, std::size_t n) {
  NeumaierSum acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(std::abs(a[i] - b[i]));
  return acc.value();
}

double scale_sum_scalar(double* x, std::size_t n, double factor) {
  NeumaierSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    acc.add(x[i]);
    x[i] *= factor;
  }
  return acc.value();
}

double decay_scalar(double* x, const double* f, std::size_t n) {
  NeumaierSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    // loss = x*(1-f) evaluated as one fused op: x - x*f.
    acc.add(std::fma(-x[i], f[i], x[i]));
    x[i] *= f[i];
  }
  return acc.value();
}

}  // namespace

extern const Ops scalar_ops;
const Ops scalar_ops = {
    "scalar", sum_scalar, dot_scalar, l1_scalar, scale_sum_scalar, decay_scalar,
};

}  // namespace etm::kernels
