#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Array kernels behind runtime CPU dispatch. Scalar versions are the reference
// semantics; the AVX2 versions must agree with them to a few ulps (equivalence
// tests iterate every available variant). Dispatch is resolved once per
// process, so repeated runs on the same host use the same code path and
// artifacts stay byte-identical.
namespace etm::kernels {

struct Ops {
  const char* name;
  // Neumaier-compensated sum of x[0..n).
  double (*sum)(const double* x, std::size_t n);
  // Plain FMA dot product, fixed association order per variant.
  double (*dot)(const double* a, const double* b, std::size_t n);
  // Compensated sum of |a[i] - b[i]|.
  double (*l1_distance)(const double* a, const double* b, std::size_t n);
  // x[i] *= factor; returns the compensated sum of the pre-scale values.
  double (*scale_sum)(double* x, std::size_t n, double factor);
  // x[i] *= f[i]; returns the compensated sum of the losses x[i]*(1 - f[i]).
  double (*decay_with_factors)(double* x, const double* f, std::size_t n);
};

// Variant selected for this host (AVX2+FMA when the CPU has it, else scalar).
const Ops& active();

// Every variant compiled in and runnable on this host; for equivalence tests.
const std::vector<const Ops*>& available();

inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double l1_distance(const double* a, const double* b, std::size_t n) {
  return active().l1_distance(a, b, n);
}
inline double scale_sum(double* x, std::size_t n, double factor) {
  return active().scale_sum(x, n, factor);
}
inline double decay_with_factors(double* x, const double* f, std::size_t n) {
  return active().decay_with_factors(x, f, n);
}

// Serial compensated accumulator for loops that cannot be expressed as one of
// the kernels above (e.g. running mass updates).
struct NeumaierSum {
  double s = 0.0;
  double c = 0.0;
  void add(double v) {
    const double t = s + v;
    if (std::abs(s) >= std::abs(v))
      c += (s - t) + v;
    else
      c += (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

}  // namespace etm::kernels
