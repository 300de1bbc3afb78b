#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "etm/model.hpp"

// Shared discretization pieces. One transport step advances age by exactly
// one cell, so the step size is tied to the mesh (dt == delta) and each cell
// decays by the hazard averaged along its characteristic:
//   g_i = exp(-(S(m_i, x) + S(m_{i+1}, x)) / 2 * dt),   m_n := m_{n-1}.
// With this factor the fixed point of decay-then-shift is exactly the
// midpoint-sampled stationary profile, so equilibria stay put to round-off.
namespace etm::scheme {

// Separable catalogue: the factors take three values split at sigma.
struct Slices {
  std::int64_t i0 = 0;  // first cell whose midpoint lies beyond sigma
  double full = 0;      // exp(-phi dt): both midpoints beyond sigma
  double half = 0;      // exp(-phi dt / 2): straddling cell i0 - 1
};

inline std::int64_t first_active_cell(double sigma, const AgeGrid& g) {
  if (sigma <= 0) return 0;
  auto i0 = static_cast<std::int64_t>(std::floor(sigma / g.delta - 0.5)) + 1;
  if (i0 < 0) i0 = 0;
  if (i0 > g.n_cells) i0 = g.n_cells;
  // Direct comparisons make the slice boundary exact regardless of how the
  // division above rounded.
  while (i0 > 0 && g.midpoint(i0 - 1) > sigma) --i0;
  while (i0 < g.n_cells && g.midpoint(i0) <= sigma) ++i0;
  return i0;
}

inline Slices slices(const FiringCoefficient& s, double x, const AgeGrid& g) {
  Slices out;
  out.i0 = first_active_cell(s.sigma(), g);
  const double phi = s.rate_factor(x);
  out.full = std::exp(-phi * g.delta);
  out.half = std::exp(-phi * g.delta * 0.5);
  return out;
}

// Generic per-cell factors for non-separable coefficients.
inline void decay_factors(const FiringCoefficient& s, double x,
                          const AgeGrid& g, std::vector<double>& f) {
  const auto n = g.n_cells;
  f.resize(static_cast<std::size_t>(n));
  double prev = s(g.midpoint(0), x);
  for (std::int64_t i = 0; i + 1 < n; ++i) {
    const double next = s(g.midpoint(i + 1), x);
    f[static_cast<std::size_t>(i)] = std::exp(-0.5 * (prev + next) * g.delta);
    prev = next;
  }
  f[static_cast<std::size_t>(n - 1)] = std::exp(-prev * g.delta);
}

}  // namespace etm::scheme
