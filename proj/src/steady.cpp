#include "etm/steady.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "etm/kernels.hpp"
#include "scheme.hpp"

namespace etm {
namespace {

void require_active_tail(std::int64_t i0, const AgeGrid& g) {
  if (i0 > g.n_cells - 2)
    throw ValidationError("steady: grid must extend beyond sigma");
}

// Unit-boundary profile cells via the decay recurrence; shared by the mass
// and the full profile. Returns delta * sum; fills cells when non-null.
double unit_profile(const FiringCoefficient& s, double x, const AgeGrid& g,
                    std::vector<double>* cells) {
  const auto n = static_cast<std::size_t>(g.n_cells);
  if (cells) cells->resize(n);
  kernels::NeumaierSum acc;
  double c = 1.0;
  if (s.separable()) {
    const auto sl = scheme::slices(s, x, g);
    require_active_tail(sl.i0, g);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (cells) (*cells)[i] = c;
      acc.add(c);
      const auto ii = static_cast<std::int64_t>(i);
      c *= ii < sl.i0 - 1 ? 1.0 : ii == sl.i0 - 1 ? sl.half : sl.full;
    }
    const double last = c / (1.0 - sl.full);
    if (cells) (*cells)[n - 1] = last;
    acc.add(last);
    return g.delta * acc.value();
  }
  require_active_tail(scheme::first_active_cell(s.sigma(), g), g);
  std::vector<double> f;
  scheme::decay_factors(s, x, g, f);
  if (!(f[n - 1] < 1.0))
    throw ValidationError(
        "steady: hazard vanishes at the mesh end; extend the grid");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (cells) (*cells)[i] = c;
    acc.add(c);
    c *= f[i];
  }
  const double last = c / (1.0 - f[n - 1]);
  if (cells) (*cells)[n - 1] = last;
  acc.add(last);
  return g.delta * acc.value();
}

}  // namespace

double survival_integral(const FiringCoefficient& s, double x,
                         const AgeGrid& g) {
  if (!std::isfinite(x))
    throw ValidationError("steady: activity must be finite");
  if (s.separable()) {
    const auto sl = scheme::slices(s, x, g);
    require_active_tail(sl.i0, g);
    // Absorption completes the geometric series, so the mass is exact.
    return g.delta *
           (static_cast<double>(sl.i0) + sl.half / (1.0 - sl.full));
  }
  return unit_profile(s, x, g, nullptr);
}

AgeDensity stationary_profile(const FiringCoefficient& s, double x,
                              const AgeGrid& g, double* rescale) {
  if (!std::isfinite(x))
    throw ValidationError("steady: activity must be finite");
  std::vector<double> cells;
  const double unit_mass = unit_profile(s, x, g, &cells);
  const double c0 = 1.0 / unit_mass;
  for (double& c : cells) c *= c0;
  AgeDensity out(g, std::move(cells));
  const double m = out.mass();
  if (!(std::isfinite(m) && m > 0))
    throw NumericalError("steady: stationary profile has non-positive mass");
  const double factor = 1.0 / m;
  kernels::scale_sum(out.cells.data(), out.cells.size(), factor);
  if (rescale) *rescale = factor;
  return out;
}

double linear_stationary_rate(const FiringCoefficient& s, double x,
                              const AgeGrid& g) {
  return 1.0 / survival_integral(s, x, g);
}

double stationary_quadrature_rate(const FiringCoefficient& s, double x,
                                  const AgeGrid& g) {
  if (s.separable()) {
    const auto sl = scheme::slices(s, x, g);
    require_active_tail(sl.i0, g);
    const double active = sl.half / (1.0 - sl.full);  // sum of cells past i0
    const double unit_mass = g.delta * (static_cast<double>(sl.i0) + active);
    return s.rate_factor(x) * g.delta * active / unit_mass;
  }
  std::vector<double> cells;
  const double unit_mass = unit_profile(s, x, g, &cells);
  kernels::NeumaierSum acc;
  for (std::size_t i = 0; i < cells.size(); ++i)
    acc.add(s(g.midpoint(static_cast<std::int64_t>(i)), x) * cells[i]);
  return g.delta * acc.value() / unit_mass;
}

double solve_steady_state(const FiringCoefficient& s, const AgeGrid& g,
                          double residual_tol) {
  const auto gap = [&](double r) {
    return r * survival_integral(s, r, g) - 1.0;
  };
  // r * I(r) >= r / sup_norm up to the mesh tail, so the root sits below
  // 2 * sup_norm + 1 for any admissible coefficient.
  const double top = 2.0 * s.sup_norm() + 1.0;
  const int scan = 512;
  double lo = 0.0, hi = top;
  double g_lo = -1.0, g_hi = gap(top);
  bool bracketed = g_hi >= 0.0;
  if (bracketed) {
    for (int k = 1; k < scan; ++k) {
      const double r = top * static_cast<double>(k) / scan;
      const double v = gap(r);
      if (v >= 0.0) {
        hi = r;
        g_hi = v;
        break;
      }
      lo = r;
      g_lo = v;
    }
  }
  if (!bracketed)
    throw NonConvergence("steady: no equilibrium below 2*sup_norm + 1", g_hi);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = gap(mid);
    if (v >= 0.0) {
      hi = mid;
      g_hi = v;
    } else {
      lo = mid;
      g_lo = v;
    }
  }
  const double root = -g_lo <= g_hi ? lo : hi;
  const double residual = std::min(-g_lo, g_hi);
  if (!(residual <= residual_tol))
    throw NonConvergence("steady: equilibrium residual above tolerance",
                         residual);
  return root;
}

Equilibrium solve_equilibrium(const FiringCoefficient& s, const AgeGrid& g,
                              double residual_tol) {
  Equilibrium eq;
  eq.r_star = solve_steady_state(s, g, residual_tol);
  eq.x_star = eq.r_star;
  eq.density = stationary_profile(s, eq.r_star, g, &eq.rescale_factor);
  return eq;
}

}  // namespace etm
