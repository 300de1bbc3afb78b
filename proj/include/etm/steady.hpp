#pragma once

#include "etm/model.hpp"

namespace etm {

// Mass of the discrete stationary profile with unit boundary cell at frozen
// activity x (the expected-lifetime integral on the mesh; the last cell
// absorbs the geometric tail, completing the series). Closed form on the
// separable catalogue, O(n_cells) otherwise. The grid must extend at least
// two cells beyond sigma.
double survival_integral(const FiringCoefficient& s, double x,
                         const AgeGrid& grid);

// Unit-mass stationary density at frozen activity x. rescale (optional out)
// reports the factor applied on top of the analytic normalization; it is
// 1 + O(round-off) and serves as a discretization self-check.
AgeDensity stationary_profile(const FiringCoefficient& s, double x,
                              const AgeGrid& grid, double* rescale = nullptr);

// Boundary firing rate of the frozen-activity (linear) model at x:
// 1 / survival_integral.
double linear_stationary_rate(const FiringCoefficient& s, double x,
                              const AgeGrid& grid);

// Midpoint-quadrature firing rate of the unit-mass stationary profile at
// frozen activity x. This is the observable simulations record in traces, so
// convergence baselines use it rather than the boundary rate (the two agree
// to O(delta^2)).
double stationary_quadrature_rate(const FiringCoefficient& s, double x,
                                  const AgeGrid& grid);

// Smallest r with r * survival_integral(s, r, grid) = 1, the closed-model
// equilibrium rate (activity locked to the rate). Bracketed scan plus
// bisection; throws NonConvergence if the residual stays above residual_tol.
double solve_steady_state(const FiringCoefficient& s, const AgeGrid& grid,
                          double residual_tol = 1e-10);

// Equilibrium rate, activity and stationary density of the closed model.
Equilibrium solve_equilibrium(const FiringCoefficient& s, const AgeGrid& grid,
                              double residual_tol = 1e-10);

}  // namespace etm
