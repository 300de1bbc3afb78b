#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "etm/errors.hpp"

namespace etm {

// Uniform age mesh on [0, a_max] with a_max = n_cells * delta by construction.
struct AgeGrid {
  double delta = 0;
  std::int64_t n_cells = 0;

  AgeGrid() = default;
  AgeGrid(double delta_, std::int64_t n_cells_);

  double a_max() const { return static_cast<double>(n_cells) * delta; }
  double midpoint(std::int64_t i) const {
    return (static_cast<double>(i) + 0.5) * delta;
  }
  bool operator==(const AgeGrid&) const = default;

  // Smallest grid with a_max >= extent (extent rounded up to a whole cell).
  static AgeGrid covering(double delta, double extent);
};

// Cell-averaged nonnegative density on an AgeGrid.
struct AgeDensity {
  AgeGrid grid;
  std::vector<double> cells;

  AgeDensity() = default;
  explicit AgeDensity(const AgeGrid& g) : grid(g), cells(g.n_cells, 0.0) {}
  AgeDensity(const AgeGrid& g, std::vector<double> values);

  double mass() const;
  void normalize();  // rescale to unit mass; throws on zero/negative mass
};

// Hazard S(a, X): bounded, measurable in a, globally Lipschitz in X, and
// bounded below by s0 for a > sigma. Every catalogue member is separable,
// S(a, X) = rate_factor(X) * [a > sigma], which the solvers exploit; custom
// coefficients fall back to the generic per-cell path.
class FiringCoefficient {
 public:
  double operator()(double a, double x) const { return eval_(a, x); }

  double lipschitz_ell() const { return ell_; }
  double sup_norm() const { return sup_; }
  double s0() const { return s0_; }
  double sigma() const { return sigma_; }

  bool separable() const { return static_cast<bool>(rate_factor_); }
  // Only valid when separable(): S(a, X) = rate_factor(X) * [a > sigma].
  double rate_factor(double x) const { return rate_factor_(x); }

  // a_max such that exp(-s0 * (a_max - sigma)) <= tail, i.e. the equilibrium
  // tail beyond the mesh is negligible.
  double suggested_extent(double tail = 1e-12) const;

  std::string describe() const { return describe_; }

  // S = s0 for every age and activity.
  static FiringCoefficient constant(double s0);
  // S = [a > sigma].
  static FiringCoefficient step(double sigma);
  // S = (base + ell_scale * X / (1 + X)) * [a > sigma].
  static FiringCoefficient step_sigmoid(double sigma, double base,
                                        double ell_scale);
  // S = (base + slope * min(X, x_cap)) * [a > sigma].
  static FiringCoefficient step_linear(double sigma, double base, double slope,
                                       double x_cap);
  // Arbitrary hazard with caller-supplied bounds (test/extension hook).
  static FiringCoefficient custom(std::function<double(double, double)> eval,
                                  double ell, double sup, double s0,
                                  double sigma, std::string describe);

 private:
  FiringCoefficient() = default;

  std::function<double(double, double)> eval_;
  std::function<double(double)> rate_factor_;  // empty if not separable
  double ell_ = 0, sup_ = 0, s0_ = 0, sigma_ = 0;
  std::string describe_;
};

// Interaction kernel alpha >= 0 with unit mass, truncated at `horizon` where
// the tail integral is at most tail_tol. PointMass is the exact-lag case and
// has no density.
class DelayKernel {
 public:
  enum class Kind { point_mass, exponential, algebraic, tabulated };

  Kind kind() const { return kind_; }
  double delay() const { return delay_; }  // point_mass only
  double horizon() const { return horizon_; }
  double tail_tol() const { return tail_tol_; }
  double c_alpha() const { return c_alpha_; }
  double beta() const { return beta_; }

  // Density value at lag s >= 0; invalid for point_mass.
  double evaluate(double s) const;

  static DelayKernel point_mass(double d);
  // alpha(s) = beta * exp(-beta s); bound constants (c_alpha, beta).
  static DelayKernel exponential(double beta, double tail_tol = 1e-6);
  // alpha(s) = (beta - 1) / (1 + s)^beta, beta > 1; bound (beta - 1, beta).
  static DelayKernel algebraic(double beta, double tail_tol = 1e-6);
  // Caller-supplied density; normalization over [0, horizon] is verified.
  static DelayKernel tabulated(std::function<double(double)> density,
                               double horizon, double tail_tol = 1e-6);

 private:
  DelayKernel() = default;
  void check_normalization() const;

  Kind kind_ = Kind::point_mass;
  double delay_ = 0;
  double horizon_ = 0;
  double tail_tol_ = 0;
  double c_alpha_ = 0;
  double beta_ = 0;
  std::function<double(double)> density_;
};

// Firing-rate history: a prescribed past on t < 0 plus the computed series at
// t = 0, dt, 2dt, ... (append-only, uniform spacing).
class HistoryFunction {
 public:
  HistoryFunction(std::function<double(double)> past, double sup_bound,
                  double dt);

  // Constant past r(t) = value for t < 0.
  static HistoryFunction constant_past(double value, double dt);
  // Piecewise-linear past through (t_i <= 0, r_i), constant beyond the ends.
  static HistoryFunction tabulated_past(std::vector<double> t,
                                        std::vector<double> r, double dt);

  double dt() const { return dt_; }
  double sup_bound() const { return sup_bound_; }
  // Set when the past is a single constant; lets activity quadratures use
  // exact tail weights instead of per-step integration.
  std::optional<double> constant_value() const { return constant_; }
  const std::vector<double>& computed() const { return computed_; }
  // Largest time covered by the computed series; -dt when empty.
  double computed_end() const {
    return (static_cast<double>(computed_.size()) - 1.0) * dt_;
  }

  void append(double r);

  double past(double t) const;  // t < 0
  // Exact lookup: computed sample for t >= 0 (t must sit on the grid within
  // rounding), past(t) for t < 0.
  double lookup(double t) const;

 private:
  std::function<double(double)> past_;
  double sup_bound_ = 0;
  double dt_ = 0;
  std::optional<double> constant_;
  std::vector<double> computed_;
};

// Stationary state of the closed (nonlinear) model: x_star = r_star and the
// density is the exact fixed point of one transport step at that activity.
struct Equilibrium {
  double r_star = 0;
  double x_star = 0;
  AgeDensity density;
  // Factor applied to reach unit mass; 1 + O(delta^2) for consistent grids.
  double rescale_factor = 1;
};

// CSV round-trip for densities ("a_mid,n", 17 significant digits).
void write_density_csv(std::ostream& out, const AgeDensity& d);
AgeDensity read_density_csv(std::istream& in);

}  // namespace etm
