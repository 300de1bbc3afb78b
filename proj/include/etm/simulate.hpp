#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "etm/model.hpp"

namespace etm {

enum class Interaction {
  instantaneous,   // X(t) = r(t), solved self-consistently each step
  discrete_delay,  // X(t) = r(t - d), point-mass kernel
  distributed,     // X(t) = int alpha(s) r(t - s) ds
  linear_frozen,   // X(t) held at a constant
};

// Interaction kernel tabulated on the step grid. The activity is a trapezoid
// rule over the computed series; the prescribed past enters through exact
// tail weights (constant past) or direct quadrature. The s = 0 endpoint
// carries weight endpoint_coeff() on the still-unknown current rate, so the
// caller solves X = endpoint_coeff() * rate(X) + base(...).
class ActivityTable {
 public:
  ActivityTable(const DelayKernel& kernel, double dt);

  std::int64_t steps() const { return steps_; }
  double dt() const { return dt_; }
  // Activity seen by a flat series: the discrete stand-in for int alpha = 1.
  double anchor_weight() const { return weight_; }
  double endpoint_coeff() const { return half_a0_; }

  // Contribution of r_0..r_{n-1} (rates.size() == n) plus the past.
  double base(const std::vector<double>& rates, std::int64_t n,
              const HistoryFunction& past) const;

 private:
  std::vector<double> lags_;  // alpha(m dt), m = 0..steps
  std::vector<double> rev_;   // lags_ reversed, for contiguous dot products
  std::vector<double> tail_;  // trapezoid tail weights from index j onward
  double dt_ = 0, weight_ = 0, half_a0_ = 0;
  std::int64_t steps_ = 0;
};

struct SimConfig {
  Interaction interaction = Interaction::instantaneous;
  double t_end = 0;
  std::int64_t record_every = 1;
  std::optional<DelayKernel> kernel;       // delay interactions only
  std::optional<double> frozen_activity;   // linear_frozen only
  double fixed_point_tol = 1e-12;
  int fixed_point_max_iter = 10000;
  std::optional<AgeDensity> tv_reference;  // density the tv column compares to
};

struct TraceRow {
  double t = 0, r = 0, x = 0, mass = 0, tv = 0;
};

struct SimResult {
  std::vector<TraceRow> trace;  // every record_every steps, plus the last
  AgeDensity final_density;
  std::vector<double> rates;  // r_k for every step k = 0..t_end/dt
  double dt = 0;
};

// Midpoint-rule firing rate of the density at activity x.
double firing_rate(const AgeDensity& n, const FiringCoefficient& s, double x);

// One conservative transport step at activity x (dt == grid.delta): decay
// along characteristics, shift one cell (the last absorbs), refill the
// boundary cell with fired mass / delta. Returns fired mass / dt.
double step_transport(AgeDensity& n, const FiringCoefficient& s, double x);

// Self-consistent rate of the instantaneous interaction, X = firing_rate(X),
// by damped fixed-point iteration seeded at zero activity.
double solve_instantaneous_rate(const AgeDensity& n,
                                const FiringCoefficient& s, double tol = 1e-12,
                                int max_iter = 10000);

// March the model from `initial` with prescribed past `history` (its computed
// series must be empty; dt is tied to the mesh, dt == grid.delta).
SimResult simulate(const FiringCoefficient& s, const AgeDensity& initial,
                   const HistoryFunction& history, const SimConfig& cfg);

// Stationary rate/activity pair of the time-discrete system, defined through
// the recorded observable: r = stationary_quadrature_rate(w r). Decay fits
// measure distance to this anchor rather than to the continuum equilibrium,
// which would plateau at the quadrature bias. activity_weight is 1 for the
// instantaneous and discrete-delay interactions, ActivityTable::anchor_weight
// for distributed ones.
struct DiscreteAnchor {
  double r = 0, x = 0;
};
DiscreteAnchor discrete_anchor(const FiringCoefficient& s, const AgeGrid& grid,
                               double activity_weight = 1.0);

}  // namespace etm
