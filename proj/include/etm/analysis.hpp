#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "etm/model.hpp"

namespace etm {

// Total variation distance between cell-averaged densities on a shared grid:
// sum_i |p_i - q_i| * delta, the full L1 mass difference. Convention: two
// disjoint unit-mass densities are at distance 2, not 1. Throws
// ValidationError when the grids differ.
double tv_distance(const AgeDensity& p, const AgeDensity& q);

enum class FitKind { exponential, algebraic };

// Measured decay law: v(t) ~ amplitude * exp(-rate t) (exponential) or
// amplitude / (1 + t)^rate (algebraic), least-squares fitted on the given
// window. points counts the samples that survived the noise floor.
struct RateFit {
  FitKind kind = FitKind::exponential;
  double rate = 0.0;
  double amplitude = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  double r_squared = 0.0;
  std::int64_t points = 0;

  std::string to_json() const;
};

// Least squares on (t, log v) for the exponential kind (rate = -slope) and on
// (log(1+t), log v) for the algebraic kind (rate = -slope). Only samples with
// t inside [t_lo, t_hi] and v above the 1e-14 noise floor enter the fit;
// double-precision tv series plateau near round-off and would bias the slope.
// Throws InsufficientData when fewer than 10 usable samples remain.
RateFit fit_decay(const std::vector<double>& t, const std::vector<double>& v,
                  FitKind kind, double t_lo, double t_hi);

struct ProbeReport {
  std::int64_t index = 0;
  double tv0 = 0.0;              // initial distance to the stationary profile
  double rate = 0.0;             // fitted exponential rate (0 when excluded)
  double r_squared = 0.0;        // fit quality (0 when excluded)
  double amplitude_ratio = 0.0;  // sup_t tv(t) e^{lambda_hat t} / tv(0)
  bool excluded = false;         // tv never rose above the noise floor
};

struct LinearGapReport {
  double lambda_hat = 0.0;  // slowest fitted rate over the included probes
  double c0_hat = 0.0;      // largest amplitude ratio over the included probes
  std::vector<ProbeReport> probes;

  std::string to_json() const;
};

// Measures the spectral gap of the frozen-activity (linear) flow at activity
// r_bar: marches `probes` seeded random probability initial data to t_end,
// fits an exponential rate to each tv series against the stationary profile
// on the window [0.1 t_end, t_end], and reports the slowest rate as
// lambda_hat with c0_hat = max over probes of sup_t tv(t) e^{lambda_hat t} /
// tv(0). The slowest probe governs because the bound must hold uniformly over
// initial data. The stationary profile itself is appended as a control probe;
// it must come back excluded (its tv series sits at the noise floor), so
// report.probes has probes + 1 entries. Probe marches run in parallel; the
// result is deterministic for a fixed seed. Requires probes >= 3.
LinearGapReport measure_linear_gap(const FiringCoefficient& s, double r_bar,
                                   const AgeGrid& grid, double t_end,
                                   std::int64_t probes, std::uint64_t seed = 1);

}  // namespace etm
