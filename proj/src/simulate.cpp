#include "etm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "etm/kernels.hpp"
#include "etm/steady.hpp"
#include "scheme.hpp"

namespace etm {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

std::int64_t snap_to_grid(double t, double dt, const char* what) {
  const auto k = static_cast<std::int64_t>(std::llround(t / dt));
  if (std::abs(t - static_cast<double>(k) * dt) >
      1e-9 * std::max(1.0, std::abs(t)))
    throw ValidationError(std::string(what) + " must be a multiple of dt");
  return k;
}

// Separable fast path: the active tail sum is independent of the activity, so
// fixed-point iterations cost O(1) after one O(n) pass.
struct RateEvaluator {
  const AgeDensity& n;
  const FiringCoefficient& s;
  bool separable;
  double tail_sum = 0;  // delta * sum of cells past sigma

  RateEvaluator(const AgeDensity& n_, const FiringCoefficient& s_)
      : n(n_), s(s_), separable(s_.separable()) {
    if (separable) {
      const auto i0 = static_cast<std::size_t>(std::min(
          scheme::first_active_cell(s.sigma(), n.grid), n.grid.n_cells));
      tail_sum = n.grid.delta *
                 kernels::sum(n.cells.data() + i0, n.cells.size() - i0);
    }
  }

  double operator()(double x) const {
    if (separable) return s.rate_factor(x) * tail_sum;
    return firing_rate(n, s, x);
  }
};

// X = coeff * rate(X) + base; coeff is small (dt/2 * alpha(0) or 1 for the
// instantaneous case with damping), so plain/damped iteration contracts.
template <class F>
double fixed_point(const F& f, double seed, double damping, double tol,
                   int max_iter, const char* what) {
  double x = seed;
  double res = 0;
  for (int i = 0; i < max_iter; ++i) {
    const double fx = f(x);
    if (!std::isfinite(fx))
      throw NumericalError(std::string(what) + ": non-finite iterate");
    res = std::abs(fx - x);
    x += damping * (fx - x);
    if (res <= tol * std::max(1.0, std::abs(x))) return f(x);
  }
  throw NonConvergence(std::string(what) + ": fixed point did not converge",
                       res);
}

}  // namespace

// ---------------------------------------------------------- ActivityTable

ActivityTable::ActivityTable(const DelayKernel& kernel, double dt) : dt_(dt) {
  require(std::isfinite(dt) && dt > 0, "activity: dt must be positive");
  require(kernel.kind() != DelayKernel::Kind::point_mass,
          "activity: point-mass kernel has no density; use discrete_delay");
  steps_ = static_cast<std::int64_t>(
      std::ceil(kernel.horizon() / dt - 1e-9));
  require(steps_ >= 2, "activity: dt too coarse for the kernel horizon");
  const auto size = static_cast<std::size_t>(steps_ + 1);
  lags_.resize(size);
  for (std::size_t m = 0; m < size; ++m) {
    lags_[m] = kernel.evaluate(static_cast<double>(m) * dt);
    require(std::isfinite(lags_[m]) && lags_[m] >= 0,
            "activity: kernel density must be finite and nonnegative");
  }
  rev_.assign(lags_.rbegin(), lags_.rend());
  tail_.resize(size);
  tail_[size - 1] = 0.5 * dt * lags_[size - 1];
  for (std::size_t j = size - 1; j-- > 0;)
    tail_[j] = tail_[j + 1] + dt * lags_[j];
  half_a0_ = 0.5 * dt * lags_[0];
  // Matches base() + endpoint term exactly on a flat series at n = 0, so a
  // system initialized at the anchor is stationary from the first step.
  weight_ = half_a0_ + tail_[1];
}

double ActivityTable::base(const std::vector<double>& rates, std::int64_t n,
                           const HistoryFunction& past) const {
  require(static_cast<std::int64_t>(rates.size()) == n,
          "activity: series length must equal the step index");
  const std::int64_t m_max = std::min(n, steps_);
  double acc = 0;
  if (m_max >= 1) {
    // sum_{m=1..m_max} alpha(m dt) r_{n-m}: contiguous in both arrays.
    acc = dt_ * kernels::dot(rev_.data() + (steps_ - m_max),
                             rates.data() + (n - m_max),
                             static_cast<std::size_t>(m_max));
    if (m_max == steps_)
      acc -= 0.5 * dt_ * lags_[static_cast<std::size_t>(steps_)] *
             rates[static_cast<std::size_t>(n - steps_)];
  }
  if (n < steps_) {
    if (const auto flat = past.constant_value()) {
      acc += *flat * tail_[static_cast<std::size_t>(n + 1)];
    } else {
      kernels::NeumaierSum ps;
      for (std::int64_t m = n + 1; m <= steps_; ++m) {
        const double w = m == steps_ ? 0.5 : 1.0;
        ps.add(w * lags_[static_cast<std::size_t>(m)] *
               past.past(static_cast<double>(n - m) * dt_));
      }
      acc += dt_ * ps.value();
    }
  }
  return acc;
}

// ------------------------------------------------------------ single steps

double firing_rate(const AgeDensity& n, const FiringCoefficient& s, double x) {
  if (!std::isfinite(x))
    throw NumericalError("firing_rate: non-finite activity");
  const RateEvaluator eval(n, s);
  if (eval.separable) return eval(x);
  kernels::NeumaierSum acc;
  for (std::size_t i = 0; i < n.cells.size(); ++i)
    acc.add(s(n.grid.midpoint(static_cast<std::int64_t>(i)), x) * n.cells[i]);
  return n.grid.delta * acc.value();
}

double step_transport(AgeDensity& n, const FiringCoefficient& s, double x) {
  if (!std::isfinite(x))
    throw NumericalError("transport: non-finite activity");
  auto& c = n.cells;
  const std::size_t size = c.size();
  double fired = 0;
  if (s.separable()) {
    const auto sl = scheme::slices(s, x, n.grid);
    if (sl.i0 > n.grid.n_cells - 2)
      throw ValidationError("transport: grid must extend beyond sigma");
    const auto i0 = static_cast<std::size_t>(sl.i0);
    const double pre = kernels::scale_sum(c.data() + i0, size - i0, sl.full);
    fired = pre * (1.0 - sl.full);
    if (i0 > 0) {
      const double straddle = c[i0 - 1];
      c[i0 - 1] = straddle * sl.half;
      fired += straddle * (1.0 - sl.half);
    }
  } else {
    thread_local std::vector<double> f;
    scheme::decay_factors(s, x, n.grid, f);
    fired = kernels::decay_with_factors(c.data(), f.data(), size);
  }
  const double absorbed = c[size - 1];
  std::memmove(c.data() + 1, c.data(), (size - 1) * sizeof(double));
  c[size - 1] += absorbed;
  c[0] = fired;
  return fired;
}

double solve_instantaneous_rate(const AgeDensity& n,
                                const FiringCoefficient& s, double tol,
                                int max_iter) {
  const RateEvaluator eval(n, s);
  return fixed_point(eval, eval(0.0), 0.5, tol, max_iter, "instantaneous");
}

// -------------------------------------------------------------- simulation

SimResult simulate(const FiringCoefficient& s, const AgeDensity& initial,
                   const HistoryFunction& history, const SimConfig& cfg) {
  const AgeGrid& g = initial.grid;
  const double dt = g.delta;
  require(std::abs(history.dt() - dt) <= 1e-12 * dt,
          "simulate: history dt must equal the mesh delta");
  require(history.computed().empty(),
          "simulate: history must hold only the prescribed past");
  require(std::isfinite(cfg.t_end) && cfg.t_end > 0,
          "simulate: t_end must be positive");
  const std::int64_t total = snap_to_grid(cfg.t_end, dt, "simulate: t_end");
  require(total >= 1, "simulate: t_end must cover at least one step");
  require(cfg.record_every >= 1, "simulate: record_every must be >= 1");
  for (double c : initial.cells)
    require(c >= 0, "simulate: initial density must be nonnegative");
  if (cfg.tv_reference)
    require(cfg.tv_reference->grid == g,
            "simulate: tv reference must share the mesh");

  std::int64_t lag_steps = 0;
  std::optional<ActivityTable> table;
  switch (cfg.interaction) {
    case Interaction::instantaneous:
      require(!cfg.kernel && !cfg.frozen_activity,
              "simulate: instantaneous interaction takes no kernel/activity");
      break;
    case Interaction::discrete_delay: {
      require(cfg.kernel.has_value() &&
                  cfg.kernel->kind() == DelayKernel::Kind::point_mass,
              "simulate: discrete delay requires a point-mass kernel");
      lag_steps = snap_to_grid(cfg.kernel->delay(), dt, "simulate: delay");
      require(lag_steps >= 1, "simulate: delay must be at least one step");
      break;
    }
    case Interaction::distributed:
      require(cfg.kernel.has_value(),
              "simulate: distributed interaction requires a kernel");
      table.emplace(*cfg.kernel, dt);
      break;
    case Interaction::linear_frozen:
      require(cfg.frozen_activity.has_value() &&
                  std::isfinite(*cfg.frozen_activity) &&
                  *cfg.frozen_activity >= 0,
              "simulate: frozen activity must be finite and nonnegative");
      break;
  }

  SimResult out;
  out.dt = dt;
  out.rates.reserve(static_cast<std::size_t>(total) + 1);
  out.trace.reserve(static_cast<std::size_t>(total / cfg.record_every) + 2);
  AgeDensity state = initial;
  double prev_x = 0;

  for (std::int64_t k = 0; k <= total; ++k) {
    const double t = static_cast<double>(k) * dt;
    const RateEvaluator eval(state, s);
    double x = 0, r = 0;
    switch (cfg.interaction) {
      case Interaction::instantaneous:
        x = fixed_point(eval, eval(0.0), 0.5, cfg.fixed_point_tol,
                        cfg.fixed_point_max_iter, "instantaneous");
        r = x;
        break;
      case Interaction::discrete_delay:
        x = k >= lag_steps
                ? out.rates[static_cast<std::size_t>(k - lag_steps)]
                : history.past(static_cast<double>(k - lag_steps) * dt);
        r = eval(x);
        break;
      case Interaction::distributed: {
        const double coeff = table->endpoint_coeff();
        const double base = table->base(out.rates, k, history);
        x = fixed_point([&](double v) { return coeff * eval(v) + base; },
                        k == 0 ? base : prev_x, 1.0, cfg.fixed_point_tol,
                        cfg.fixed_point_max_iter, "distributed activity");
        r = eval(x);
        break;
      }
      case Interaction::linear_frozen:
        x = *cfg.frozen_activity;
        r = eval(x);
        break;
    }
    if (!std::isfinite(r) || r < 0)
      throw NumericalError("simulate: firing rate left [0, inf)");
    out.rates.push_back(r);
    prev_x = x;
    if (k % cfg.record_every == 0 || k == total) {
      TraceRow row;
      row.t = t;
      row.r = r;
      row.x = x;
      row.mass = state.mass();
      if (!std::isfinite(row.mass))
        throw NumericalError("simulate: non-finite mass");
      row.tv = cfg.tv_reference
                   ? g.delta * kernels::l1_distance(
                                   state.cells.data(),
                                   cfg.tv_reference->cells.data(),
                                   state.cells.size())
                   : 0.0;
      out.trace.push_back(row);
    }
    if (k < total) step_transport(state, s, x);
  }
  out.final_density = std::move(state);
  return out;
}

DiscreteAnchor discrete_anchor(const FiringCoefficient& s, const AgeGrid& g,
                               double activity_weight) {
  require(std::isfinite(activity_weight) && activity_weight > 0,
          "anchor: activity weight must be positive");
  const auto gap = [&](double r) {
    return stationary_quadrature_rate(s, activity_weight * r, g) - r;
  };
  double lo = 0.0, hi = 2.0 * s.sup_norm() + 1.0;
  double g_lo = gap(lo), g_hi = gap(hi);
  if (!(g_lo >= 0 && g_hi <= 0))
    throw NonConvergence("anchor: stationary rate not bracketed", g_hi);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = gap(mid);
    if (v >= 0) {
      lo = mid;
      g_lo = v;
    } else {
      hi = mid;
      g_hi = v;
    }
  }
  const double r = g_lo <= -g_hi ? lo : hi;
  const double residual = std::min(g_lo, -g_hi);
  if (!(residual <= 1e-10))
    throw NonConvergence("anchor: stationary rate residual above tolerance",
                         residual);
  return {r, activity_weight * r};
}

}  // namespace etm
