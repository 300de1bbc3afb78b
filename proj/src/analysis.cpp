#include "etm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <random>

#include <json.hpp>

#include "etm/errors.hpp"
#include "etm/simulate.hpp"
#include "etm/steady.hpp"

namespace etm {

namespace {

constexpr double kNoiseFloor = 1e-14;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

struct LineFit {
  double slope = 0, intercept = 0, r2 = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0, "decay fit: all samples share one abscissa");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (syy > 0) {
    double ssr = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (out.intercept + out.slope * x[i]);
      ssr += e * e;
    }
    out.r2 = std::max(0.0, 1.0 - ssr / syy);
  } else {
    out.r2 = 1.0;
  }
  return out;
}

}  // namespace

double tv_distance(const AgeDensity& p, const AgeDensity& q) {
  require(p.grid == q.grid && p.cells.size() == q.cells.size(),
          "tv distance: densities must share one grid");
  double acc = 0;
  for (std::size_t i = 0; i < p.cells.size(); ++i)
    acc += std::abs(p.cells[i] - q.cells[i]);
  return acc * p.grid.delta;
}

RateFit fit_decay(const std::vector<double>& t, const std::vector<double>& v,
                  FitKind kind, double t_lo, double t_hi) {
  require(t.size() == v.size(), "decay fit: t and v must pair up");
  require(std::isfinite(t_lo) && std::isfinite(t_hi) && t_lo < t_hi,
          "decay fit: window must satisfy t_lo < t_hi");

  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(std::isfinite(t[i]) && std::isfinite(v[i]),
            "decay fit: samples must be finite");
    if (t[i] < t_lo || t[i] > t_hi) continue;
    if (v[i] <= kNoiseFloor) continue;
    x.push_back(kind == FitKind::exponential ? t[i] : std::log1p(t[i]));
    y.push_back(std::log(v[i]));
  }
  if (x.size() < 10)
    throw InsufficientData("decay fit: fewer than 10 usable samples in [" +
                           std::to_string(t_lo) + ", " + std::to_string(t_hi) +
                           "]");

  const LineFit line = fit_line(x, y);
  RateFit out;
  out.kind = kind;
  out.rate = -line.slope;
  out.amplitude = std::exp(line.intercept);
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  out.r_squared = line.r2;
  out.points = static_cast<std::int64_t>(x.size());
  return out;
}

LinearGapReport measure_linear_gap(const FiringCoefficient& s, double r_bar,
                                   const AgeGrid& grid, double t_end,
                                   std::int64_t probes, std::uint64_t seed) {
  require(probes >= 3, "gap measurement: need at least 3 probes");
  require(std::isfinite(r_bar) && r_bar >= 0,
          "gap measurement: frozen activity must be finite and nonnegative");
  require(std::isfinite(t_end) && t_end > 0,
          "gap measurement: t_end must be positive");

  const AgeDensity stationary = stationary_profile(s, r_bar, grid);

  // All initial data are drawn up front from one seeded stream, so the
  // report does not depend on how the marches are scheduled.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  std::vector<AgeDensity> initials;
  for (std::int64_t p = 0; p < probes; ++p) {
    std::vector<double> cells(static_cast<std::size_t>(grid.n_cells));
    for (double& c : cells) c = unit(rng);
    AgeDensity d(grid, std::move(cells));
    d.normalize();
    initials.push_back(std::move(d));
  }
  initials.push_back(stationary);  // control probe: must come back excluded

  SimConfig cfg;
  cfg.interaction = Interaction::linear_frozen;
  cfg.t_end = t_end;
  cfg.frozen_activity = r_bar;
  cfg.tv_reference = stationary;
  const HistoryFunction past =
      HistoryFunction::constant_past(0.0, grid.delta);

  std::vector<std::future<SimResult>> runs;
  runs.reserve(initials.size());
  for (const AgeDensity& d : initials)
    runs.push_back(std::async(std::launch::async, [&s, &d, &past, &cfg] {
      return simulate(s, d, past, cfg);
    }));

  LinearGapReport report;
  std::vector<std::vector<double>> ts(initials.size()), tvs(initials.size());
  const double window_lo = 0.1 * t_end;
  for (std::size_t i = 0; i < initials.size(); ++i) {
    const SimResult run = runs[i].get();
    ProbeReport probe;
    probe.index = static_cast<std::int64_t>(i);
    probe.tv0 = run.trace.front().tv;
    double peak = 0;
    for (const TraceRow& row : run.trace) {
      ts[i].push_back(row.t);
      tvs[i].push_back(row.tv);
      peak = std::max(peak, row.tv);
    }
    if (peak <= kNoiseFloor) {
      probe.excluded = true;  // nothing above round-off to fit
    } else {
      const RateFit fit =
          fit_decay(ts[i], tvs[i], FitKind::exponential, window_lo, t_end);
      probe.rate = fit.rate;
      probe.r_squared = fit.r_squared;
    }
    report.probes.push_back(probe);
  }

  // The gap bound must hold uniformly over initial data, so the slowest
  // probe wins; c0 then absorbs every probe's worst transient.
  bool any = false;
  for (const ProbeReport& probe : report.probes) {
    if (probe.excluded) continue;
    report.lambda_hat =
        any ? std::min(report.lambda_hat, probe.rate) : probe.rate;
    any = true;
  }
  if (!any)
    throw InsufficientData("gap measurement: every probe sat at the floor");

  for (std::size_t i = 0; i < report.probes.size(); ++i) {
    ProbeReport& probe = report.probes[i];
    if (probe.excluded) continue;
    double ratio = 0;
    for (std::size_t j = 0; j < ts[i].size(); ++j) {
      if (tvs[i][j] <= kNoiseFloor) continue;
      ratio = std::max(
          ratio, tvs[i][j] * std::exp(report.lambda_hat * ts[i][j]) /
                     probe.tv0);
    }
    probe.amplitude_ratio = ratio;
    report.c0_hat = std::max(report.c0_hat, ratio);
  }
  return report;
}

std::string RateFit::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == FitKind::exponential ? "exponential" : "algebraic";
  j["rate"] = rate;
  j["amplitude"] = amplitude;
  j["window"] = {{"t_lo", t_lo}, {"t_hi", t_hi}};
  j["r_squared"] = r_squared;
  j["points"] = points;
  return j.dump(2);
}

std::string LinearGapReport::to_json() const {
  nlohmann::json j;
  j["lambda_hat"] = lambda_hat;
  j["c0_hat"] = c0_hat;
  j["probes"] = nlohmann::json::array();
  for (const ProbeReport& p : probes) {
    nlohmann::json q;
    q["index"] = p.index;
    q["tv0"] = p.tv0;
    q["excluded"] = p.excluded;
    if (!p.excluded) {
      q["rate"] = p.rate;
      q["r_squared"] = p.r_squared;
      q["amplitude_ratio"] = p.amplitude_ratio;
    }
    j["probes"].push_back(q);
  }
  return j.dump(2);
}

}  // namespace etm
