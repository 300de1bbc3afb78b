#include "etm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include "etm/kernels.hpp"

namespace etm {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

// ---------------------------------------------------------------- AgeGrid

AgeGrid::AgeGrid(double delta_, std::int64_t n_cells_)
    : delta(delta_), n_cells(n_cells_) {
  require(finite(delta) && delta > 0, "AgeGrid: delta must be positive");
  require(n_cells > 0, "AgeGrid: n_cells must be positive");
}

AgeGrid AgeGrid::covering(double delta, double extent) {
  require(finite(delta) && delta > 0, "AgeGrid: delta must be positive");
  require(finite(extent) && extent > 0, "AgeGrid: extent must be positive");
  auto n = static_cast<std::int64_t>(std::ceil(extent / delta - 1e-9));
  if (n < 1) n = 1;
  while (static_cast<double>(n) * delta < extent) ++n;
  return AgeGrid(delta, n);
}

// ------------------------------------------------------------- AgeDensity

AgeDensity::AgeDensity(const AgeGrid& g, std::vector<double> values)
    : grid(g), cells(std::move(values)) {
  require(static_cast<std::int64_t>(cells.size()) == g.n_cells,
          "AgeDensity: cell count does not match grid");
  for (double c : cells)
    require(finite(c), "AgeDensity: non-finite cell value");
}

double AgeDensity::mass() const {
  return kernels::sum(cells.data(), cells.size()) * grid.delta;
}

void AgeDensity::normalize() {
  const double m = mass();
  require(finite(m) && m > 0, "AgeDensity: cannot normalize non-positive mass");
  const double inv = 1.0 / m;
  for (double& c : cells) c *= inv;
}

// ------------------------------------------------------ FiringCoefficient

double FiringCoefficient::suggested_extent(double tail) const {
  return sigma_ + std::log(1.0 / tail) / s0_;
}

FiringCoefficient FiringCoefficient::constant(double s0) {
  require(finite(s0) && s0 > 0, "coefficient: s0 must be positive");
  FiringCoefficient c;
  c.rate_factor_ = [s0](double) { return s0; };
  c.eval_ = [s0](double a, double) { return a > 0 ? s0 : 0.0; };
  c.ell_ = 0;
  c.sup_ = s0;
  c.s0_ = s0;
  c.sigma_ = 0;
  c.describe_ = "constant";
  return c;
}

FiringCoefficient FiringCoefficient::step(double sigma) {
  require(finite(sigma) && sigma >= 0, "coefficient: sigma must be >= 0");
  FiringCoefficient c;
  c.rate_factor_ = [](double) { return 1.0; };
  c.eval_ = [sigma](double a, double) { return a > sigma ? 1.0 : 0.0; };
  c.ell_ = 0;
  c.sup_ = 1;
  c.s0_ = 1;
  c.sigma_ = sigma;
  c.describe_ = "step";
  return c;
}

FiringCoefficient FiringCoefficient::step_sigmoid(double sigma, double base,
                                                  double ell_scale) {
  require(finite(sigma) && sigma >= 0, "coefficient: sigma must be >= 0");
  require(finite(base) && base > 0, "coefficient: base must be positive");
  require(finite(ell_scale) && ell_scale >= 0,
          "coefficient: ell_scale must be >= 0");
  auto phi = [base, ell_scale](double x) {
    const double xp = std::max(x, 0.0);
    return base + ell_scale * xp / (1.0 + xp);
  };
  FiringCoefficient c;
  c.rate_factor_ = phi;
  c.eval_ = [sigma, phi](double a, double x) {
    return a > sigma ? phi(x) : 0.0;
  };
  c.ell_ = ell_scale;  // sup |d/dx (x/(1+x))| = 1 at x = 0
  c.sup_ = base + ell_scale;
  c.s0_ = base;
  c.sigma_ = sigma;
  c.describe_ = "step_sigmoid";
  return c;
}

FiringCoefficient FiringCoefficient::step_linear(double sigma, double base,
                                                 double slope, double x_cap) {
  require(finite(sigma) && sigma >= 0, "coefficient: sigma must be >= 0");
  require(finite(base) && base > 0, "coefficient: base must be positive");
  require(finite(slope) && slope >= 0, "coefficient: slope must be >= 0");
  require(finite(x_cap) && x_cap > 0, "coefficient: x_cap must be positive");
  auto phi = [base, slope, x_cap](double x) {
    return base + slope * std::clamp(x, 0.0, x_cap);
  };
  FiringCoefficient c;
  c.rate_factor_ = phi;
  c.eval_ = [sigma, phi](double a, double x) {
    return a > sigma ? phi(x) : 0.0;
  };
  c.ell_ = slope;
  c.sup_ = base + slope * x_cap;
  c.s0_ = base;
  c.sigma_ = sigma;
  c.describe_ = "step_linear";
  return c;
}

FiringCoefficient FiringCoefficient::custom(
    std::function<double(double, double)> eval, double ell, double sup,
    double s0, double sigma, std::string describe) {
  require(static_cast<bool>(eval), "coefficient: evaluate must be callable");
  require(finite(ell) && ell >= 0, "coefficient: ell must be >= 0");
  require(finite(sup) && sup > 0, "coefficient: sup_norm must be positive");
  require(finite(s0) && s0 > 0, "coefficient: s0 must be positive");
  require(finite(sigma) && sigma >= 0, "coefficient: sigma must be >= 0");
  FiringCoefficient c;
  c.eval_ = std::move(eval);
  c.ell_ = ell;
  c.sup_ = sup;
  c.s0_ = s0;
  c.sigma_ = sigma;
  c.describe_ = std::move(describe);
  return c;
}

// ------------------------------------------------------------ DelayKernel

double DelayKernel::evaluate(double s) const {
  require(kind_ != Kind::point_mass,
          "kernel: point-mass kernel has no density");
  if (s < 0) return 0;
  return density_(s);
}

DelayKernel DelayKernel::point_mass(double d) {
  require(finite(d) && d > 0, "kernel: delay must be positive");
  DelayKernel k;
  k.kind_ = Kind::point_mass;
  k.delay_ = d;
  k.horizon_ = d;
  return k;
}

DelayKernel DelayKernel::exponential(double beta, double tail_tol) {
  require(finite(beta) && beta > 0, "kernel: beta must be positive");
  require(finite(tail_tol) && tail_tol > 0 && tail_tol < 1,
          "kernel: tail_tol must be in (0, 1)");
  DelayKernel k;
  k.kind_ = Kind::exponential;
  k.beta_ = beta;
  k.c_alpha_ = beta;  // alpha(s) = beta e^{-beta s} <= c_alpha e^{-beta s}
  k.tail_tol_ = tail_tol;
  k.horizon_ = std::log(k.c_alpha_ / (beta * tail_tol)) / beta;
  k.density_ = [beta](double s) { return beta * std::exp(-beta * s); };
  k.check_normalization();
  return k;
}

DelayKernel DelayKernel::algebraic(double beta, double tail_tol) {
  require(finite(beta) && beta > 1, "kernel: algebraic beta must exceed 1");
  require(finite(tail_tol) && tail_tol > 0 && tail_tol < 1,
          "kernel: tail_tol must be in (0, 1)");
  DelayKernel k;
  k.kind_ = Kind::algebraic;
  k.beta_ = beta;
  k.c_alpha_ = beta - 1;  // (b-1)/(1+s)^b <= (b-1)/(1+s^b)
  k.tail_tol_ = tail_tol;
  k.horizon_ = std::pow(k.c_alpha_ / ((beta - 1) * tail_tol), 1.0 / (beta - 1));
  k.density_ = [beta](double s) {
    return (beta - 1) * std::pow(1.0 + s, -beta);
  };
  k.check_normalization();
  return k;
}

DelayKernel DelayKernel::tabulated(std::function<double(double)> density,
                                   double horizon, double tail_tol) {
  require(static_cast<bool>(density), "kernel: density must be callable");
  require(finite(horizon) && horizon > 0, "kernel: horizon must be positive");
  require(finite(tail_tol) && tail_tol > 0 && tail_tol < 1,
          "kernel: tail_tol must be in (0, 1)");
  DelayKernel k;
  k.kind_ = Kind::tabulated;
  k.tail_tol_ = tail_tol;
  k.horizon_ = horizon;
  k.density_ = std::move(density);
  k.check_normalization();
  return k;
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double eps,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m));
  const double frm = f(0.5 * (m + b));
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double eps) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, eps, 48);
}

}  // namespace

void DelayKernel::check_normalization() const {
  // Truncated mass of a unit kernel must land in [1 - tail_tol, 1]. A
  // geometric initial partition keeps the adaptive quadrature sharp on
  // heavy-tailed densities whose horizon can run to 1e6 and beyond.
  std::vector<double> pts{0.0};
  for (double p = std::min(1.0, horizon_); p < horizon_; p *= 2.0)
    pts.push_back(p);
  pts.push_back(horizon_);
  const double eps = 1e-11;
  double integral = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    integral += adaptive_simpson(density_, pts[i], pts[i + 1], eps);
  require(integral >= 1.0 - tail_tol_ - 1e-9 && integral <= 1.0 + 1e-9,
          "kernel: density is not normalized over [0, horizon]");
}

// -------------------------------------------------------- HistoryFunction

HistoryFunction::HistoryFunction(std::function<double(double)> past,
                                 double sup_bound, double dt)
    : past_(std::move(past)), sup_bound_(sup_bound), dt_(dt) {
  require(static_cast<bool>(past_), "history: past must be callable");
  require(finite(sup_bound) && sup_bound >= 0,
          "history: sup_bound must be finite and >= 0");
  require(finite(dt) && dt > 0, "history: dt must be positive");
}

HistoryFunction HistoryFunction::constant_past(double value, double dt) {
  require(finite(value) && value >= 0, "history: past value must be >= 0");
  HistoryFunction h([value](double) { return value; }, value, dt);
  h.constant_ = value;
  return h;
}

HistoryFunction HistoryFunction::tabulated_past(std::vector<double> t,
                                                std::vector<double> r,
                                                double dt) {
  require(t.size() == r.size() && !t.empty(),
          "history: tabulated past needs matching non-empty t and r");
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(finite(t[i]) && t[i] <= 0, "history: past times must be <= 0");
    require(finite(r[i]) && r[i] >= 0, "history: past values must be >= 0");
    if (i > 0)
      require(t[i] > t[i - 1], "history: past times must be increasing");
  }
  const double sup = *std::max_element(r.begin(), r.end());
  auto fn = [t = std::move(t), r = std::move(r)](double s) {
    if (s <= t.front()) return r.front();
    if (s >= t.back()) return r.back();
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    const double w = (s - t[j - 1]) / (t[j] - t[j - 1]);
    return r[j - 1] + w * (r[j] - r[j - 1]);
  };
  return HistoryFunction(std::move(fn), sup, dt);
}

void HistoryFunction::append(double r) {
  if (!finite(r)) throw NumericalError("history: non-finite rate appended");
  computed_.push_back(r);
}

double HistoryFunction::past(double t) const {
  require(t < 0, "history: past() requires t < 0");
  return past_(t);
}

double HistoryFunction::lookup(double t) const {
  if (t < 0) return past_(t);
  const auto k = static_cast<std::int64_t>(std::llround(t / dt_));
  if (std::abs(t - static_cast<double>(k) * dt_) >
      1e-9 * std::max(1.0, std::abs(t)))
    throw HistoryGap("history: lookup time is off the sample grid");
  if (k >= static_cast<std::int64_t>(computed_.size()))
    throw HistoryGap("history: lookup beyond the computed series");
  return computed_[static_cast<std::size_t>(k)];
}

// ------------------------------------------------------------------- CSV

void write_density_csv(std::ostream& out, const AgeDensity& d) {
  out << "a_mid,n\n";
  char line[80];
  for (std::int64_t i = 0; i < d.grid.n_cells; ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", d.grid.midpoint(i),
                  d.cells[static_cast<std::size_t>(i)]);
    out << line;
  }
}

AgeDensity read_density_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line.rfind("a_mid", 0) == 0,
          "density csv: missing header");
  std::vector<double> mids, vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, "density csv: malformed row");
    mids.push_back(std::stod(line.substr(0, comma)));
    vals.push_back(std::stod(line.substr(comma + 1)));
  }
  require(!mids.empty(), "density csv: no rows");
  const double delta = 2.0 * mids.front();
  require(delta > 0, "density csv: first midpoint must be positive");
  for (std::size_t i = 0; i < mids.size(); ++i) {
    const double expect = (static_cast<double>(i) + 0.5) * delta;
    require(std::abs(mids[i] - expect) <= 1e-9 * std::max(1.0, expect),
            "density csv: midpoints are not a uniform grid from delta/2");
  }
  AgeGrid grid(delta, static_cast<std::int64_t>(vals.size()));
  return AgeDensity(grid, std::move(vals));
}

}  // namespace etm
