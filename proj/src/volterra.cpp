#include "etm/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <json.hpp>

#include "etm/errors.hpp"

namespace etm {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void require_finite(const std::vector<double>& v, const char* name) {
  for (double x : v) {
    require(std::isfinite(x), std::string(name) + " contains a non-finite sample");
  }
}

// Walks the delayed recursion over the sample array v (history at the front)
// and reports rhs_n = c1 v_{n-D} + c2 I_n + f_n for each computed index. The
// march writes rhs_n into slot D+n before the walk reads it again at a later
// step, so marching and checking share one arithmetic path and the marched
// solution re-checks with slack exactly zero.
template <typename Visit>
void walk_delayed(const DelayedVolterraProblem& p, const double* v,
                  Visit&& visit) {
  const double decay = std::exp(-p.lambda * p.dt);
  double memory = 0.0;
  for (std::size_t n = 0; n < p.f.size(); ++n) {
    const double delayed = v[n];  // global slot n holds u(t_n - d)
    if (n > 0) memory = decay * memory + p.dt * delayed;
    visit(n, p.c1 * delayed + p.c2 * memory + p.f[n]);
  }
}

// Trapezoid convolution prefix sum_{0<j<n} dt k_{n-j} v_j + (dt/2) k_n v_0;
// the diagonal (dt/2) k_0 v_n term is handled by the callers.
double convolution_tail(const std::vector<double>& k, const double* v,
                        std::size_t n, double dt) {
  if (n == 0) return 0.0;
  double acc = 0.5 * k[n] * v[0];
  for (std::size_t j = 1; j < n; ++j) acc += k[n - j] * v[j];
  return dt * acc;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (out.intercept + out.slope * x[i]);
    ssr += e * e;
  }
  out.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return out;
}

}  // namespace

std::int64_t DelayedVolterraProblem::delay_steps() const {
  return std::llround(d / dt);
}

void DelayedVolterraProblem::validate() const {
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(std::isfinite(d) && d > 0.0, "delay d must be positive");
  require(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive");
  require(std::isfinite(c1) && c1 >= 0.0, "c1 must be nonnegative");
  require(std::isfinite(c2) && c2 >= 0.0, "c2 must be nonnegative");
  const auto steps = delay_steps();
  require(steps >= 1 && std::abs(d - static_cast<double>(steps) * dt) <=
                            1e-9 * std::max(1.0, d),
          "dt must divide the delay d");
  require(u0.size() == static_cast<std::size_t>(steps),
          "u0 must hold exactly d/dt samples on [-d, 0)");
  require(!f.empty(), "f must hold at least one sample");
  require_finite(f, "f");
  require_finite(u0, "u0");
}

void ConvolutionVolterraProblem::validate() const {
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(!f.empty(), "f must hold at least one sample");
  require(k.size() == f.size(), "k and f must share one sample grid");
  require_finite(f, "f");
  double k_max = 0.0;
  for (double x : k) {
    require(std::isfinite(x) && x >= 0.0, "kernel k must be nonnegative");
    k_max = std::max(k_max, x);
  }
  require(dt * k_max < 1.0, "dt * max(k) must stay below 1");
}

Series march_delayed(const DelayedVolterraProblem& p) {
  p.validate();
  const auto hist = static_cast<std::size_t>(p.delay_steps());
  Series out;
  out.t0 = -p.d;
  out.dt = p.dt;
  out.values.resize(hist + p.f.size());
  std::copy(p.u0.begin(), p.u0.end(), out.values.begin());
  double* v = out.values.data();
  walk_delayed(p, v, [&](std::size_t n, double rhs) { v[hist + n] = rhs; });
  require_finite(out.values, "marched solution");
  return out;
}

Series march_convolution(const ConvolutionVolterraProblem& p) {
  p.validate();
  Series out;
  out.t0 = 0.0;
  out.dt = p.dt;
  out.values.resize(p.f.size());
  const double diag = 0.5 * p.dt * p.k[0];
  out.values[0] = p.f[0];
  for (std::size_t n = 1; n < p.f.size(); ++n) {
    const double tail = convolution_tail(p.k, out.values.data(), n, p.dt);
    out.values[n] = (p.f[n] + tail) / (1.0 - diag);
  }
  require_finite(out.values, "marched solution");
  return out;
}

ComparisonCheck check_comparison_discrete(const DelayedVolterraProblem& p,
                                          const Series& candidate, Side side) {
  p.validate();
  const auto hist = static_cast<std::size_t>(p.delay_steps());
  require(candidate.values.size() == hist + p.f.size(),
          "candidate must cover [-d, T] on the problem grid");
  require(std::abs(candidate.dt - p.dt) <= 1e-12 * p.dt,
          "candidate dt must match the problem dt");
  require(std::abs(candidate.t0 + p.d) <= 1e-9 * std::max(1.0, p.d),
          "candidate must start at t = -d");
  require_finite(candidate.values, "candidate");

  const double sign = side == Side::upper ? 1.0 : -1.0;
  double margin = std::numeric_limits<double>::infinity();
  bool ok = true;
  // Slack tolerances are relative to the local magnitudes: a violation must
  // be judged against the terms that produced it, or round-off in a large
  // sample would excuse a genuine violation in a small one.
  for (std::size_t j = 0; j < hist; ++j) {
    const double slack = sign * (candidate.values[j] - p.u0[j]);
    margin = std::min(margin, slack);
    const double local =
        std::max({1.0, std::abs(candidate.values[j]), std::abs(p.u0[j])});
    if (slack < -1e-12 * local) ok = false;
  }
  const double* v = candidate.values.data();
  walk_delayed(p, v, [&](std::size_t n, double rhs) {
    const double slack = sign * (v[hist + n] - rhs);
    margin = std::min(margin, slack);
    const double local = std::max({1.0, std::abs(v[hist + n]), std::abs(rhs)});
    if (slack < -1e-12 * local) ok = false;
  });
  return {ok, margin};
}

ComparisonCheck check_comparison_convolution(
    const ConvolutionVolterraProblem& p, const Series& candidate, Side side) {
  p.validate();
  require(candidate.values.size() == p.f.size(),
          "candidate must cover [0, T] on the problem grid");
  require(std::abs(candidate.dt - p.dt) <= 1e-12 * p.dt,
          "candidate dt must match the problem dt");
  require(std::abs(candidate.t0) <= 1e-12, "candidate must start at t = 0");
  require_finite(candidate.values, "candidate");

  const double sign = side == Side::upper ? 1.0 : -1.0;
  const double diag = 0.5 * p.dt * p.k[0];
  const double* v = candidate.values.data();
  double margin = sign * (v[0] - p.f[0]);
  bool ok = margin >= -1e-12 * std::max({1.0, std::abs(v[0]), std::abs(p.f[0])});
  for (std::size_t n = 1; n < p.f.size(); ++n) {
    const double rhs = p.f[n] + convolution_tail(p.k, v, n, p.dt) + diag * v[n];
    const double slack = sign * (v[n] - rhs);
    margin = std::min(margin, slack);
    const double local = std::max({1.0, std::abs(v[n]), std::abs(rhs)});
    if (slack < -1e-12 * local) ok = false;
  }
  return {ok, margin};
}

DecayExponentFit convolution_decay_exponent(const Series& f, const Series& g,
                                            double T) {
  require(std::isfinite(T) && T >= 1e3 - 1e-9,
          "decay-exponent fits need a window end T >= 1e3");
  require(f.dt > 0.0 && std::abs(f.dt - g.dt) <= 1e-12 * f.dt,
          "f and g must share one sample step");
  require(std::abs(f.t0) <= 1e-12 && std::abs(g.t0) <= 1e-12,
          "f and g must start at t = 0");
  require_finite(f.values, "f");
  require_finite(g.values, "g");
  const double dt = f.dt;
  const auto n_cover = static_cast<std::size_t>(std::llround(T / dt));
  require(f.values.size() > n_cover && g.values.size() > n_cover,
          "f and g must cover [0, T]");

  // Up to 400 log-spaced sample times in the asymptotic window [T/10, T].
  const auto n_lo = static_cast<std::size_t>(std::ceil(T / 10.0 / dt - 1e-9));
  std::vector<std::size_t> idx;
  const double log_lo = std::log(static_cast<double>(std::max<std::size_t>(n_lo, 1)));
  const double log_hi = std::log(static_cast<double>(n_cover));
  for (int i = 0; i < 400; ++i) {
    const double u = log_lo + (log_hi - log_lo) * i / 399.0;
    const auto n = static_cast<std::size_t>(std::llround(std::exp(u)));
    if (idx.empty() || n > idx.back()) idx.push_back(n);
  }

  std::vector<double> log_t, log_h;
  for (std::size_t n : idx) {
    double acc = 0.5 * (f.values[0] * g.values[n] + f.values[n] * g.values[0]);
    for (std::size_t j = 1; j < n; ++j) acc += f.values[j] * g.values[n - j];
    const double h = dt * acc;
    if (h > 0.0) {
      log_t.push_back(std::log(dt * static_cast<double>(n)));
      log_h.push_back(std::log(h));
    }
  }
  if (log_t.size() < 3) {
    throw ValidationError(
        "too few positive convolution samples in the fit window");
  }

  const LineFit line = fit_line(log_t, log_h);
  DecayExponentFit out;
  out.exponent = -line.slope;
  out.r_squared = line.r2;
  out.accepted = line.r2 >= 0.99;
  return out;
}

namespace {

void validate_common_constants(const CertificateConstants& c) {
  require(std::isfinite(c.ell) && c.ell >= 0.0, "ell must be nonnegative");
  require(std::isfinite(c.lambda) && c.lambda > 0.0, "lambda must be positive");
  require(std::isfinite(c.c1) && c.c1 >= 0.0, "C1 must be nonnegative");
  require(std::isfinite(c.c2) && c.c2 >= 0.0, "C2 must be nonnegative");
  require(std::isfinite(c.c3) && c.c3 >= 0.0, "C3 must be nonnegative");
}

// ell misses its bound: report the (negative) distance, keep A unset. A zero
// distance still reports inadmissible (the bound is strict), nudged to the
// smallest negative so that admissible <=> margin >= 0 holds.
SupersolutionCertificate inadmissible(SupersolutionCertificate cert) {
  cert.admissible = false;
  cert.margin = cert.ell_bound - cert.constants.ell;
  if (!(cert.margin < 0.0)) cert.margin = -std::numeric_limits<double>::min();
  cert.amplitude = std::numeric_limits<double>::quiet_NaN();
  return cert;
}

}  // namespace

SupersolutionCertificate build_exponential_certificate(
    CertificateKind kind, const CertificateConstants& c) {
  validate_common_constants(c);
  require(kind != CertificateKind::distributed_algebraic,
          "algebraic certificates are built by build_algebraic_certificate");

  SupersolutionCertificate cert;
  cert.kind = kind;
  cert.form = CertificateForm::exponential;
  cert.constants = c;

  if (kind == CertificateKind::discrete_delay) {
    require(std::isfinite(c.d) && c.d > 0.0, "delay d must be positive");
    const double mu = c.d <= 1.0 ? c.lambda / 2.0 : c.lambda / (c.d + 1.0);
    const double gap = c.lambda - mu;
    const double emu = std::exp(mu * c.d);
    cert.mu = mu;
    cert.ell_bound = gap / (emu * (gap + c.c1));
    if (!(c.ell < cert.ell_bound)) return inadmissible(cert);

    const double denom = gap - c.ell * emu * (gap + c.c1);
    const double a_min = std::max(c.c3, c.c2 * gap / denom);
    cert.amplitude = 1.01 * a_min;
    cert.admissible = true;

    // Defining inequalities: the history bound A >= C3 and, for every t >= 0,
    // A (1 - ell e^{mu d} - C1 ell e^{mu d} (1-q)/(lambda-mu)) >= C2 q with
    // q = e^{-(lambda-mu)t}. The slack is linear in q, but the net keeps the
    // check uniform with the other kinds.
    double margin = cert.amplitude - c.c3;
    for (int i = 0; i <= 1024; ++i) {
      const double q = static_cast<double>(i) / 1024.0;
      const double slack = cert.amplitude * (1.0 - c.ell * emu) -
                           cert.amplitude * c.c1 * c.ell * emu * (1.0 - q) / gap -
                           c.c2 * q;
      margin = std::min(margin, slack);
    }
    cert.margin = margin;
    return cert;
  }

  require(std::isfinite(c.c_alpha) && c.c_alpha > 0.0,
          "C_alpha must be positive");
  require(std::isfinite(c.beta) && c.beta > 0.0, "beta must be positive");
  if (std::abs(c.lambda - c.beta) <= 1e-12 * std::max(c.lambda, c.beta)) {
    throw DegenerateConstants(
        "beta = lambda leaves the amplitude bound undefined (|lambda - beta| "
        "denominator)");
  }

  const double mu = std::min(c.lambda, c.beta) / 2.0;
  const double gl = c.lambda - mu;
  const double gb = c.beta - mu;
  cert.mu = mu;
  cert.ell_bound = (gb / c.c_alpha) * (gl / (gl + c.c1));
  if (!(c.ell < cert.ell_bound)) return inadmissible(cert);

  const double forcing_sup =
      c.c_alpha * (c.c3 / c.beta + c.c2 / std::abs(c.lambda - c.beta));
  const double denom = gb * gl - c.ell * c.c_alpha * (gl + c.c1);
  cert.amplitude = 1.01 * forcing_sup * gb * gl / denom;
  cert.admissible = true;

  // Defining inequality: A >= g(t) e^{mu t} + ell A (1 + C1/(lambda-mu)) Ta
  //                      - ell A C1 Tb / (lambda-mu) on the net, with
  // Ta = C_a (1-e^{-(beta-mu)t})/(beta-mu) and
  // Tb = C_a (e^{-(beta-mu)t} - e^{-(lambda-mu)t})/(lambda-beta).
  const double t_net = 40.0 / std::min(gb, gl);
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1024; ++i) {
    const double frac = static_cast<double>(i) / 1024.0;
    const double t = t_net * frac * frac;
    const double ebm = std::exp(-gb * t);
    const double elm = std::exp(-gl * t);
    const double diff = (ebm - elm) / (c.lambda - c.beta);
    const double g_em =
        c.c3 * (c.c_alpha / c.beta) * ebm + c.c2 * c.c_alpha * diff;
    const double ta = c.c_alpha * (1.0 - ebm) / gb;
    const double tb = c.c_alpha * diff;
    const double rhs = g_em + c.ell * cert.amplitude * (1.0 + c.c1 / gl) * ta -
                       c.ell * cert.amplitude * c.c1 * tb / gl;
    margin = std::min(margin, cert.amplitude - rhs);
  }
  cert.margin = margin;
  return cert;
}

SupersolutionCertificate build_algebraic_certificate(
    const CertificateConstants& c, std::int64_t net_points) {
  validate_common_constants(c);
  require(std::isfinite(c.c_alpha) && c.c_alpha > 0.0,
          "C_alpha must be positive");
  require(net_points >= 1024 && net_points <= (1 << 22),
          "net_points must lie in [1024, 4194304]");
  if (!(std::isfinite(c.beta) && c.beta > 1.0)) {
    throw DegenerateConstants(
        "algebraic certificates need beta > 1 (mu = beta - 1 must be a "
        "positive decay power)");
  }

  SupersolutionCertificate cert;
  cert.kind = CertificateKind::distributed_algebraic;
  cert.form = CertificateForm::algebraic;
  cert.constants = c;
  const double mu = c.beta - 1.0;
  cert.mu = mu;

  // Envelope alpha(s) = C_a (1+s)^{-beta} tabulated on a uniform net over
  // [0, 1e3]. V = alpha * e^{-lambda .} and W = (1+.^mu)^{-1} * e^{-lambda .}
  // accumulate by the per-interval trapezoid recurrence.
  const auto n = static_cast<std::size_t>(net_points);
  const double h = 1e3 / static_cast<double>(n);
  const double eh = std::exp(-c.lambda * h);
  std::vector<double> norm(n + 1), alpha(n + 1), wmu(n + 1), v(n + 1),
      w(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = h * static_cast<double>(i);
    norm[i] = 1.0 + std::pow(t, mu);
    alpha[i] = c.c_alpha * std::pow(1.0 + t, -c.beta);
    wmu[i] = 1.0 / norm[i];
  }
  v[0] = 0.0;
  w[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    v[i] = eh * v[i - 1] + 0.5 * h * (eh * alpha[i - 1] + alpha[i]);
    w[i] = eh * w[i - 1] + 0.5 * h * (eh * wmu[i - 1] + wmu[i]);
  }

  // The four bounded expressions of the proof, normalized by (1 + t^mu):
  // the tail of alpha, alpha * e^{-lambda .}, alpha * (1+.^mu)^{-1}, and
  // alpha * W. The first two are cheap and scanned on the whole net; the
  // convolutions are scanned on a subnet (dense early, strided later).
  const std::size_t stride = std::max<std::size_t>(1, n / 1024);
  std::vector<std::size_t> subnet;
  for (std::size_t i = 0; i <= n; ++i) {
    if (i <= 256 || i % stride == 0 || i == n) {
      if (subnet.empty() || i > subnet.back()) subnet.push_back(i);
    }
  }

  double c4 = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = h * static_cast<double>(i);
    const double tail =
        c.c_alpha * std::pow(1.0 + t, 1.0 - c.beta) / (c.beta - 1.0);
    c4 = std::max(c4, norm[i] * tail);
    c4 = std::max(c4, norm[i] * v[i]);
  }
  std::vector<double> conv_direct(subnet.size()), conv_double(subnet.size());
  for (std::size_t s = 0; s < subnet.size(); ++s) {
    const std::size_t i = subnet[s];
    double acc2 = 0.0, acc3 = 0.0;
    if (i > 0) {
      acc2 = 0.5 * (alpha[0] * wmu[i] + alpha[i] * wmu[0]);
      acc3 = 0.5 * (alpha[i] * w[0] + alpha[0] * w[i]);
      for (std::size_t j = 1; j < i; ++j) {
        acc2 += alpha[j] * wmu[i - j];
        acc3 += alpha[i - j] * w[j];
      }
      acc2 *= h;
      acc3 *= h;
    }
    conv_direct[s] = norm[i] * acc2;
    conv_double[s] = norm[i] * acc3;
    c4 = std::max({c4, conv_direct[s], conv_double[s]});
  }
  cert.c4 = c4;

  cert.ell_bound = 1.0 / (c4 * (1.0 + c.c1));
  if (!(c.ell < cert.ell_bound)) return inadmissible(cert);

  cert.amplitude =
      1.01 * c4 * (c.c2 + c.c3) / (1.0 - c.ell * c4 * (1.0 + c.c1));
  cert.admissible = true;

  // Defining inequality on the subnet:
  // A >= C3 (1+t^mu) tail(t) + C2 (1+t^mu) V(t) + ell A [conv terms].
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < subnet.size(); ++s) {
    const std::size_t i = subnet[s];
    const double t = h * static_cast<double>(i);
    const double tail =
        c.c_alpha * std::pow(1.0 + t, 1.0 - c.beta) / (c.beta - 1.0);
    const double rhs = c.c3 * norm[i] * tail + c.c2 * norm[i] * v[i] +
                       c.ell * cert.amplitude *
                           (conv_direct[s] + c.c1 * conv_double[s]);
    margin = std::min(margin, cert.amplitude - rhs);
  }
  cert.margin = margin;
  return cert;
}

double certificate_check_dt(const SupersolutionCertificate& cert) {
  require(cert.kind == CertificateKind::discrete_delay && cert.admissible,
          "check step sizing needs an admissible discrete-delay certificate");
  const CertificateConstants& c = cert.constants;
  const double emu = std::exp(cert.mu * c.d);
  double raw = c.d / 8.0;
  if (c.c1 * c.ell * cert.amplitude > 0.0) {
    const double x = c.ell * emu * (1.0 + c.c1 / (c.lambda - cert.mu));
    const double cushion = cert.amplitude * (1.0 - x) - c.c2;
    if (!(cushion > 0.0)) {
      throw NumericalError("certificate slack vanished in the step bound");
    }
    raw = std::min(raw, cushion / (c.c1 * c.ell * cert.amplitude * emu));
  }
  const double k = std::max(8.0, std::ceil(c.d / raw - 1e-9));
  return c.d / k;
}

DelayedVolterraProblem certificate_problem_delay(
    const SupersolutionCertificate& cert, double t_end, double dt) {
  require(cert.kind == CertificateKind::discrete_delay,
          "delayed problems match discrete-delay certificates");
  require(std::isfinite(t_end) && t_end > 0.0, "t_end must be positive");
  const CertificateConstants& c = cert.constants;
  DelayedVolterraProblem p;
  p.c1 = c.ell;
  p.c2 = c.c1 * c.ell;
  p.d = c.d;
  p.lambda = c.lambda;
  p.dt = dt;
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  p.f.resize(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    p.f[i] = c.c2 * std::exp(-c.lambda * dt * static_cast<double>(i));
  }
  p.u0.assign(static_cast<std::size_t>(p.delay_steps()), c.c3);
  p.validate();
  return p;
}

ConvolutionVolterraProblem certificate_problem_distributed(
    const SupersolutionCertificate& cert, double t_end, double dt) {
  require(cert.kind != CertificateKind::discrete_delay,
          "convolution problems match the distributed certificates");
  require(std::isfinite(t_end) && t_end > 0.0, "t_end must be positive");
  const CertificateConstants& c = cert.constants;
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  ConvolutionVolterraProblem p;
  p.dt = dt;
  p.k.resize(steps + 1);
  p.f.resize(steps + 1);
  if (cert.kind == CertificateKind::distributed_exp) {
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = dt * static_cast<double>(i);
      const double a = c.c_alpha * std::exp(-c.beta * t);
      const double conv = c.c_alpha *
                          (std::exp(-c.beta * t) - std::exp(-c.lambda * t)) /
                          (c.lambda - c.beta);
      p.k[i] = c.ell * (a + c.c1 * conv);
      p.f[i] = c.c3 * (c.c_alpha / c.beta) * std::exp(-c.beta * t) +
               c.c2 * conv;
    }
  } else {
    const double eh = std::exp(-c.lambda * dt);
    double conv = 0.0;
    double prev_a = c.c_alpha;
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = dt * static_cast<double>(i);
      const double a = c.c_alpha * std::pow(1.0 + t, -c.beta);
      if (i > 0) conv = eh * conv + 0.5 * dt * (eh * prev_a + a);
      const double tail =
          c.c_alpha * std::pow(1.0 + t, 1.0 - c.beta) / (c.beta - 1.0);
      p.k[i] = c.ell * (a + c.c1 * conv);
      p.f[i] = c.c3 * tail + c.c2 * conv;
      prev_a = a;
    }
  }
  p.validate();
  return p;
}

Series certificate_candidate(const SupersolutionCertificate& cert,
                             double t_end, double dt) {
  require(cert.admissible,
          "only admissible certificates define a bound to sample");
  require(std::isfinite(t_end) && t_end > 0.0, "t_end must be positive");
  Series out;
  out.dt = dt;
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  if (cert.kind == CertificateKind::discrete_delay) {
    const auto hist =
        static_cast<std::size_t>(std::llround(cert.constants.d / dt));
    out.t0 = -cert.constants.d;
    out.values.resize(hist + steps + 1);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      const double t = out.t0 + dt * static_cast<double>(i);
      out.values[i] = cert.amplitude * std::exp(-cert.mu * t);
    }
  } else {
    out.t0 = 0.0;
    out.values.resize(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = dt * static_cast<double>(i);
      out.values[i] = cert.form == CertificateForm::exponential
                          ? cert.amplitude * std::exp(-cert.mu * t)
                          : cert.amplitude / (1.0 + std::pow(t, cert.mu));
    }
  }
  return out;
}

std::string SupersolutionCertificate::to_json() const {
  nlohmann::json j;
  j["form"] =
      form == CertificateForm::exponential ? "exponential" : "algebraic";
  switch (kind) {
    case CertificateKind::discrete_delay:
      j["kind"] = "discrete_delay";
      break;
    case CertificateKind::distributed_exp:
      j["kind"] = "distributed_exp";
      break;
    case CertificateKind::distributed_algebraic:
      j["kind"] = "distributed_algebraic";
      break;
  }
  j["admissible"] = admissible;
  j["margin"] = margin;
  if (admissible) {
    j["amplitude"] = amplitude;
  } else {
    j["amplitude"] = nullptr;
  }
  j["mu"] = mu;
  j["ell_bound"] = ell_bound;
  if (kind == CertificateKind::distributed_algebraic) j["c4"] = c4;
  nlohmann::json cu;
  cu["ell"] = constants.ell;
  cu["lambda"] = constants.lambda;
  cu["c1"] = constants.c1;
  cu["c2"] = constants.c2;
  cu["c3"] = constants.c3;
  if (kind == CertificateKind::discrete_delay) {
    cu["d"] = constants.d;
  } else {
    cu["c_alpha"] = constants.c_alpha;
    cu["beta"] = constants.beta;
  }
  j["constants_used"] = cu;
  return j.dump(2);
}

}  // namespace etm
