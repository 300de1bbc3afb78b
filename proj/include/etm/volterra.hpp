#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace etm {

// Uniform samples values[i] taken at t0 + i*dt.
struct Series {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> values;

  double t_back() const {
    return values.empty() ? t0 : t0 + dt * static_cast<double>(values.size() - 1);
  }
};

// Delayed Volterra-type equation
//   u(t) = c1 u(t-d) + c2 int_0^t e^{-lambda(t-s)} u(s-d) ds + f(t),  t > 0,
//   u = u0 on [-d, 0).
// f holds samples at 0, dt, ..., T; u0 holds exactly d/dt samples at
// -d, ..., -dt. c1, c2 >= 0 (the comparison principle needs nonnegative
// coefficients, so validate() enforces them).
struct DelayedVolterraProblem {
  double c1 = 0.0;
  double c2 = 0.0;
  double d = 0.0;
  double lambda = 0.0;
  double dt = 0.0;
  std::vector<double> f;
  std::vector<double> u0;

  std::int64_t delay_steps() const;  // d/dt, validated as an integer
  void validate() const;
};

// Convolution equation u(t) = (k*u)(t) + f(t); k and f sampled at
// 0, dt, ..., T with equal lengths. The marching precondition
// dt * max(k) < 1 mirrors the comparison check's smallness condition.
struct ConvolutionVolterraProblem {
  double dt = 0.0;
  std::vector<double> k;
  std::vector<double> f;

  void validate() const;
};

// Marches the delayed equation on [-d, T]. The memory integral uses the
// exponential recursion I_n = e^{-lambda dt} I_{n-1} + dt * u_{n-D}, which is
// exact in the kernel and rectangle-rule in u. The returned series starts
// with u0 verbatim, then the computed samples.
Series march_delayed(const DelayedVolterraProblem& p);

// Marches the convolution equation on [0, T] with trapezoid quadrature,
// implicit in the diagonal term:
//   u_n = (f_n + sum_{j<n} w_j k_{n-j} u_j) / (1 - (dt/2) k_0),  u_0 = f_0.
Series march_convolution(const ConvolutionVolterraProblem& p);

enum class Side { upper, lower };

struct ComparisonCheck {
  bool pass = false;
  double margin = 0.0;  // minimum slack across all grid inequalities
};

// Evaluates the upper (lower) solution inequalities of the candidate at every
// grid point, with the same discrete memory update as the marches, and
// returns the minimum slack. The delayed check covers the history segment
// too: an upper candidate must dominate u0 on [-d, 0). The marched solution
// itself passes both sides with margin ~ 0; each slack is allowed a small
// tolerance relative to the local magnitudes entering it, which absorbs
// round-off without letting a large sample excuse a violation in a small one.
ComparisonCheck check_comparison_discrete(const DelayedVolterraProblem& p,
                                          const Series& candidate, Side side);
ComparisonCheck check_comparison_convolution(
    const ConvolutionVolterraProblem& p, const Series& candidate, Side side);

struct DecayExponentFit {
  double exponent = 0.0;
  double r_squared = 0.0;
  bool accepted = false;  // r_squared >= 0.99
};

// Convolves two sampled functions by trapezoid quadrature and fits the slope
// of log h versus log t on [T/10, T] (the asymptotic window). f and g must
// share t0 = 0 and dt and cover [0, T]; T >= 1e3.
DecayExponentFit convolution_decay_exponent(const Series& f, const Series& g,
                                            double T);

enum class CertificateKind {
  discrete_delay,
  distributed_exp,
  distributed_algebraic,
};

enum class CertificateForm { exponential, algebraic };

// Inputs of the decay estimates. c1 = 2 C0 ||S||_inf and
// c2 = C0 ||S||_inf ||n0 - n*||_TV come from the measured linear-semigroup
// pair (C0, lambda); c3 = sup |r0 - r*| over the history window. d applies to
// the discrete-delay kind, (c_alpha, beta) to the distributed kinds, where
// the kernel envelope is c_alpha e^{-beta s} (exponential) or
// c_alpha (1+s)^{-beta} (algebraic).
struct CertificateConstants {
  double ell = 0.0;
  double lambda = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double d = 0.0;
  double c_alpha = 0.0;
  double beta = 0.0;
};

// A certified bound |u(t)| <= A e^{-mu t} (exponential form) or
// A / (1 + t^mu) (algebraic form) on the rate/activity gap, built from the
// sufficient inequalities of the decay estimates with a 1% slack multiplier
// on A. margin is the smallest slack of the defining inequalities over the
// checked time net when admissible, and the (negative) distance of ell to
// its admissibility bound otherwise; admissible <=> margin >= 0. amplitude
// is NaN when inadmissible (no A exists; serialized as null). Constants are
// never clamped.
struct SupersolutionCertificate {
  CertificateKind kind = CertificateKind::discrete_delay;
  CertificateForm form = CertificateForm::exponential;
  double amplitude = 0.0;
  double mu = 0.0;
  bool admissible = false;
  double margin = 0.0;
  double ell_bound = 0.0;  // admissibility threshold on ell
  double c4 = 0.0;         // algebraic kind only: computed sup constant
  CertificateConstants constants;

  std::string to_json() const;
};

// Exponential-decay certificates. DiscreteDelay picks mu = lambda/2 when
// d <= 1 and lambda/(d+1) otherwise; DistributedExp picks
// mu = min(lambda, beta)/2 and rejects beta = lambda (DegenerateConstants:
// the amplitude bound carries |lambda - beta| in a denominator).
SupersolutionCertificate build_exponential_certificate(
    CertificateKind kind, const CertificateConstants& c);

// Algebraic-decay certificate with mu = beta - 1 (requires beta > 1, else
// DegenerateConstants). C4 is computed numerically as the maximum over a
// time net on [0, 1e3] of the proof's bounded expressions: the normalized
// forcing terms (1+t^mu) tail_alpha(t) and (1+t^mu)(alpha * e^{-lambda .})(t)
// and the two convolution suprema against 1/(1+t^mu). net_points sets the
// uniform net resolution (the default is refinement-stable to well under 1%).
SupersolutionCertificate build_algebraic_certificate(
    const CertificateConstants& c, std::int64_t net_points = 16384);

// Step size at which the certified bound A e^{-mu t} provably stays an upper
// solution of the *discrete* delayed system: the rectangle-rule memory
// recursion overestimates the integral by at most dt * v(t-d), which must fit
// inside the certificate's continuous slack A(1-X) - C2 with
// X = ell e^{mu d} (1 + C1/(lambda-mu)). Returns d/k for an integer k >= 8 so
// the step divides the delay exactly. Requires an admissible discrete-delay
// certificate.
double certificate_check_dt(const SupersolutionCertificate& cert);

// The delayed inequality system certified by a discrete-delay certificate:
// c1 = ell, c2 = C1 ell, f(t) = C2 e^{-lambda t}, u0 = C3 on [-d, 0).
DelayedVolterraProblem certificate_problem_delay(
    const SupersolutionCertificate& cert, double t_end, double dt);

// Convolution form of the distributed inequality with the envelope kernel:
// k = ell (alpha + C1 alpha*e^{-lambda .}), f(t) = C3 tail_alpha(t) +
// C2 (alpha*e^{-lambda .})(t). Closed forms for the exponential envelope;
// trapezoid-recurrence tabulation for the algebraic one.
ConvolutionVolterraProblem certificate_problem_distributed(
    const SupersolutionCertificate& cert, double t_end, double dt);

// The certified bound sampled for the comparison checks, with the history
// segment included for the discrete-delay kind.
Series certificate_candidate(const SupersolutionCertificate& cert,
                             double t_end, double dt);

}  // namespace etm
