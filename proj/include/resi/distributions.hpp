#pragma once

// Special functions and distribution functions used by the interval and
// baseline modules. Everything here is self-contained so that test vectors
// reproduce bit-for-bit on any IEEE-754 platform with a conforming erfc.

#include <functional>

namespace resi::dist {

/// log Gamma(x) for x > 0 (Lanczos, g = 7). Reentrant, unlike std::lgamma.
double log_gamma(double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly.
double gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double beta_inc(double x, double a, double b);

double normal_pdf(double x);
double normal_cdf(double x);
/// Standard normal quantile; rational approximation followed by one Halley step.
double normal_quantile(double p);

double chi2_cdf(double x, double df);
double chi2_sf(double x, double df);
double chi2_quantile(double p, double df);

double t_cdf(double t, double df);
double f_cdf(double f, double df1, double df2);

/// P(T <= t) for T ~ noncentral t(df, ncp).
double noncentral_t_cdf(double t, double df, double ncp);
/// P(F <= f) for F ~ noncentral F(df1, df2, ncp), ncp = lambda.
double noncentral_f_cdf(double f, double df1, double df2, double ncp);

/// Bracketed root of a monotone function: returns x in [lo, hi] with
/// |g(x)| <= ftol or bracket width <= xtol. Throws Solver if g(lo), g(hi)
/// share a sign.
double find_root(const std::function<double(double)>& g, double lo, double hi,
                 double ftol = 1e-12, double xtol = 1e-14, int max_iter = 500);

}  // namespace resi::dist
