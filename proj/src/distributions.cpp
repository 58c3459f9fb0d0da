#include "resi/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "resi/error.hpp"

namespace resi::dist {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kSeriesCap = 10000;

// Continued fraction for Q(a, x), modified Lentz.
double gamma_q_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kSeriesCap; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < kSeriesCap; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kSeriesCap; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

// x^a (1-x)^b Gamma(a+b) / (Gamma(a+1) Gamma(b)): the decrement in
// I_x(a+1, b) = I_x(a, b) - beta_step(x, a, b).
double beta_step(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 0.0;
  return std::exp(log_gamma(a + b) - log_gamma(a + 1.0) - log_gamma(b) + a * std::log(x) +
                  b * std::log1p(-x));
}

}  // namespace

double log_gamma(double x) {
  static constexpr std::array<double, 9> kLanczos = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) -
           log_gamma(1.0 - x);
  }
  x -= 1.0;
  double acc = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) acc += kLanczos[i] / (x + static_cast<double>(i));
  const double t = x + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(acc);
}

double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_continued_fraction(a, x);
}

double beta_inc(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::Parameter, "normal quantile requires p in [0,1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against erfc; the upper tail is refined on 1-p directly.
  double e;
  if (p > 0.5) {
    e = -(0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - p));
  } else {
    e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  }
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double chi2_cdf(double x, double df) { return gamma_p(0.5 * df, 0.5 * x); }

double chi2_sf(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }

double chi2_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::Parameter, "chi2 quantile requires p in (0,1)");
  double hi = std::max(1.0, df);
  while (chi2_cdf(hi, df) < p) hi *= 2.0;
  return find_root([&](double x) { return chi2_cdf(x, df) - p; }, 0.0, hi, 1e-15, 1e-15);
}

double t_cdf(double t, double df) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * beta_inc(x, 0.5 * df, 0.5);
  return t > 0.0 ? 1.0 - tail : tail;
}

double f_cdf(double f, double df1, double df2) {
  if (f <= 0.0) return 0.0;
  return beta_inc(df1 * f / (df1 * f + df2), 0.5 * df1, 0.5 * df2);
}

// Poisson-weighted incomplete-beta series, summed outward from the Poisson
// mode so that large noncentralities do not underflow the leading weight.
double noncentral_t_cdf(double t, double df, double ncp) {
  if (t < 0.0) return 1.0 - noncentral_t_cdf(-t, df, -ncp);
  const double base = normal_cdf(-ncp);
  if (t == 0.0) return base;

  const double x = t * t / (t * t + df);
  const double b = 0.5 * df;
  const double lam = 0.5 * ncp * ncp;
  const auto k = static_cast<int>(std::floor(lam));

  auto log_pois = [&](int i) {
    return lam > 0.0 ? -lam + i * std::log(lam) - log_gamma(i + 1.0) : (i == 0 ? 0.0 : -INFINITY);
  };
  // P_i = e^-lam lam^i / i!,  Q_i = e^-lam lam^i ncp / (sqrt2 Gamma(i + 3/2)).
  const double pk = std::exp(log_pois(k));
  const double qk = lam > 0.0 ? std::exp(-lam + k * std::log(lam) - log_gamma(k + 1.5)) * ncp /
                                    std::numbers::sqrt2
                              : ncp * std::sqrt(2.0 / std::numbers::pi);

  const double ip_k = beta_inc(x, k + 0.5, b);
  const double iq_k = beta_inc(x, k + 1.0, b);
  const double gp_k = beta_step(x, k + 0.5, b);
  const double gq_k = beta_step(x, k + 1.0, b);

  double sum = pk * ip_k + qk * iq_k;
  double mass = pk;

  // Backward: I_x(a-1, b) = I_x(a, b) + step(a-1), step(a-1) = step(a) a / (x (a+b-1)).
  {
    double p = pk, q = qk, ip = ip_k, iq = iq_k, gp = gp_k, gq = gq_k;
    for (int i = k; i > 0; --i) {
      const double ap = i + 0.5, aq = i + 1.0;
      gp = gp * ap / (x * (ap + b - 1.0));
      gq = gq * aq / (x * (aq + b - 1.0));
      ip += gp;
      iq += gq;
      p *= i / lam;
      q *= (i + 0.5) / lam;
      const double term = p * ip + q * iq;
      sum += term;
      mass += p;
      if (p + std::abs(q) < 1e-18) break;
    }
  }
  // Forward: I_x(a+1, b) = I_x(a, b) - step(a), step(a+1) = step(a) x (a+b) / (a+1).
  {
    double p = pk, q = qk, ip = ip_k, iq = iq_k, gp = gp_k, gq = gq_k;
    for (int i = k; i < k + kSeriesCap; ++i) {
      const double ap = i + 0.5, aq = i + 1.0;
      ip -= gp;
      iq -= gq;
      gp = gp * x * (ap + b) / (ap + 1.0);
      gq = gq * x * (aq + b) / (aq + 1.0);
      p *= lam / (i + 1.0);
      q *= lam / (i + 1.5);
      sum += p * ip + q * iq;
      mass += p;
      const double remaining = std::max(0.0, 1.0 - mass);
      if (lam == 0.0 || (remaining * std::max(ip, 0.0) < 1e-15 && p + std::abs(q) < 1e-15)) break;
    }
  }
  return std::clamp(base + 0.5 * sum, 0.0, 1.0);
}

double noncentral_f_cdf(double f, double df1, double df2, double ncp) {
  if (f <= 0.0) return 0.0;
  if (ncp <= 0.0) return f_cdf(f, df1, df2);
  const double y = df1 * f / (df1 * f + df2);
  const double a0 = 0.5 * df1;
  const double b = 0.5 * df2;
  const double lam = 0.5 * ncp;
  const auto k = static_cast<int>(std::floor(lam));
  const double pk = std::exp(-lam + k * std::log(lam) - log_gamma(k + 1.0));
  const double ik = beta_inc(y, a0 + k, b);
  const double gk = beta_step(y, a0 + k, b);

  double sum = pk * ik;
  double mass = pk;
  {
    double p = pk, ia = ik, g = gk;
    for (int i = k; i > 0; --i) {
      const double a = a0 + i;
      g = g * a / (y * (a + b - 1.0));
      ia += g;
      p *= i / lam;
      sum += p * ia;
      mass += p;
      if (p < 1e-18) break;
    }
  }
  {
    double p = pk, ia = ik, g = gk;
    for (int i = k; i < k + kSeriesCap; ++i) {
      const double a = a0 + i;
      ia -= g;
      g = g * y * (a + b) / (a + 1.0);
      p *= lam / (i + 1.0);
      sum += p * ia;
      mass += p;
      if (std::max(0.0, 1.0 - mass) * std::max(ia, 0.0) < 1e-15 && p < 1e-15) break;
    }
  }
  return std::clamp(sum, 0.0, 1.0);
}

// Brent's method (zeroin).
double find_root(const std::function<double(double)>& g, double lo, double hi, double ftol,
                 double xtol, int max_iter) {
  double a = lo, b = hi;
  double fa = g(a), fb = g(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw Error(ErrorKind::Solver, "root not bracketed");
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 2.0 * kEps * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || std::abs(fb) <= ftol) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
    fb = g(b);
  }
  return b;
}

}  // namespace resi::dist
