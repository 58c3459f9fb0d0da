#include "resi/baselines.hpp"

#include <cmath>

#include "resi/distributions.hpp"
#include "resi/error.hpp"

namespace resi {

namespace {

constexpr double kProbTol = 1e-10;

// Noncentrality at which cdf(ncp) = target, for cdf decreasing in ncp.
double invert_ncp(const std::function<double(double)>& cdf, double target, double lo, double hi) {
  auto g = [&](double ncp) { return cdf(ncp) - target; };
  double width = std::max(1.0, hi - lo);
  for (int i = 0; i < 60 && g(lo) < 0.0; ++i) lo -= width, width *= 2.0;
  width = std::max(1.0, hi - lo);
  for (int i = 0; i < 60 && g(hi) > 0.0; ++i) hi += width, width *= 2.0;
  return dist::find_root(g, lo, hi, kProbTol, 1e-12);
}

}  // namespace

CohenEstimate cohens_d(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double alpha) {
  check_alpha(alpha);
  if (y0.size() < 2 || y1.size() < 2) throw Error(ErrorKind::DegenerateDesign, "each group needs 2 observations");
  const double n0 = static_cast<double>(y0.size());
  const double n1 = static_cast<double>(y1.size());
  const double m0 = y0.mean();
  const double m1 = y1.mean();
  const double ss = (y0.array() - m0).square().sum() + (y1.array() - m1).square().sum();
  const double df = n0 + n1 - 2.0;
  const double sp = std::sqrt(ss / df);
  if (!(sp > 0.0)) throw Error(ErrorKind::DegenerateDesign, "zero pooled variance");

  CohenEstimate out;
  out.kind = CohenKind::D;
  out.value = (m1 - m0) / sp;
  out.df1 = 1.0;
  out.df2 = df;
  const double scale = std::sqrt(n0 * n1 / (n0 + n1));
  const double t = out.value * scale;
  auto cdf = [&](double ncp) { return dist::noncentral_t_cdf(t, df, ncp); };
  const double lam_lo = invert_ncp(cdf, 1.0 - alpha / 2.0, t - 4.0, t);
  const double lam_hi = invert_ncp(cdf, alpha / 2.0, t, t + 4.0);
  out.ci.lower = lam_lo / scale;
  out.ci.upper = lam_hi / scale;
  out.ci.level = 1.0 - alpha;
  out.ci.method = IntervalMethod::NoncentralInversion;
  out.ci.branch = IntervalBranch::TwoSided;
  return out;
}

CohenEstimate cohens_f(const DesignMatrix& design, const Eigen::VectorXd& y, const ContrastMatrix& L,
                       double alpha) {
  return cohens_f(design.X, y, L, alpha);
}

CohenEstimate cohens_f(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ContrastMatrix& L,
                       double alpha) {
  check_alpha(alpha);
  const auto fm = fit(ModelFamily::linear(), X, y, CovMode::Model);
  const double n = static_cast<double>(X.rows());
  const double m = static_cast<double>(X.cols());
  const double m1 = static_cast<double>(L.m1());
  const Eigen::MatrixXd Lm = L.matrix(X.cols());
  const Eigen::VectorXd beta = Lm * fm.coefficients();
  const Eigen::MatrixXd XtX_inv = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  const Eigen::MatrixXd V = Lm * XtX_inv * Lm.transpose();
  const double F = beta.dot(V.ldlt().solve(beta)) / m1 / fm.dispersion;

  CohenEstimate out;
  out.kind = CohenKind::F;
  out.df1 = m1;
  out.df2 = n - m;
  out.value = std::sqrt(F * m1 / (n - m));

  auto cdf = [&](double ncp) { return dist::noncentral_f_cdf(F, out.df1, out.df2, ncp); };
  const double at_zero = cdf(0.0);
  const double guess = std::max(1.0, F * m1);
  double lam_lo = 0.0, lam_hi = 0.0;
  if (at_zero > 1.0 - alpha / 2.0) lam_lo = invert_ncp(cdf, 1.0 - alpha / 2.0, 0.0, guess);
  if (at_zero > alpha / 2.0) lam_hi = invert_ncp(cdf, alpha / 2.0, 0.0, 2.0 * guess);
  out.ci.lower = std::sqrt(lam_lo / n);
  out.ci.upper = std::sqrt(lam_hi / n);
  out.ci.level = 1.0 - alpha;
  out.ci.method = IntervalMethod::NoncentralInversion;
  out.ci.branch = IntervalBranch::TwoSided;
  return out;
}

}  // namespace resi
