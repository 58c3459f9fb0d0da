#include "resi/effect_size.hpp"

#include <cmath>

#include "resi/distributions.hpp"
#include "resi/error.hpp"

namespace resi {

std::string to_string(ResiVariant v) {
  switch (v) {
    case ResiVariant::UnsignedChisq: return "unsigned-chisq";
    case ResiVariant::SignedZ: return "signed-z";
    case ResiVariant::Scaled: return "scaled";
    case ResiVariant::UnsignedF: return "unsigned-f";
    case ResiVariant::SignedT: return "signed-t";
  }
  return "?";
}

ResiVariant parse_variant(const std::string& s) {
  if (s == "unsigned-chisq") return ResiVariant::UnsignedChisq;
  if (s == "signed-z") return ResiVariant::SignedZ;
  if (s == "scaled") return ResiVariant::Scaled;
  if (s == "unsigned-f") return ResiVariant::UnsignedF;
  if (s == "signed-t") return ResiVariant::SignedT;
  throw Error(ErrorKind::Parameter, "unknown RESI variant '" + s + "'");
}

WaldStatistics wald_statistics(const FittedModel& model, const CovarianceEstimate& cov,
                               const ContrastMatrix& L) {
  return wald_statistics(model, cov, L, Eigen::VectorXd::Zero(L.m1()));
}

WaldStatistics wald_statistics(const FittedModel& model, const CovarianceEstimate& cov,
                               const ContrastMatrix& L, const Eigen::VectorXd& beta0) {
  if (beta0.size() != L.m1()) throw Error(ErrorKind::Parameter, "beta0 length must equal m1");
  const Eigen::MatrixXd Lm = L.matrix(model.theta.size());
  const Eigen::VectorXd diff = Lm * model.theta - beta0;
  const Eigen::MatrixXd sigma_beta = Lm * cov.sigma * Lm.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_beta);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::IllConditioned, "contrast covariance is not positive definite");
  }
  const Eigen::VectorXd diag = sigma_beta.diagonal();
  if (diag.minCoeff() <= 0.0 || (llt.matrixL().toDenseMatrix().diagonal().array().square().minCoeff() /
                                  diag.maxCoeff()) < 1e-14) {
    throw Error(ErrorKind::IllConditioned, "contrast covariance is near-singular");
  }

  WaldStatistics s;
  s.n = model.n;
  s.m = model.m();
  s.m1 = L.m1();
  const double nn = static_cast<double>(model.n);
  s.t_squared = nn * diff.dot(llt.solve(diff));
  if (s.m1 == 1) s.z = diff(0) / std::sqrt(sigma_beta(0, 0) / nn);
  if (model.family.kind == Family::Linear) {
    s.f_stat = s.t_squared / static_cast<double>(s.m1);
    if (s.z) s.t_stat = *s.z;
  }
  return s;
}

ResiEstimate resi_unsigned(const WaldStatistics& s) {
  const double n = static_cast<double>(s.n);
  const double v = std::sqrt(std::max(0.0, (s.t_squared - static_cast<double>(s.m1)) / n));
  return {v, ResiVariant::UnsignedChisq, 0.0, 0.0, s.m1, s.n};
}

ResiEstimate resi_signed(const WaldStatistics& s) {
  if (s.m1 != 1 || !s.z) throw Error(ErrorKind::SignedUndefined, "signed RESI requires a single tested coefficient");
  return {*s.z / std::sqrt(static_cast<double>(s.n)), ResiVariant::SignedZ, 0.0, 0.0, s.m1, s.n};
}

ResiEstimate resi_scaled(const WaldStatistics& s) {
  return {std::sqrt(s.t_squared / static_cast<double>(s.n)), ResiVariant::Scaled, 0.0, 0.0, s.m1, s.n};
}

ResiEstimate resi_f(const WaldStatistics& s) {
  if (!s.f_stat) throw Error(ErrorKind::Parameter, "F-based RESI requires the linear family");
  if (s.n <= s.m + 2) throw Error(ErrorKind::InsufficientDf, "F-based RESI requires n > m + 2");
  const double n = static_cast<double>(s.n);
  const double m = static_cast<double>(s.m);
  const double m1 = static_cast<double>(s.m1);
  const double num = *s.f_stat * m1 * (n - m - 2.0) - m1 * (n - m);
  return {std::sqrt(std::max(0.0, num / (n * (n - m)))), ResiVariant::UnsignedF, 0.0, 0.0, s.m1, s.n};
}

ResiEstimate resi_t(const WaldStatistics& s) {
  if (s.m1 != 1) throw Error(ErrorKind::SignedUndefined, "signed RESI requires a single tested coefficient");
  if (!s.t_stat) throw Error(ErrorKind::Parameter, "t-based RESI requires the linear family");
  if (s.n <= s.m + 2) throw Error(ErrorKind::InsufficientDf, "t-based RESI requires n > m + 2");
  const double n = static_cast<double>(s.n);
  const double nu = n - static_cast<double>(s.m);
  const double gamma_ratio = std::exp(dist::log_gamma(0.5 * nu) - dist::log_gamma(0.5 * (nu - 1.0)));
  const double v = *s.t_stat * std::sqrt(2.0) * gamma_ratio / std::sqrt(n * nu);
  return {v, ResiVariant::SignedT, 0.0, 0.0, s.m1, s.n};
}

ResiEstimate resi_point(const WaldStatistics& stats, ResiVariant variant) {
  switch (variant) {
    case ResiVariant::UnsignedChisq: return resi_unsigned(stats);
    case ResiVariant::SignedZ: return resi_signed(stats);
    case ResiVariant::Scaled: return resi_scaled(stats);
    case ResiVariant::UnsignedF: return resi_f(stats);
    case ResiVariant::SignedT: return resi_t(stats);
  }
  throw Error(ErrorKind::Parameter, "unknown RESI variant");
}

ResiEstimate with_variance(ResiEstimate est, double sigma_s_squared) {
  est.sigma_s = std::sqrt(sigma_s_squared);
  est.se = est.sigma_s / std::sqrt(static_cast<double>(est.n));
  return est;
}

}  // namespace resi
