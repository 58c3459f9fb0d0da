#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "resi/design.hpp"
#include "resi/models.hpp"

namespace resi {

struct WaldStatistics {
  double t_squared = 0.0;
  std::optional<double> z;       // m1 == 1
  std::optional<double> f_stat;  // linear family
  std::optional<double> t_stat;  // linear family, m1 == 1
  Eigen::Index m1 = 0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;  // regression coefficients, dispersion excluded
};

enum class ResiVariant { UnsignedChisq, SignedZ, Scaled, UnsignedF, SignedT };

std::string to_string(ResiVariant v);
ResiVariant parse_variant(const std::string& s);
inline bool is_signed(ResiVariant v) { return v == ResiVariant::SignedZ || v == ResiVariant::SignedT; }

struct ResiEstimate {
  double value = 0.0;
  ResiVariant variant = ResiVariant::UnsignedChisq;
  double sigma_s = 0.0;  // filled by with_variance
  double se = 0.0;       // sigma_s / sqrt(n)
  Eigen::Index m1 = 0;
  Eigen::Index n = 0;
};

/// T^2 = n (beta - beta0)^T (L Sigma L^T)^-1 (beta - beta0), plus z/F/t where defined.
WaldStatistics wald_statistics(const FittedModel& model, const CovarianceEstimate& cov,
                               const ContrastMatrix& L, const Eigen::VectorXd& beta0);
WaldStatistics wald_statistics(const FittedModel& model, const CovarianceEstimate& cov,
                               const ContrastMatrix& L);

/// sqrt(max(0, (T^2 - m1) / n))
ResiEstimate resi_unsigned(const WaldStatistics& stats);
/// Z / sqrt(n); m1 must be 1.
ResiEstimate resi_signed(const WaldStatistics& stats);
/// sqrt(T^2 / n)
ResiEstimate resi_scaled(const WaldStatistics& stats);
/// F-based unsigned estimator (linear only, n > m + 2).
ResiEstimate resi_f(const WaldStatistics& stats);
/// t-based signed estimator (linear only, m1 == 1, n > m + 2).
ResiEstimate resi_t(const WaldStatistics& stats);

ResiEstimate resi_point(const WaldStatistics& stats, ResiVariant variant);

/// Returns `est` with sigma_s = sqrt(sigma_s_squared) and se = sigma_s / sqrt(n).
ResiEstimate with_variance(ResiEstimate est, double sigma_s_squared);

}  // namespace resi
