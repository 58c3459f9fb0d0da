#pragma once

#include <Eigen/Dense>

#include "resi/design.hpp"
#include "resi/intervals.hpp"

namespace resi {

enum class CohenKind { D, F };

/// Classical standardized effect with a noncentral-distribution interval.
/// Both indices assume normal, homoskedastic errors.
struct CohenEstimate {
  double value = 0.0;
  CohenKind kind = CohenKind::D;
  ConfidenceInterval ci;
  double df1 = 0.0;
  double df2 = 0.0;
};

/// d = (mean1 - mean0) / pooled SD; interval by inverting the noncentral t in
/// its noncentrality.
CohenEstimate cohens_d(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double alpha);

/// f = sqrt(F m1 / (n - m)) from the classical OLS F test of the contrast;
/// interval sqrt(lambda / n) from inverting the noncentral F. Noncentrality
/// bounds below 0 are clamped at 0.
CohenEstimate cohens_f(const DesignMatrix& design, const Eigen::VectorXd& y, const ContrastMatrix& L,
                       double alpha);
CohenEstimate cohens_f(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ContrastMatrix& L,
                       double alpha);

}  // namespace resi
