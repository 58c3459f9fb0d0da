#pragma once

#include <Eigen/Dense>
#include <string>

#include "resi/design.hpp"

namespace resi {

enum class Family { Linear, Logistic };

struct ModelFamily {
  Family kind = Family::Linear;
  /// Appends the dispersion phi to theta with psi_phi = r^2 - phi (linear only).
  bool include_dispersion = false;

  static ModelFamily linear(bool include_dispersion = false) { return {Family::Linear, include_dispersion}; }
  static ModelFamily logistic() { return {Family::Logistic, false}; }
};

/// How Sigma_theta is estimated. HC0/HC3 are robust sandwich flavors.
enum class CovMode { HC0, HC3, Model };

enum class MeatFlavor { HC0, HC3 };

inline bool is_robust(CovMode mode) { return mode != CovMode::Model; }
/// HC3 for linear, HC0 for logistic.
CovMode default_cov_mode(Family family);

std::string to_string(Family family);
std::string to_string(CovMode mode);
Family parse_family(const std::string& s);
CovMode parse_cov_mode(const std::string& s);

/// The estimating function psi for one family on a fixed sample, evaluable at
/// any theta. theta holds the regression coefficients followed by phi when
/// the family carries a dispersion parameter.
class EstimatingEquation {
 public:
  EstimatingEquation(ModelFamily family, Eigen::MatrixXd X, Eigen::VectorXd y);

  const ModelFamily& family() const { return family_; }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  Eigen::Index n() const { return X_.rows(); }
  /// Number of regression coefficients.
  Eigen::Index m() const { return X_.cols(); }
  /// Length of theta (m, or m + 1 with dispersion).
  Eigen::Index dim() const { return m() + (family_.include_dispersion ? 1 : 0); }

  /// Hat-matrix diagonal of X (linear and logistic share the unweighted form;
  /// only linear HC3 consumes it).
  const Eigen::VectorXd& leverages() const { return leverages_; }

  /// n x dim matrix of psi_i(theta)^T. HC3 deflates linear residuals by (1 - h_ii).
  Eigen::MatrixXd psi(const Eigen::VectorXd& theta, MeatFlavor flavor = MeatFlavor::HC0) const;
  Eigen::VectorXd mean_psi(const Eigen::VectorXd& theta) const;

  /// -(1/n) sum psi'(theta).
  Eigen::MatrixXd bread_at(const Eigen::VectorXd& theta) const;
  /// (1/n) sum psi psi^T.
  Eigen::MatrixXd meat_at(const Eigen::VectorXd& theta, MeatFlavor flavor) const;

  /// Information matrix whose inverse is the model-based covariance of
  /// sqrt(n) theta-hat. Logistic: the bread. Linear: X^T X / (n phi) on the
  /// coefficient block and 1 / (2 phi^2) for phi, i.e. the normal-theory
  /// Fisher information. Without phi in theta, `fixed_phi` supplies it.
  Eigen::MatrixXd information_at(const Eigen::VectorXd& theta, double fixed_phi) const;

  /// Derivative tensors laid out as dim x dim^2: row k is vec(dM/dtheta_k)^T,
  /// vec column-major. The bread and meat tensors cover the coefficient block
  /// only (theta restricted to the first m entries).
  Eigen::MatrixXd bread_jacobian(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd meat_jacobian(const Eigen::VectorXd& theta, MeatFlavor flavor) const;
  Eigen::MatrixXd information_jacobian(const Eigen::VectorXd& theta, double fixed_phi) const;

 private:
  Eigen::VectorXd hc_weights(MeatFlavor flavor) const;

  ModelFamily family_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::VectorXd leverages_;
};

struct FittedModel {
  ModelFamily family;
  CovMode cov_mode = CovMode::HC3;
  Eigen::VectorXd theta;
  Eigen::MatrixXd bread;
  Eigen::MatrixXd meat;
  Eigen::Index n = 0;
  Eigen::VectorXd residuals;  // y - x^T theta (linear) or y - mu (logistic)
  Eigen::VectorXd leverages;  // linear only
  Eigen::VectorXd mu;         // logistic only
  /// Residual variance with denominator n - m (linear); 1 for logistic.
  double dispersion = 1.0;
  int iterations = 0;
  EstimatingEquation equation;

  Eigen::Index m() const { return equation.m(); }
  Eigen::VectorXd coefficients() const { return theta.head(equation.m()); }
  MeatFlavor meat_flavor() const { return cov_mode == CovMode::HC3 ? MeatFlavor::HC3 : MeatFlavor::HC0; }
};

struct CovarianceEstimate {
  Eigen::MatrixXd sigma;  // covariance of sqrt(n) (theta-hat - theta)
  CovMode mode = CovMode::HC3;
};

/// Solves the sample estimating equation. Linear in closed form; logistic by
/// damped Newton (step halving, at most 30 halvings) until max |score| <= 1e-10.
FittedModel fit(ModelFamily family, const DesignMatrix& design, const Eigen::VectorXd& y,
                CovMode mode);
FittedModel fit(ModelFamily family, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                CovMode mode);

Eigen::MatrixXd bread(const FittedModel& model);
/// HC3 is linear-only; requesting it for logistic throws UnsupportedFlavor.
Eigen::MatrixXd meat(const FittedModel& model, MeatFlavor flavor);
/// Robust: A^-1 B A^-T. Model-based: inverse information (phi-hat with
/// denominator n - m for linear). Throws IllConditioned when cond(A) > 1e12.
CovarianceEstimate covariance(const FittedModel& model);

/// JSON with fields theta, bread, meat, cov_mode, n.
std::string to_json(const FittedModel& model);

/// Numerically stable logistic function.
double expit(double eta);

}  // namespace resi
