#pragma once

// Delta-method variance of the plug-in RESI S(theta-hat), with the total
// derivative of S taken through theta directly and through the bread and
// meat (or information) matrices that themselves depend on theta.

#include <Eigen/Dense>

#include "resi/design.hpp"
#include "resi/models.hpp"

namespace resi {

/// Which covariance enters S and which Sigma_theta weighs its gradient.
enum class VarianceForm {
  Robust,         // S from A^-1 B A^-1, Sigma_theta = sandwich
  ModelSandwich,  // S from the model-based covariance, Sigma_theta = sandwich
  Model,          // S and Sigma_theta both model-based (correct likelihood)
};

VarianceForm default_variance_form(CovMode mode);

/// Chain-rule inputs at theta-hat. `theta` here is the coordinate system of the
/// chosen form: the m coefficients for Robust, the full theta (with phi when
/// present) for the model forms. For the model forms "A" denotes the
/// information matrix and the B entries are empty.
struct DerivativeBundle {
  Eigen::VectorXd dS_dtheta;        // total derivative
  Eigen::VectorXd partial_theta;    // dS/dtheta holding A, B fixed
  Eigen::VectorXd dS_dA;            // dS/dvec(A)
  Eigen::VectorXd dS_dB;            // dS/dvec(B)
  Eigen::MatrixXd dA_dtheta;        // dim x dim^2, row k = vec(dA/dtheta_k)^T
  Eigen::MatrixXd dB_dtheta;
  Eigen::MatrixXd sigma_theta;      // covariance weighing the gradient
  double s = 0.0;                   // S(theta-hat) in this form (signed when requested)
};

/// Gradients are undefined for the unsigned S at 0; below this the engine
/// throws BoundaryGradient and resi_variance falls back to sigma_S = 1.
double boundary_threshold(Eigen::Index m1);

/// Analytic bundle. beta0 is fixed at 0. Throws BoundaryGradient for
/// unsigned S-tilde <= 1e-8 / sqrt(m1), SignedUndefined for signed m1 > 1.
DerivativeBundle derivative_bundle(const FittedModel& model, const ContrastMatrix& L,
                                   VarianceForm form, bool is_signed);

/// sigma_S^2 = (dS/dtheta)^T Sigma_theta (dS/dtheta); 1.0 at the null boundary.
double resi_variance(const FittedModel& model, const ContrastMatrix& L, VarianceForm form,
                     bool is_signed);

/// The plug-in map theta* -> S(theta*), recomputing the bread, meat or
/// information matrix on the fitted sample at theta*.
double plugin_resi(const FittedModel& model, const ContrastMatrix& L, VarianceForm form,
                   bool is_signed, const Eigen::VectorXd& theta);

/// Central-difference gradient of plugin_resi at theta-hat. This is the
/// extension path for estimating equations without analytic tensors.
Eigen::VectorXd finite_difference_gradient(const FittedModel& model, const ContrastMatrix& L,
                                           VarianceForm form, bool is_signed, double step = 1e-5);

/// The theta vector the chosen form differentiates with respect to.
Eigen::VectorXd form_theta(const FittedModel& model, VarianceForm form);

}  // namespace resi
